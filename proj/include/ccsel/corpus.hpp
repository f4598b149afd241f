#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ccsel {

// One recognized word with its confidence feature tuple.
struct WordHyp {
  std::string text;
  double am_score = 0.0;    // log-domain acoustic score
  double lm_score = 0.0;    // log-domain LM score
  std::int64_t duration_ms = 1;
  std::int64_t phone_count = 1;

  bool operator==(const WordHyp &) const = default;
};

struct Utterance {
  std::string id;
  std::vector<std::string> reference;  // may be empty
  std::vector<WordHyp> hypothesis;     // may be empty
  std::optional<std::string> domain_tag;

  bool operator==(const Utterance &) const = default;
};

// One row of a scored pool: utterance-level confidence, plus accuracy when
// the reference is known.
struct ScoredUtterance {
  std::string id;
  double confidence = 0.0;  // in [0,1]
  std::optional<double> accuracy;
  std::int64_t n_words = 0;
  std::int64_t total_duration_ms = 0;

  bool operator==(const ScoredUtterance &) const = default;
};

// JSON Lines corpus I/O. Malformed lines and duplicate ids raise DataError
// naming the line number / id.
std::vector<Utterance> load_corpus(const std::string &path);
void save_corpus(const std::vector<Utterance> &utterances,
                 const std::string &path);

std::vector<ScoredUtterance> load_scored_pool(const std::string &path);
void save_scored_pool(const std::vector<ScoredUtterance> &pool,
                      const std::string &path);

}  // namespace ccsel
