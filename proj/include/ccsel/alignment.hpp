#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ccsel {

enum class EditKind { Match, Substitute, Delete, Insert };

struct EditOp {
  EditKind kind;
  std::optional<std::size_t> ref_index;  // absent for Insert
  std::optional<std::size_t> hyp_index;  // absent for Delete

  bool operator==(const EditOp &) const = default;
};

struct AlignmentResult {
  std::vector<EditOp> ops;
  std::size_t n_match = 0;
  std::size_t n_sub = 0;
  std::size_t n_del = 0;
  std::size_t n_ins = 0;
  // Per hypothesis word: true iff that word is a Match.
  std::vector<bool> correct_flags;
  // Deletions attributed to the gap ending at each hypothesis position;
  // trailing deletions go to the final position. Empty when hyp is empty.
  std::vector<std::size_t> dels_before;
};

// Levenshtein alignment, unit costs for Sub/Del/Ins. Backtrace ties broken
// Match > Substitute > Delete > Insert for deterministic output.
AlignmentResult align(const std::vector<std::string> &reference,
                      const std::vector<std::string> &hypothesis);

// (S+D+I)/ref_len. ref_len=0: 0 for an empty hypothesis, otherwise n_ins
// (one point per inserted word) so nuisance recordings stay scoreable.
double wer(const AlignmentResult &result, std::size_t ref_len);

// Per-step regression labels y_1..y_N for the sequence confidence model:
// y_n = clamp((correct_n - del_n)/n, 0, 1). With count_deletions=false the
// deletion term is dropped and y_n = correct_n/n.
std::vector<double> cumulative_labels(const AlignmentResult &result,
                                      bool count_deletions = true);

}  // namespace ccsel
