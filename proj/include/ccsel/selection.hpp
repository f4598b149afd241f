#pragma once

#include <string>
#include <vector>

#include "ccsel/corpus.hpp"

namespace ccsel {

enum class RangeAnchor { Top, Bottom };

struct PercentileRange {
  RangeAnchor anchor = RangeAnchor::Top;
  double lo_pct = 0.0;
  double hi_pct = 100.0;

  // Named presets from the selection recommendations.
  static PercentileRange high() { return {RangeAnchor::Top, 0.0, 20.0}; }
  static PercentileRange mid() { return {RangeAnchor::Top, 20.0, 60.0}; }
  static PercentileRange penultimate() {
    return {RangeAnchor::Bottom, 10.0, 30.0};
  }
  static PercentileRange very_low() { return {RangeAnchor::Bottom, 0.0, 10.0}; }
  static PercentileRange all() { return {RangeAnchor::Top, 0.0, 100.0}; }

  bool operator==(const PercentileRange &) const = default;
};

enum class SelectionMode { Supervised, SemiSupervised, Combined };

enum class LabelSource { Reference, Hypothesis };

struct SelectionManifest {
  std::vector<std::string> ids;  // ordered by rank within each range
  std::vector<LabelSource> label_sources;  // one per id
  SelectionMode mode = SelectionMode::Supervised;
  std::string pool_hash;
  std::uint64_t seed = 0;
};

// Descending confidence, ties broken by id ascending.
std::vector<std::string> rank_pool(const std::vector<ScoredUtterance> &pool);

// top[lo,hi): ranked indices [floor(lo*M/100), floor(hi*M/100));
// bottom[lo,hi): the same on the reversed ranking.
SelectionManifest select(const std::vector<ScoredUtterance> &pool,
                         const PercentileRange &range,
                         LabelSource label_source = LabelSource::Reference);

// Recommended ranges: supervised -> Penultimate (bottom 10-30%),
// semi-supervised -> High (top 20%). Combined unions the two.
PercentileRange recommend(SelectionMode mode);

SelectionManifest select_with_policy(const std::vector<ScoredUtterance> &pool,
                                     SelectionMode mode);

// Writes the adaptation set as JSON Lines: supervised rows keep reference
// labels; semi-supervised rows carry the hypothesis tokens as labels and no
// reference field.
void emit_adaptation_set(const SelectionManifest &manifest,
                         const std::vector<Utterance> &corpus,
                         const std::string &path);

// FNV-1a over ids and confidences, recorded in manifest provenance.
std::string pool_hash(const std::vector<ScoredUtterance> &pool);

void save_manifest(const SelectionManifest &manifest, const std::string &path);
SelectionManifest load_manifest(const std::string &path);

}  // namespace ccsel
