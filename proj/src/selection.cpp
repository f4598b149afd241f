#include "ccsel/selection.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <unordered_map>

#include "ccsel/errors.hpp"
#include "json.hpp"

namespace ccsel {

using nlohmann::json;

std::vector<std::string> rank_pool(const std::vector<ScoredUtterance> &pool) {
  if (pool.empty()) throw DataError("rank_pool: empty pool");
  std::vector<const ScoredUtterance *> order;
  order.reserve(pool.size());
  for (const auto &s : pool) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const ScoredUtterance *a, const ScoredUtterance *b) {
              if (a->confidence != b->confidence) {
                return a->confidence > b->confidence;
              }
              return a->id < b->id;
            });
  std::vector<std::string> ids;
  ids.reserve(order.size());
  for (const auto *s : order) ids.push_back(s->id);
  return ids;
}

namespace {

std::vector<std::string> slice_range(std::vector<std::string> ranked,
                                     const PercentileRange &range) {
  if (range.lo_pct < 0.0 || range.hi_pct > 100.0 ||
      range.lo_pct >= range.hi_pct) {
    throw DataError("select: percentile range outside [0,100] or empty");
  }
  if (range.anchor == RangeAnchor::Bottom) {
    std::reverse(ranked.begin(), ranked.end());
  }
  const auto m = static_cast<double>(ranked.size());
  const auto lo = static_cast<std::size_t>(std::floor(range.lo_pct * m / 100.0));
  const auto hi = static_cast<std::size_t>(std::floor(range.hi_pct * m / 100.0));
  std::vector<std::string> out(ranked.begin() + static_cast<std::ptrdiff_t>(lo),
                               ranked.begin() + static_cast<std::ptrdiff_t>(hi));
  return out;
}

}  // namespace

std::string pool_hash(const std::vector<ScoredUtterance> &pool) {
  // FNV-1a over "id:confidence" lines.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](const std::string &s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
  };
  char buf[64];
  for (const auto &s : pool) {
    mix(s.id);
    std::snprintf(buf, sizeof(buf), ":%.17g;", s.confidence);
    mix(buf);
  }
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

SelectionManifest select(const std::vector<ScoredUtterance> &pool,
                         const PercentileRange &range,
                         LabelSource label_source) {
  SelectionManifest m;
  m.ids = slice_range(rank_pool(pool), range);
  m.label_sources.assign(m.ids.size(), label_source);
  m.pool_hash = pool_hash(pool);
  return m;
}

PercentileRange recommend(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::Supervised:
      return PercentileRange::penultimate();
    case SelectionMode::SemiSupervised:
    case SelectionMode::Combined:
      return PercentileRange::high();
  }
  throw DataError("recommend: unknown mode");
}

SelectionManifest select_with_policy(const std::vector<ScoredUtterance> &pool,
                                     SelectionMode mode) {
  if (mode == SelectionMode::Supervised) {
    auto m = select(pool, PercentileRange::penultimate(),
                    LabelSource::Reference);
    m.mode = mode;
    return m;
  }
  if (mode == SelectionMode::SemiSupervised) {
    auto m = select(pool, PercentileRange::high(), LabelSource::Hypothesis);
    m.mode = mode;
    return m;
  }
  // Combined: supervised penultimate plus semi-supervised high; the two
  // ranges are disjoint by construction for M >= 10.
  auto sup = select(pool, PercentileRange::penultimate(),
                    LabelSource::Reference);
  auto semi = select(pool, PercentileRange::high(), LabelSource::Hypothesis);
  SelectionManifest m;
  m.mode = SelectionMode::Combined;
  m.pool_hash = sup.pool_hash;
  m.ids = semi.ids;
  m.label_sources = semi.label_sources;
  m.ids.insert(m.ids.end(), sup.ids.begin(), sup.ids.end());
  m.label_sources.insert(m.label_sources.end(), sup.label_sources.begin(),
                         sup.label_sources.end());
  return m;
}

void emit_adaptation_set(const SelectionManifest &manifest,
                         const std::vector<Utterance> &corpus,
                         const std::string &path) {
  std::unordered_map<std::string, const Utterance *> by_id;
  for (const auto &u : corpus) by_id[u.id] = &u;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < manifest.ids.size(); ++i) {
    const auto it = by_id.find(manifest.ids[i]);
    if (it == by_id.end()) {
      throw DataError("emit_adaptation_set: unknown id " + manifest.ids[i]);
    }
    const Utterance &u = *it->second;
    const bool supervised = manifest.label_sources[i] == LabelSource::Reference;
    std::vector<std::string> labels;
    if (supervised) {
      labels = u.reference;
    } else {
      for (const auto &w : u.hypothesis) labels.push_back(w.text);
    }
    json hyp = json::array();
    for (const auto &w : u.hypothesis) {
      hyp.push_back(json{{"text", w.text},
                         {"am_score", w.am_score},
                         {"lm_score", w.lm_score},
                         {"duration_ms", w.duration_ms},
                         {"phone_count", w.phone_count}});
    }
    json j{{"id", u.id},
           {"labels", labels},
           {"label_source", supervised ? "reference" : "hypothesis"},
           {"hypothesis", std::move(hyp)}};
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

namespace {

std::string mode_name(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::Supervised:
      return "supervised";
    case SelectionMode::SemiSupervised:
      return "semi_supervised";
    case SelectionMode::Combined:
      return "combined";
  }
  return "supervised";
}

SelectionMode mode_from_name(const std::string &name) {
  if (name == "supervised") return SelectionMode::Supervised;
  if (name == "semi_supervised") return SelectionMode::SemiSupervised;
  if (name == "combined") return SelectionMode::Combined;
  throw DataError("unknown selection mode: " + name);
}

}  // namespace

void save_manifest(const SelectionManifest &manifest,
                   const std::string &path) {
  json sources = json::array();
  for (auto s : manifest.label_sources) {
    sources.push_back(s == LabelSource::Reference ? "reference" : "hypothesis");
  }
  json j{{"policy", {{"mode", mode_name(manifest.mode)}}},
         {"pool_hash", manifest.pool_hash},
         {"seed", manifest.seed},
         {"ids", manifest.ids},
         {"label_source", std::move(sources)}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump() << '\n';
  if (!out) throw DataError("write failed: " + path);
}

SelectionManifest load_manifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw DataError(std::string("manifest: malformed JSON: ") + e.what());
  }
  SelectionManifest m;
  m.mode = mode_from_name(j.at("policy").at("mode").get<std::string>());
  m.pool_hash = j.at("pool_hash").get<std::string>();
  m.seed = j.value("seed", std::uint64_t{0});
  m.ids = j.at("ids").get<std::vector<std::string>>();
  for (const auto &s : j.at("label_source")) {
    m.label_sources.push_back(s.get<std::string>() == "reference"
                                  ? LabelSource::Reference
                                  : LabelSource::Hypothesis);
  }
  if (m.ids.size() != m.label_sources.size()) {
    throw DataError("manifest: ids and label_source lengths differ");
  }
  return m;
}

}  // namespace ccsel
