#include "ccsel/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "ccsel/errors.hpp"
#include "ccsel/rng.hpp"
#include "json.hpp"

namespace ccsel {

using nlohmann::json;

namespace {

std::string token_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%03d", index);
  return buf;
}

void validate(const CcDomainSpec &spec) {
  if (spec.vocab_size < 2) throw DataError("cc spec: vocab_size < 2");
  if (spec.min_len < 2 || spec.max_len < spec.min_len) {
    throw DataError("cc spec: bad utterance length bounds");
  }
  const double total = spec.p_sub + spec.p_del + spec.p_ins;
  if (spec.p_sub < 0 || spec.p_del < 0 || spec.p_ins < 0 || total >= 1.0) {
    throw DataError("cc spec: error probabilities invalid");
  }
  if (spec.burst_rho < 0.0 || spec.burst_rho > 1.0) {
    throw DataError("cc spec: burst_rho outside [0,1]");
  }
}

WordHyp sample_word(const std::string &text, bool correct,
                    const CcDomainSpec &spec, Rng &rng) {
  const Eigen::Vector4d &mu = correct ? spec.mu_correct : spec.mu_incorrect;
  Eigen::Vector4d x;
  for (int k = 0; k < 4; ++k) x(k) = mu(k) + spec.sigma(k) * rng.normal();
  WordHyp w;
  w.text = text;
  w.am_score = x(0);
  w.lm_score = x(1);
  w.duration_ms =
      std::max<std::int64_t>(1, std::llround(250.0 * std::exp(x(2))));
  w.phone_count = 1 + rng.poisson(std::max(0.1, x(3)));
  return w;
}

}  // namespace

std::vector<Utterance> gen_cc_corpus(const CcDomainSpec &spec, std::size_t n,
                                     GenCounters *counters) {
  validate(spec);
  std::vector<Utterance> out;
  out.reserve(n);
  GenCounters local;
  const double p_total = spec.p_sub + spec.p_del + spec.p_ins;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(spec.seed, i));
    Utterance u;
    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "cc-%06zu", i);
    u.id = idbuf;
    const int len =
        spec.min_len +
        static_cast<int>(rng.uniform_int(
            static_cast<std::uint64_t>(spec.max_len - spec.min_len + 1)));
    for (int k = 0; k < len; ++k) {
      u.reference.push_back(
          token_name(static_cast<int>(rng.uniform_int(spec.vocab_size))));
    }
    local.n_ref_words += u.reference.size();

    // After an error the total error mass rises from p to p + rho*(1-p),
    // split proportionally across the three error kinds.
    bool prev_error = false;
    for (const auto &ref_tok : u.reference) {
      double boost = 1.0;
      if (prev_error && p_total > 0.0) {
        boost = (p_total + spec.burst_rho * (1.0 - p_total)) / p_total;
      }
      const double ps = spec.p_sub * boost;
      const double pd = spec.p_del * boost;
      const double pi = spec.p_ins * boost;
      if (rng.uniform01() < pi) {
        u.hypothesis.push_back(sample_word(
            token_name(static_cast<int>(rng.uniform_int(spec.vocab_size))),
            false, spec, rng));
        ++local.n_ins;
        prev_error = true;
      }
      const double draw = rng.uniform01();
      if (draw < ps) {
        int alt;
        do {
          alt = static_cast<int>(rng.uniform_int(spec.vocab_size));
        } while (token_name(alt) == ref_tok);
        u.hypothesis.push_back(sample_word(token_name(alt), false, spec, rng));
        ++local.n_sub;
        prev_error = true;
      } else if (draw < ps + pd) {
        ++local.n_del;
        prev_error = true;
      } else {
        u.hypothesis.push_back(sample_word(ref_tok, true, spec, rng));
        prev_error = false;
      }
    }
    out.push_back(std::move(u));
  }
  if (counters) *counters = local;
  return out;
}

AmDomainSpec make_am_spec(int vocab_size, int feature_dim, double separation,
                          double sigma, std::uint64_t seed) {
  if (vocab_size < 2 || feature_dim < 1) {
    throw DataError("am spec: vocab_size >= 2 and feature_dim >= 1 required");
  }
  AmDomainSpec spec;
  spec.vocab_size = vocab_size;
  spec.feature_dim = feature_dim;
  spec.sigma = sigma;
  spec.seed = seed;
  Rng rng(derive_seed(seed, 0xA5));
  for (int v = 0; v < vocab_size; ++v) {
    Eigen::VectorXd mean(feature_dim);
    for (int k = 0; k < feature_dim; ++k) mean(k) = separation * rng.normal();
    spec.class_means.push_back(std::move(mean));
  }
  return spec;
}

AmDomainSpec shift_domain(const AmDomainSpec &spec,
                          const Eigen::VectorXd &delta) {
  if (delta.size() != spec.feature_dim) {
    throw DataError("shift_domain: delta dimension mismatch");
  }
  AmDomainSpec out = spec;
  for (auto &mean : out.class_means) mean += delta;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "shift(|d|=%.6g)", delta.norm());
  out.lineage += out.lineage.empty() ? buf : std::string(";") + buf;
  return out;
}

std::vector<AmUtterance> gen_am_corpus(const AmDomainSpec &spec,
                                       std::size_t n_utterances,
                                       int words_per_utt,
                                       std::uint64_t stream) {
  if (static_cast<int>(spec.class_means.size()) != spec.vocab_size) {
    throw DataError("am spec: class_means size != vocab_size");
  }
  std::vector<AmUtterance> out;
  out.reserve(n_utterances);
  for (std::size_t i = 0; i < n_utterances; ++i) {
    Rng rng(derive_seed(derive_seed(spec.seed, stream), i));
    AmUtterance u;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "am-%llu-%06zu",
                  static_cast<unsigned long long>(stream), i);
    u.id = idbuf;
    u.features.resize(words_per_utt, spec.feature_dim);
    for (int t = 0; t < words_per_utt; ++t) {
      const int label = static_cast<int>(rng.uniform_int(spec.vocab_size));
      u.labels.push_back(label);
      for (int k = 0; k < spec.feature_dim; ++k) {
        u.features(t, k) = spec.class_means[label](k) + spec.sigma * rng.normal();
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

double bayes_error_estimate(const AmDomainSpec &spec, std::size_t n_samples,
                            std::uint64_t seed) {
  Rng rng(seed);
  std::size_t wrong = 0;
  const double inv2s2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const int label = static_cast<int>(rng.uniform_int(spec.vocab_size));
    Eigen::VectorXd x(spec.feature_dim);
    for (int k = 0; k < spec.feature_dim; ++k) {
      x(k) = spec.class_means[label](k) + spec.sigma * rng.normal();
    }
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < spec.vocab_size; ++v) {
      const double score = -(x - spec.class_means[v]).squaredNorm() * inv2s2;
      if (score > best_score) {
        best_score = score;
        best = v;
      }
    }
    if (best != label) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(n_samples);
}

void save_am_corpus(const std::vector<AmUtterance> &corpus,
                    const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const auto &u : corpus) {
    json feats = json::array();
    for (Eigen::Index r = 0; r < u.features.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < u.features.cols(); ++c) {
        row.push_back(u.features(r, c));
      }
      feats.push_back(std::move(row));
    }
    json j{{"id", u.id}, {"features", std::move(feats)}, {"labels", u.labels}};
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

std::vector<AmUtterance> load_am_corpus(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open am corpus: " + path);
  std::vector<AmUtterance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      throw DataError(where + ": malformed JSON: " + e.what());
    }
    AmUtterance u;
    try {
      u.id = j.at("id").get<std::string>();
      u.labels = j.at("labels").get<std::vector<int>>();
      const auto &feats = j.at("features");
      if (feats.size() != u.labels.size()) {
        throw DataError(where + ": features/labels length mismatch");
      }
      if (feats.empty()) throw DataError(where + ": empty utterance");
      const std::size_t dim = feats[0].size();
      u.features.resize(static_cast<Eigen::Index>(feats.size()),
                        static_cast<Eigen::Index>(dim));
      for (std::size_t r = 0; r < feats.size(); ++r) {
        const auto row = feats[r].get<std::vector<double>>();
        if (row.size() != dim) {
          throw DataError(where + ": ragged feature rows");
        }
        for (std::size_t c = 0; c < dim; ++c) {
          u.features(static_cast<Eigen::Index>(r),
                     static_cast<Eigen::Index>(c)) = row[c];
        }
      }
    } catch (const DataError &) {
      throw;
    } catch (const json::exception &e) {
      throw DataError(where + ": schema violation: " + e.what());
    }
    out.push_back(std::move(u));
  }
  return out;
}

std::string cc_spec_to_json(const CcDomainSpec &spec) {
  auto vec4 = [](const Eigen::Vector4d &v) {
    return std::vector<double>{v(0), v(1), v(2), v(3)};
  };
  json j{{"vocab_size", spec.vocab_size}, {"p_sub", spec.p_sub},
         {"p_del", spec.p_del},           {"p_ins", spec.p_ins},
         {"min_len", spec.min_len},       {"max_len", spec.max_len},
         {"burst_rho", spec.burst_rho},   {"mu_correct", vec4(spec.mu_correct)},
         {"mu_incorrect", vec4(spec.mu_incorrect)},
         {"sigma", vec4(spec.sigma)},     {"seed", spec.seed}};
  return j.dump();
}

CcDomainSpec cc_spec_from_json(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw DataError(std::string("cc spec: malformed JSON: ") + e.what());
  }
  CcDomainSpec spec;
  auto vec4 = [&](const char *key, Eigen::Vector4d &v) {
    if (!j.contains(key)) return;
    const auto vals = j.at(key).get<std::vector<double>>();
    if (vals.size() != 4) throw DataError("cc spec: bad vector for key");
    for (int k = 0; k < 4; ++k) v(k) = vals[k];
  };
  spec.vocab_size = j.value("vocab_size", spec.vocab_size);
  spec.p_sub = j.value("p_sub", spec.p_sub);
  spec.p_del = j.value("p_del", spec.p_del);
  spec.p_ins = j.value("p_ins", spec.p_ins);
  spec.min_len = j.value("min_len", spec.min_len);
  spec.max_len = j.value("max_len", spec.max_len);
  spec.burst_rho = j.value("burst_rho", spec.burst_rho);
  vec4("mu_correct", spec.mu_correct);
  vec4("mu_incorrect", spec.mu_incorrect);
  vec4("sigma", spec.sigma);
  spec.seed = j.value("seed", spec.seed);
  validate(spec);
  return spec;
}

std::string am_spec_to_json(const AmDomainSpec &spec) {
  json means = json::array();
  for (const auto &m : spec.class_means) {
    means.push_back(std::vector<double>(m.begin(), m.end()));
  }
  json j{{"vocab_size", spec.vocab_size},
         {"feature_dim", spec.feature_dim},
         {"class_means", std::move(means)},
         {"sigma", spec.sigma},
         {"seed", spec.seed},
         {"lineage", spec.lineage}};
  return j.dump();
}

AmDomainSpec am_spec_from_json(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw DataError(std::string("am spec: malformed JSON: ") + e.what());
  }
  AmDomainSpec spec;
  try {
    spec.vocab_size = j.at("vocab_size").get<int>();
    spec.feature_dim = j.at("feature_dim").get<int>();
    for (const auto &m : j.at("class_means")) {
      const auto vals = m.get<std::vector<double>>();
      if (static_cast<int>(vals.size()) != spec.feature_dim) {
        throw DataError("am spec: class mean dimension mismatch");
      }
      spec.class_means.push_back(Eigen::Map<const Eigen::VectorXd>(
          vals.data(), static_cast<Eigen::Index>(vals.size())));
    }
    if (static_cast<int>(spec.class_means.size()) != spec.vocab_size) {
      throw DataError("am spec: class_means size != vocab_size");
    }
    spec.sigma = j.at("sigma").get<double>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.lineage = j.value("lineage", std::string{});
  } catch (const json::exception &e) {
    throw DataError(std::string("am spec: ") + e.what());
  }
  return spec;
}

}  // namespace ccsel
