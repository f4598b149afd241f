#include "ccsel/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "ccsel/errors.hpp"
#include "json.hpp"

namespace ccsel {

using nlohmann::json;

ToyAm init_toy_am(const ToyAmConfig &cfg, std::uint64_t seed) {
  ToyAm model;
  model.cfg = cfg;
  Rng rng(derive_seed(seed, 0x33));
  auto &w1 = model.params.add("am.w1", cfg.hidden, cfg.feature_dim);
  glorot_init(w1, cfg.feature_dim, cfg.hidden, rng);
  model.params.add("am.b1", cfg.hidden, 1);
  auto &w2 = model.params.add("am.w2", cfg.vocab_size, cfg.hidden);
  glorot_init(w2, cfg.hidden, cfg.vocab_size, rng);
  model.params.add("am.b2", cfg.vocab_size, 1);
  return model;
}

namespace {

struct AmCaches {
  Eigen::MatrixXd x, hidden_pre, hidden, logits, probs;
};

AmCaches am_forward(const ToyAm &model, const Eigen::MatrixXd &features) {
  if (features.cols() != model.cfg.feature_dim) {
    throw DataError("toy am: feature dimension mismatch");
  }
  AmCaches c;
  c.x = features;
  c.hidden = tanh_fwd(affine_forward(features, model.params.value.at("am.w1"),
                                     model.params.value.at("am.b1").col(0)));
  c.logits = affine_forward(c.hidden, model.params.value.at("am.w2"),
                            model.params.value.at("am.b2").col(0));
  c.probs = softmax_rows(c.logits);
  return c;
}

}  // namespace

Eigen::MatrixXd am_posteriors(const ToyAm &model,
                              const Eigen::MatrixXd &features) {
  return am_forward(model, features).probs;
}

std::vector<int> decode(const ToyAm &model, const Eigen::MatrixXd &features) {
  const Eigen::MatrixXd p = am_posteriors(model, features);
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    int best = 0;
    double best_p = p(r, 0);
    for (Eigen::Index v = 1; v < p.cols(); ++v) {
      if (p(r, v) > best_p) {  // strict: ties keep the lowest index
        best_p = p(r, v);
        best = static_cast<int>(v);
      }
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

double toy_am_loss(ToyAm &model, const Eigen::MatrixXd &features,
                   const Eigen::MatrixXd &targets, bool compute_grads) {
  const auto c = am_forward(model, features);
  auto lr = ce_loss_soft(c.logits, targets);
  const double batch = static_cast<double>(features.rows());
  if (!compute_grads) return lr.loss / batch;
  Eigen::MatrixXd dlogits = lr.grad / batch;
  Eigen::MatrixXd dh = affine_backward(
      c.hidden, model.params.value.at("am.w2"), dlogits,
      model.params.grad.at("am.w2"), model.params.grad.at("am.b2"));
  dh = tanh_backward(c.hidden, dh);
  affine_backward(c.x, model.params.value.at("am.w1"), dh,
                  model.params.grad.at("am.w1"),
                  model.params.grad.at("am.b1"));
  return lr.loss / batch;
}

namespace {

Eigen::MatrixXd one_hot(const std::vector<int> &labels, int vocab) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(labels.size()), vocab);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || labels[r] >= vocab) {
      throw DataError("label out of vocabulary range");
    }
    t(static_cast<Eigen::Index>(r), labels[r]) = 1.0;
  }
  return t;
}

void train_epochs(ToyAm &model, const Eigen::MatrixXd &features,
                  const Eigen::MatrixXd &targets, const TrainConfig &tcfg) {
  Optimizer opt(tcfg);
  const Eigen::Index n = features.rows();
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    Rng rng(derive_seed(tcfg.seed, 3000 + static_cast<std::uint64_t>(epoch)));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
      Eigen::MatrixXd x(end - start, features.cols());
      Eigen::MatrixXd t(end - start, targets.cols());
      for (std::size_t r = start; r < end; ++r) {
        x.row(static_cast<Eigen::Index>(r - start)) = features.row(order[r]);
        t.row(static_cast<Eigen::Index>(r - start)) = targets.row(order[r]);
      }
      model.params.zero_grad();
      toy_am_loss(model, x, t, true);
      opt.step(model.params);
    }
  }
}

}  // namespace

ToyAm train_toy_am(const std::vector<AmUtterance> &corpus,
                   const ToyAmConfig &cfg, const TrainConfig &tcfg) {
  if (corpus.empty()) throw DataError("train_toy_am: empty corpus");
  std::size_t n_tokens = 0;
  for (const auto &u : corpus) n_tokens += u.labels.size();
  Eigen::MatrixXd features(static_cast<Eigen::Index>(n_tokens),
                           cfg.feature_dim);
  std::vector<int> labels;
  labels.reserve(n_tokens);
  Eigen::Index row = 0;
  for (const auto &u : corpus) {
    features.block(row, 0, u.features.rows(), cfg.feature_dim) = u.features;
    row += u.features.rows();
    labels.insert(labels.end(), u.labels.begin(), u.labels.end());
  }
  ToyAm model = init_toy_am(cfg, tcfg.seed);
  train_epochs(model, features, one_hot(labels, cfg.vocab_size), tcfg);
  return model;
}

Eigen::MatrixXd interpolate_targets(const Eigen::MatrixXd &label_dist,
                                    const Eigen::MatrixXd &base_posteriors,
                                    double lambda) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw DataError("interpolate_targets: lambda outside [0,1]");
  }
  if (label_dist.rows() != base_posteriors.rows() ||
      label_dist.cols() != base_posteriors.cols()) {
    throw DataError("interpolate_targets: shape mismatch");
  }
  for (Eigen::Index r = 0; r < label_dist.rows(); ++r) {
    if (std::abs(label_dist.row(r).sum() - 1.0) > 1e-9 ||
        std::abs(base_posteriors.row(r).sum() - 1.0) > 1e-9) {
      throw DataError("interpolate_targets: row is not a distribution");
    }
  }
  return (1.0 - lambda) * label_dist + lambda * base_posteriors;
}

ToyAm adapt(const ToyAm &base, const std::vector<AdaptationSample> &samples,
            const KldConfig &cfg) {
  if (samples.empty()) throw DataError("adapt: empty adaptation set");
  Eigen::MatrixXd features(static_cast<Eigen::Index>(samples.size()),
                           base.cfg.feature_dim);
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    features.row(static_cast<Eigen::Index>(i)) = samples[i].features.transpose();
    labels.push_back(samples[i].label);
  }
  // Targets use the frozen base posteriors; the base model is not mutated.
  const Eigen::MatrixXd base_post = am_posteriors(base, features);
  const Eigen::MatrixXd targets = interpolate_targets(
      one_hot(labels, base.cfg.vocab_size), base_post, cfg.lambda);
  ToyAm adapted;
  adapted.cfg = base.cfg;
  adapted.params.value = base.params.value;
  for (const auto &[name, v] : base.params.value) {
    adapted.params.grad[name] = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  }
  train_epochs(adapted, features, targets, cfg.train);
  return adapted;
}

double token_error_rate(const ToyAm &model,
                        const std::vector<AmUtterance> &corpus) {
  std::size_t wrong = 0, total = 0;
  for (const auto &u : corpus) {
    const auto hyp = decode(model, u.features);
    for (std::size_t t = 0; t < u.labels.size(); ++t) {
      if (hyp[t] != u.labels[t]) ++wrong;
    }
    total += u.labels.size();
  }
  if (total == 0) throw DataError("token_error_rate: empty corpus");
  return static_cast<double>(wrong) / static_cast<double>(total);
}

std::vector<ScoredUtterance> score_am_pool(const ToyAm &model,
                                           const std::vector<AmUtterance> &pool,
                                           std::int64_t token_duration_ms) {
  std::vector<ScoredUtterance> out;
  out.reserve(pool.size());
  for (const auto &u : pool) {
    const Eigen::MatrixXd p = am_posteriors(model, u.features);
    ScoredUtterance s;
    s.id = u.id;
    double conf = 0.0;
    std::size_t correct = 0;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      Eigen::Index best;
      conf += p.row(r).maxCoeff(&best);
      if (static_cast<int>(best) == u.labels[static_cast<std::size_t>(r)]) {
        ++correct;
      }
    }
    s.confidence = conf / static_cast<double>(p.rows());
    s.accuracy = static_cast<double>(correct) / static_cast<double>(p.rows());
    s.n_words = static_cast<std::int64_t>(u.labels.size());
    s.total_duration_ms =
        token_duration_ms * static_cast<std::int64_t>(u.labels.size());
    out.push_back(std::move(s));
  }
  return out;
}

void save_toy_am(const ToyAm &model, const std::string &path) {
  json params = json::object();
  for (const auto &[name, m] : model.params.value) {
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    params[name] =
        json{{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
  }
  json j{{"version", 1},
         {"kind", "toy_am"},
         {"arch",
          {{"feature_dim", model.cfg.feature_dim},
           {"vocab_size", model.cfg.vocab_size},
           {"hidden", model.cfg.hidden}}},
         {"params", std::move(params)}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump() << '\n';
  if (!out) throw DataError("write failed: " + path);
}

ToyAm load_toy_am(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open toy-am checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw DataError(std::string("toy-am checkpoint: malformed JSON: ") +
                    e.what());
  }
  if (j.at("kind").get<std::string>() != "toy_am") {
    throw DataError("toy-am checkpoint: wrong kind");
  }
  ToyAm model;
  model.cfg.feature_dim = j.at("arch").at("feature_dim").get<int>();
  model.cfg.vocab_size = j.at("arch").at("vocab_size").get<int>();
  model.cfg.hidden = j.at("arch").at("hidden").get<int>();
  for (const auto &[name, entry] : j.at("params").items()) {
    const auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 2) {
      throw DataError("toy-am checkpoint: bad shape for " + name);
    }
    auto &m = model.params.add(name, shape[0], shape[1]);
    const auto &data = entry.at("data");
    if (static_cast<Eigen::Index>(data.size()) != m.size()) {
      throw DataError("toy-am checkpoint: data size mismatch for " + name);
    }
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = data[static_cast<std::size_t>(k++)].get<double>();
      }
    }
  }
  return model;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<std::string> experiment_policies() {
  return {"supervised-all",  "supervised-top20", "supervised-penultimate",
          "semi-all",        "semi-top20",       "semi-penultimate",
          "combined"};
}

namespace {

struct PolicySpec {
  bool supervised = true;   // label source for single-mode policies
  bool combined = false;
  PercentileRange range = PercentileRange::all();
};

PolicySpec parse_policy(const std::string &name) {
  PolicySpec p;
  if (name == "combined") {
    p.combined = true;
    return p;
  }
  std::string mode, range;
  const auto dash = name.find('-');
  if (dash == std::string::npos) throw UsageError("unknown policy: " + name);
  mode = name.substr(0, dash);
  range = name.substr(dash + 1);
  if (mode == "supervised") {
    p.supervised = true;
  } else if (mode == "semi") {
    p.supervised = false;
  } else {
    throw UsageError("unknown policy: " + name);
  }
  if (range == "all") {
    p.range = PercentileRange::all();
  } else if (range == "top20") {
    p.range = PercentileRange::high();
  } else if (range == "penultimate") {
    p.range = PercentileRange::penultimate();
  } else {
    throw UsageError("unknown policy range: " + name);
  }
  return p;
}

}  // namespace

ExperimentReport run_table4_experiment(
    const ToyAm &base, const std::vector<AmUtterance> &adaptation_pool,
    const std::vector<AmUtterance> &test_split,
    const std::vector<std::string> &policies, const KldConfig &cfg,
    const std::vector<std::uint64_t> &seeds) {
  if (seeds.empty()) throw UsageError("experiment: no seeds given");
  ExperimentReport report;
  report.lambda = cfg.lambda;
  report.seeds = seeds;
  report.baseline_wer = token_error_rate(base, test_split);

  const auto scored = score_am_pool(base, adaptation_pool);
  std::unordered_map<std::string, const AmUtterance *> by_id;
  for (const auto &u : adaptation_pool) by_id[u.id] = &u;

  // Hypothesis labels come from the frozen base model's decode.
  std::unordered_map<std::string, std::vector<int>> decoded;
  for (const auto &u : adaptation_pool) decoded[u.id] = decode(base, u.features);

  auto samples_for = [&](const std::vector<std::string> &ids,
                         const std::vector<LabelSource> &sources) {
    std::vector<AdaptationSample> samples;
    std::size_t n_tokens = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const AmUtterance &u = *by_id.at(ids[i]);
      const bool sup = sources[i] == LabelSource::Reference;
      const auto &labels = sup ? u.labels : decoded.at(ids[i]);
      for (Eigen::Index t = 0; t < u.features.rows(); ++t) {
        samples.push_back({u.features.row(t).transpose(),
                           labels[static_cast<std::size_t>(t)]});
      }
      n_tokens += labels.size();
    }
    return std::pair{samples, n_tokens};
  };

  for (std::size_t pi = 0; pi < policies.size(); ++pi) {
    const auto policy = parse_policy(policies[pi]);
    SelectionManifest manifest;
    if (policy.combined) {
      manifest = select_with_policy(scored, SelectionMode::Combined);
    } else {
      manifest = select(scored, policy.range,
                        policy.supervised ? LabelSource::Reference
                                          : LabelSource::Hypothesis);
    }
    auto [samples, n_tokens] =
        samples_for(manifest.ids, manifest.label_sources);
    PolicyResult result;
    result.policy = policies[pi];
    result.n_utterances = manifest.ids.size();
    result.n_hours_equivalent =
        static_cast<double>(n_tokens) * 250.0 / 3.6e6;
    for (std::uint64_t seed : seeds) {
      KldConfig run_cfg = cfg;
      run_cfg.train.seed = derive_seed(seed, pi);
      const ToyAm adapted = adapt(base, samples, run_cfg);
      const double wer = token_error_rate(adapted, test_split);
      result.wer_per_seed.push_back(wer);
      result.werr_per_seed.push_back(
          report.baseline_wer > 0.0
              ? 100.0 * (report.baseline_wer - wer) / report.baseline_wer
              : 0.0);
    }
    result.median_wer = median(result.wer_per_seed);
    result.median_werr = median(result.werr_per_seed);
    report.policies.push_back(std::move(result));
  }
  return report;
}

std::string experiment_report_to_json(const ExperimentReport &report) {
  json rows = json::array();
  for (const auto &p : report.policies) {
    rows.push_back(json{{"policy", p.policy},
                        {"wer_per_seed", p.wer_per_seed},
                        {"werr_per_seed", p.werr_per_seed},
                        {"median_wer", p.median_wer},
                        {"median_werr", p.median_werr},
                        {"n_utterances", p.n_utterances},
                        {"n_hours_equivalent", p.n_hours_equivalent}});
  }
  json j{{"baseline_wer", report.baseline_wer},
         {"lambda", report.lambda},
         {"seeds", report.seeds},
         {"policies", std::move(rows)}};
  return j.dump(2);
}

}  // namespace ccsel
