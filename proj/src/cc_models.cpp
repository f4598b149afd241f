#include "ccsel/cc_models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ccsel/alignment.hpp"
#include "ccsel/errors.hpp"
#include "json.hpp"

namespace ccsel {

using nlohmann::json;

namespace {

std::vector<Eigen::VectorXd> stacked_word_features(const Utterance &utt,
                                                   const ContextConfig &ctx) {
  std::vector<Eigen::VectorXd> raw;
  raw.reserve(utt.hypothesis.size());
  for (const auto &w : utt.hypothesis) raw.push_back(featurize(w));
  if (raw.empty()) return {};
  return stack_context(raw, ctx);
}

void init_mlp(CcModel &model, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x11));
  int in = model.mlp_cfg.context.stacked_dim();
  int layer = 0;
  for (int h : model.mlp_cfg.hidden_sizes) {
    auto &w = model.params.add("mlp.w" + std::to_string(layer), h, in);
    glorot_init(w, in, h, rng);
    model.params.add("mlp.b" + std::to_string(layer), h, 1);
    in = h;
    ++layer;
  }
  auto &hw = model.params.add("mlp.head_w", 1, in);
  glorot_init(hw, in, 1, rng);
  model.params.add("mlp.head_b", 1, 1);
}

void init_lstm(CcModel &model, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x22));
  const int cells = model.lstm_cfg.cells;
  int in = model.lstm_cfg.context.stacked_dim();
  for (int l = 0; l < model.lstm_cfg.layers; ++l) {
    const std::string prefix = "lstm.l" + std::to_string(l) + ".";
    auto &wx = model.params.add(prefix + "wx", 4 * cells, in);
    glorot_init(wx, in, cells, rng);
    auto &wh = model.params.add(prefix + "wh", 4 * cells, cells);
    glorot_init(wh, cells, cells, rng);
    auto &b = model.params.add(prefix + "b", 4 * cells, 1);
    b.block(cells, 0, cells, 1).setConstant(1.0);  // forget-gate bias
    in = cells;
  }
  auto &hw = model.params.add("lstm.head_w", 1, cells);
  glorot_init(hw, cells, 1, rng);
  model.params.add("lstm.head_b", 1, 1);
}

// Forward pass through the MLP: tanh hidden layers, sigmoid head.
struct MlpCaches {
  std::vector<Eigen::MatrixXd> layer_in;   // input of each affine
  std::vector<Eigen::MatrixXd> layer_out;  // tanh output of each hidden
  Eigen::MatrixXd probs;                   // column vector of sigmoids
};

MlpCaches mlp_forward(const CcModel &model, const Eigen::MatrixXd &x) {
  MlpCaches c;
  Eigen::MatrixXd cur = x;
  for (std::size_t l = 0; l < model.mlp_cfg.hidden_sizes.size(); ++l) {
    const auto &w = model.params.value.at("mlp.w" + std::to_string(l));
    const auto &b = model.params.value.at("mlp.b" + std::to_string(l));
    c.layer_in.push_back(cur);
    cur = tanh_fwd(affine_forward(cur, w, b.col(0)));
    c.layer_out.push_back(cur);
  }
  const auto &hw = model.params.value.at("mlp.head_w");
  const auto &hb = model.params.value.at("mlp.head_b");
  c.layer_in.push_back(cur);
  c.probs = sigmoid(affine_forward(cur, hw, hb.col(0)));
  return c;
}

struct LstmForward {
  std::vector<std::vector<LstmCache>> caches;  // [layer][step]
  std::vector<double> preds;
};

LstmForward lstm_forward(const CcModel &model,
                         const std::vector<Eigen::VectorXd> &inputs) {
  const int layers = model.lstm_cfg.layers;
  const int cells = model.lstm_cfg.cells;
  const std::size_t steps = inputs.size();
  LstmForward fwd;
  fwd.caches.assign(layers, {});
  std::vector<Eigen::VectorXd> h(layers, Eigen::VectorXd::Zero(cells));
  std::vector<Eigen::VectorXd> c(layers, Eigen::VectorXd::Zero(cells));
  const auto &hw = model.params.value.at("lstm.head_w");
  const double hb = model.params.value.at("lstm.head_b")(0, 0);
  for (std::size_t t = 0; t < steps; ++t) {
    Eigen::VectorXd x = inputs[t];
    for (int l = 0; l < layers; ++l) {
      const std::string prefix = "lstm.l" + std::to_string(l) + ".";
      auto cache = lstm_cell_forward(
          x, h[l], c[l], model.params.value.at(prefix + "wx"),
          model.params.value.at(prefix + "wh"),
          model.params.value.at(prefix + "b").col(0));
      h[l] = cache.h;
      c[l] = cache.c;
      x = cache.h;
      fwd.caches[l].push_back(std::move(cache));
    }
    const double z = hw.row(0).dot(h[layers - 1]) + hb;
    fwd.preds.push_back(1.0 / (1.0 + std::exp(-z)));
  }
  return fwd;
}

}  // namespace

std::vector<WordSample> balance_classes(const std::vector<WordSample> &samples,
                                        std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (samples[i].label > 0.5 ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty()) {
    throw DataError("balance_classes: a class is absent");
  }
  Rng rng(seed);
  auto &majority = pos.size() >= neg.size() ? pos : neg;
  auto &minority = pos.size() >= neg.size() ? neg : pos;
  rng.shuffle(majority);
  majority.resize(minority.size());
  std::vector<std::size_t> keep;
  keep.reserve(2 * minority.size());
  keep.insert(keep.end(), majority.begin(), majority.end());
  keep.insert(keep.end(), minority.begin(), minority.end());
  rng.shuffle(keep);
  std::vector<WordSample> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(samples[i]);
  return out;
}

double mlp_batch_loss(CcModel &model, const Eigen::MatrixXd &x,
                      const Eigen::VectorXd &labels, bool compute_grads) {
  const auto c = mlp_forward(model, x);
  const Eigen::Index batch = x.rows();
  double loss = 0.0;
  for (Eigen::Index r = 0; r < batch; ++r) {
    const double p = c.probs(r, 0);
    const double y = labels(r);
    loss += -(y * std::log(std::max(p, 1e-300)) +
              (1.0 - y) * std::log(std::max(1.0 - p, 1e-300)));
  }
  loss /= static_cast<double>(batch);
  if (!compute_grads) return loss;

  // BCE through sigmoid: dz = (p - y) / batch.
  Eigen::MatrixXd dz = (c.probs.col(0) - labels) / static_cast<double>(batch);
  Eigen::MatrixXd cur = affine_backward(
      c.layer_in.back(), model.params.value.at("mlp.head_w"), dz,
      model.params.grad.at("mlp.head_w"), model.params.grad.at("mlp.head_b"));
  for (int l = static_cast<int>(model.mlp_cfg.hidden_sizes.size()) - 1; l >= 0;
       --l) {
    cur = tanh_backward(c.layer_out[l], cur);
    cur = affine_backward(c.layer_in[l],
                          model.params.value.at("mlp.w" + std::to_string(l)),
                          cur,
                          model.params.grad.at("mlp.w" + std::to_string(l)),
                          model.params.grad.at("mlp.b" + std::to_string(l)));
  }
  return loss;
}

double lstm_utterance_loss(CcModel &model,
                           const std::vector<Eigen::VectorXd> &inputs,
                           const std::vector<double> &targets,
                           bool compute_grads) {
  if (inputs.empty() || inputs.size() != targets.size()) {
    throw DataError("lstm_utterance_loss: bad input lengths");
  }
  const auto fwd = lstm_forward(model, inputs);
  double loss = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const double d = fwd.preds[t] - targets[t];
    loss += d * d;
  }
  if (!compute_grads) return loss;

  const int layers = model.lstm_cfg.layers;
  const int cells = model.lstm_cfg.cells;
  const int steps = static_cast<int>(inputs.size());
  const auto &hw = model.params.value.at("lstm.head_w");
  auto &dhw = model.params.grad.at("lstm.head_w");
  auto &dhb = model.params.grad.at("lstm.head_b");

  std::vector<Eigen::VectorXd> dh_next(layers, Eigen::VectorXd::Zero(cells));
  std::vector<Eigen::VectorXd> dc_next(layers, Eigen::VectorXd::Zero(cells));
  for (int t = steps - 1; t >= 0; --t) {
    std::vector<Eigen::VectorXd> dh = dh_next;
    std::vector<Eigen::VectorXd> dc = dc_next;
    const double p = fwd.preds[t];
    const double dz = 2.0 * (p - targets[t]) * p * (1.0 - p);
    const Eigen::VectorXd &top_h = fwd.caches[layers - 1][t].h;
    dhw.row(0) += dz * top_h.transpose();
    dhb(0, 0) += dz;
    dh[layers - 1] += dz * hw.row(0).transpose();
    for (int l = layers - 1; l >= 0; --l) {
      const std::string prefix = "lstm.l" + std::to_string(l) + ".";
      auto grads = lstm_cell_backward(
          fwd.caches[l][t], model.params.value.at(prefix + "wx"),
          model.params.value.at(prefix + "wh"), dh[l], dc[l],
          model.params.grad.at(prefix + "wx"),
          model.params.grad.at(prefix + "wh"),
          model.params.grad.at(prefix + "b"));
      dh_next[l] = grads.dh_prev;
      dc_next[l] = grads.dc_prev;
      if (l > 0) dh[l - 1] += grads.dx;
    }
  }
  return loss;
}

CcModel train_mlp(const std::vector<Utterance> &corpus, const MlpConfig &mcfg,
                  const TrainConfig &tcfg) {
  CcModel model;
  model.kind = CcKind::Mlp;
  model.mlp_cfg = mcfg;
  init_mlp(model, tcfg.seed);

  std::vector<WordSample> samples;
  std::vector<Eigen::VectorXd> all_features;
  for (const auto &utt : corpus) {
    if (utt.hypothesis.empty()) continue;
    const auto stacked = stacked_word_features(utt, mcfg.context);
    const auto res = align(utt.reference, [&] {
      std::vector<std::string> hyp;
      for (const auto &w : utt.hypothesis) hyp.push_back(w.text);
      return hyp;
    }());
    for (std::size_t i = 0; i < stacked.size(); ++i) {
      samples.push_back({stacked[i], res.correct_flags[i] ? 1.0 : 0.0});
      all_features.push_back(stacked[i]);
    }
  }
  if (samples.empty()) throw DataError("train_mlp: no word samples in corpus");
  model.stats = fit_stats(all_features);
  for (auto &s : samples) s.features = normalize(s.features, model.stats);
  samples = balance_classes(samples, derive_seed(tcfg.seed, 0xBA));

  Optimizer opt(tcfg);
  const int dim = mcfg.context.stacked_dim();
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    Rng rng(derive_seed(tcfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
      Eigen::MatrixXd x(end - start, dim);
      Eigen::VectorXd y(end - start);
      for (std::size_t r = start; r < end; ++r) {
        x.row(static_cast<Eigen::Index>(r - start)) =
            samples[order[r]].features.transpose();
        y(static_cast<Eigen::Index>(r - start)) = samples[order[r]].label;
      }
      model.params.zero_grad();
      mlp_batch_loss(model, x, y, true);
      opt.step(model.params);
    }
  }
  return model;
}

std::vector<double> score_words_mlp(const CcModel &model,
                                    const Utterance &utt) {
  if (model.kind != CcKind::Mlp) throw DataError("score_words_mlp: not an MLP");
  if (utt.hypothesis.empty()) return {};
  const auto stacked = stacked_word_features(utt, model.mlp_cfg.context);
  Eigen::MatrixXd x(stacked.size(), stacked[0].size());
  for (std::size_t i = 0; i < stacked.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
        normalize(stacked[i], model.stats).transpose();
  }
  const auto c = mlp_forward(model, x);
  std::vector<double> out(stacked.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = c.probs(static_cast<Eigen::Index>(i), 0);
  }
  return out;
}

double aggregate_utterance(const std::vector<double> &scores,
                           const std::vector<std::int64_t> &durations_ms) {
  if (scores.empty() || scores.size() != durations_ms.size()) {
    throw DataError("aggregate_utterance: empty or mismatched inputs");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (durations_ms[i] <= 0) {
      throw DataError("aggregate_utterance: non-positive duration");
    }
    num += scores[i] * static_cast<double>(durations_ms[i]);
    den += static_cast<double>(durations_ms[i]);
  }
  return num / den;
}

CcModel train_lstm(const std::vector<Utterance> &corpus,
                   const LstmConfig &lcfg, const TrainConfig &tcfg) {
  CcModel model;
  model.kind = CcKind::Lstm;
  model.lstm_cfg = lcfg;
  init_lstm(model, tcfg.seed);

  struct Sequence {
    std::vector<Eigen::VectorXd> inputs;
    std::vector<double> targets;
  };
  std::vector<Sequence> seqs;
  std::vector<Eigen::VectorXd> all_features;
  for (const auto &utt : corpus) {
    if (utt.hypothesis.size() < 2) continue;  // one-word exclusion
    Sequence s;
    s.inputs = stacked_word_features(utt, lcfg.context);
    std::vector<std::string> hyp;
    for (const auto &w : utt.hypothesis) hyp.push_back(w.text);
    s.targets = cumulative_labels(align(utt.reference, hyp));
    for (const auto &v : s.inputs) all_features.push_back(v);
    seqs.push_back(std::move(s));
  }
  if (seqs.empty()) {
    throw DataError("train_lstm: no multi-word utterances in corpus");
  }
  model.stats = fit_stats(all_features);
  for (auto &s : seqs) {
    for (auto &v : s.inputs) v = normalize(v, model.stats);
  }

  Optimizer opt(tcfg);
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    Rng rng(derive_seed(tcfg.seed, 2000 + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(seqs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
      model.params.zero_grad();
      for (std::size_t r = start; r < end; ++r) {
        lstm_utterance_loss(model, seqs[order[r]].inputs,
                            seqs[order[r]].targets, true);
      }
      // Per-utterance losses are summed over steps, averaged over the batch.
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto &[name, g] : model.params.grad) g *= scale;
      opt.step(model.params);
    }
  }
  return model;
}

UtteranceScore score_utterance(const CcModel &model, const Utterance &utt) {
  UtteranceScore out;
  if (utt.hypothesis.empty()) return out;  // confidence 0 by convention
  if (model.kind == CcKind::Mlp) {
    out.per_step = score_words_mlp(model, utt);
    std::vector<std::int64_t> durations;
    for (const auto &w : utt.hypothesis) durations.push_back(w.duration_ms);
    out.confidence = aggregate_utterance(out.per_step, durations);
    return out;
  }
  auto stacked = stacked_word_features(utt, model.lstm_cfg.context);
  for (auto &v : stacked) v = normalize(v, model.stats);
  const auto fwd = lstm_forward(model, stacked);
  out.per_step = fwd.preds;
  out.confidence = fwd.preds.back();
  return out;
}

std::vector<ScoredUtterance> score_corpus(const CcModel &model,
                                          const std::vector<Utterance> &corpus,
                                          bool exclude_one_word) {
  std::vector<ScoredUtterance> out;
  out.reserve(corpus.size());
  for (const auto &utt : corpus) {
    if (exclude_one_word && utt.hypothesis.size() == 1) continue;
    ScoredUtterance s;
    s.id = utt.id;
    s.confidence = score_utterance(model, utt).confidence;
    std::vector<std::string> hyp;
    for (const auto &w : utt.hypothesis) {
      hyp.push_back(w.text);
      s.total_duration_ms += w.duration_ms;
    }
    s.n_words = static_cast<std::int64_t>(hyp.size());
    const auto res = align(utt.reference, hyp);
    s.accuracy = std::clamp(1.0 - wer(res, utt.reference.size()), 0.0, 1.0);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

json params_to_json(const Parameters &params) {
  json j = json::object();
  for (const auto &[name, m] : params.value) {
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    j[name] = json{{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
  }
  return j;
}

void params_from_json(const json &j, Parameters &params) {
  for (const auto &[name, entry] : j.items()) {
    const auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 2) throw DataError("checkpoint: bad shape for " + name);
    auto &m = params.add(name, shape[0], shape[1]);
    const auto &data = entry.at("data");
    if (static_cast<Eigen::Index>(data.size()) != m.size()) {
      throw DataError("checkpoint: data size mismatch for " + name);
    }
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = data[static_cast<std::size_t>(k++)].get<double>();
      }
    }
  }
}

}  // namespace

std::string checkpoint_to_string(const CcModel &model) {
  json arch;
  if (model.kind == CcKind::Mlp) {
    arch = json{{"hidden_sizes", model.mlp_cfg.hidden_sizes},
                {"context",
                 {{"past", model.mlp_cfg.context.past},
                  {"future", model.mlp_cfg.context.future}}}};
  } else {
    arch = json{{"layers", model.lstm_cfg.layers},
                {"cells", model.lstm_cfg.cells},
                {"context",
                 {{"past", model.lstm_cfg.context.past},
                  {"future", model.lstm_cfg.context.future}}}};
  }
  json stats{{"mean", std::vector<double>(model.stats.mean.begin(),
                                          model.stats.mean.end())},
             {"std", std::vector<double>(model.stats.std.begin(),
                                         model.stats.std.end())}};
  json j{{"version", 1},
         {"kind", model.kind == CcKind::Mlp ? "mlp" : "lstm"},
         {"arch", std::move(arch)},
         {"stats", std::move(stats)},
         {"params", params_to_json(model.params)}};
  return j.dump();
}

CcModel checkpoint_from_string(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw DataError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  CcModel model;
  try {
    if (j.at("version").get<int>() != 1) {
      throw DataError("checkpoint: unsupported version");
    }
    const std::string kind = j.at("kind").get<std::string>();
    const json &arch = j.at("arch");
    if (kind == "mlp") {
      model.kind = CcKind::Mlp;
      model.mlp_cfg.hidden_sizes =
          arch.at("hidden_sizes").get<std::vector<int>>();
      model.mlp_cfg.context.past = arch.at("context").at("past").get<int>();
      model.mlp_cfg.context.future =
          arch.at("context").at("future").get<int>();
    } else if (kind == "lstm") {
      model.kind = CcKind::Lstm;
      model.lstm_cfg.layers = arch.at("layers").get<int>();
      model.lstm_cfg.cells = arch.at("cells").get<int>();
      model.lstm_cfg.context.past = arch.at("context").at("past").get<int>();
      model.lstm_cfg.context.future =
          arch.at("context").at("future").get<int>();
    } else {
      throw DataError("checkpoint: unknown kind " + kind);
    }
    const auto mean = j.at("stats").at("mean").get<std::vector<double>>();
    const auto sd = j.at("stats").at("std").get<std::vector<double>>();
    model.stats.mean = Eigen::Map<const Eigen::VectorXd>(
        mean.data(), static_cast<Eigen::Index>(mean.size()));
    model.stats.std = Eigen::Map<const Eigen::VectorXd>(
        sd.data(), static_cast<Eigen::Index>(sd.size()));
    params_from_json(j.at("params"), model.params);
  } catch (const json::exception &e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  return model;
}

void save_checkpoint(const CcModel &model, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << checkpoint_to_string(model) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

CcModel load_checkpoint(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return checkpoint_from_string(text);
}

}  // namespace ccsel
