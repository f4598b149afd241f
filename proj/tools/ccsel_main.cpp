#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "ccsel/adaptation.hpp"
#include "ccsel/alignment.hpp"
#include "ccsel/cc_models.hpp"
#include "ccsel/corpus.hpp"
#include "ccsel/errors.hpp"
#include "ccsel/evaluation.hpp"
#include "ccsel/selection.hpp"
#include "ccsel/synthesis.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
using namespace ccsel;

std::string file_hash(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input for hashing: " + path);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(h));
  return out;
}

// Every subcommand records its resolved config and input hashes next to
// the primary output, as <out>.run.json.
void write_run_json(const std::string &out_path, const std::string &subcommand,
                    const json &args, const std::vector<std::string> &inputs) {
  json hashes = json::object();
  for (const auto &p : inputs) hashes[p] = file_hash(p);
  json j{{"subcommand", subcommand}, {"args", args}, {"inputs", hashes}};
  std::ofstream out(out_path + ".run.json");
  if (!out) throw DataError("cannot write run.json for " + out_path);
  out << j.dump(2) << '\n';
}

TrainConfig make_train_config(std::uint64_t seed, double lr, int epochs,
                              int batch, const std::string &optimizer) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.learning_rate = lr;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  if (optimizer == "sgd") {
    cfg.optimizer = OptimizerKind::Sgd;
  } else if (optimizer == "adam") {
    cfg.optimizer = OptimizerKind::Adam;
  } else {
    throw UsageError("--optimizer must be sgd or adam, got " + optimizer);
  }
  return cfg;
}

void print_eval_table(const ReliabilityReport &rel) {
  std::printf("%-12s %-12s %-12s %-8s\n", "bin", "mean_conf", "mean_acc",
              "count");
  for (const auto &b : rel.bins) {
    if (b.count == 0) {
      std::printf("[%.1f,%.1f%s   %-12s %-12s %-8s\n", b.lower, b.upper,
                  b.upper == 1.0 ? "]" : ")", "-", "-", "0");
    } else {
      std::printf("[%.1f,%.1f%s   %-12.4f %-12.4f %-8zu\n", b.lower, b.upper,
                  b.upper == 1.0 ? "]" : ")", b.mean_confidence,
                  b.mean_accuracy, b.count);
    }
  }
  if (rel.pearson) {
    std::printf("pearson      %.4f\n", *rel.pearson);
  } else {
    std::printf("pearson      undefined (fewer than 2 non-empty bins)\n");
  }
}

int run(int argc, char **argv) {
  CLI::App app{"Confidence-driven data selection and KLD adaptation toolkit"};
  app.require_subcommand(1);

  // ---- gen-cc ----
  auto *gen_cc = app.add_subcommand(
      "gen-cc", "Generate a synthetic confidence-classifier corpus");
  std::string gc_out, gc_spec_path;
  std::uint64_t gc_seed = 0;
  std::size_t gc_n = 1000;
  CcDomainSpec gc_spec;
  gen_cc->add_option("--out", gc_out, "Output corpus (JSON Lines)")
      ->required();
  gen_cc->add_option("--spec", gc_spec_path, "Spec JSON file");
  gen_cc->add_option("--seed", gc_seed, "Generator seed");
  gen_cc->add_option("--n", gc_n, "Number of utterances");
  gen_cc->add_option("--p-sub", gc_spec.p_sub, "Substitution probability");
  gen_cc->add_option("--p-del", gc_spec.p_del, "Deletion probability");
  gen_cc->add_option("--p-ins", gc_spec.p_ins, "Insertion probability");
  gen_cc->add_option("--rho", gc_spec.burst_rho, "Burst-error parameter");
  gen_cc->add_option("--vocab", gc_spec.vocab_size, "Vocabulary size");
  gen_cc->add_option("--min-len", gc_spec.min_len, "Min reference length");
  gen_cc->add_option("--max-len", gc_spec.max_len, "Max reference length");

  // ---- gen-am ----
  auto *gen_am = app.add_subcommand(
      "gen-am", "Generate a synthetic toy-AM token corpus");
  std::string ga_out, ga_spec_path;
  std::uint64_t ga_seed = 0, ga_stream = 0;
  std::size_t ga_n = 500;
  int ga_words = 8, ga_vocab = 10, ga_dim = 8;
  double ga_sep = 1.0, ga_sigma = 1.0, ga_shift = 0.0;
  gen_am->add_option("--out", ga_out, "Output corpus (JSON Lines)")
      ->required();
  gen_am->add_option("--spec", ga_spec_path, "Spec JSON file (overrides "
                                             "--vocab/--dim/--separation/"
                                             "--sigma)");
  gen_am->add_option("--seed", ga_seed, "Generator seed");
  gen_am->add_option("--stream", ga_stream, "Stream index (train/pool/test)");
  gen_am->add_option("--n-utts", ga_n, "Number of utterances");
  gen_am->add_option("--words-per-utt", ga_words, "Tokens per utterance");
  gen_am->add_option("--vocab", ga_vocab, "Vocabulary size");
  gen_am->add_option("--dim", ga_dim, "Feature dimension");
  gen_am->add_option("--separation", ga_sep, "Class-mean scale");
  gen_am->add_option("--sigma", ga_sigma, "Feature noise");
  gen_am->add_option("--shift-norm", ga_shift,
                     "Domain-shift vector norm (applied along the uniform "
                     "direction)");

  // ---- train-mlp ----
  auto *train_mlp_cmd =
      app.add_subcommand("train-mlp", "Train the word-level MLP CC");
  std::string tm_in, tm_out, tm_opt = "adam";
  std::uint64_t tm_seed = 0;
  double tm_lr = 1e-3;
  int tm_epochs = 20, tm_batch = 16, tm_past = 1, tm_future = 1;
  std::vector<int> tm_hidden{32};
  train_mlp_cmd->add_option("--in", tm_in, "Training corpus")->required();
  train_mlp_cmd->add_option("--out", tm_out, "Checkpoint path")->required();
  train_mlp_cmd->add_option("--seed", tm_seed, "Training seed");
  train_mlp_cmd->add_option("--lr", tm_lr, "Learning rate");
  train_mlp_cmd->add_option("--epochs", tm_epochs, "Epochs");
  train_mlp_cmd->add_option("--batch", tm_batch, "Batch size");
  train_mlp_cmd->add_option("--hidden", tm_hidden, "Hidden layer sizes");
  train_mlp_cmd->add_option("--past", tm_past, "Past context words");
  train_mlp_cmd->add_option("--future", tm_future, "Future context words");
  train_mlp_cmd->add_option("--optimizer", tm_opt, "sgd or adam");

  // ---- train-lstm ----
  auto *train_lstm_cmd =
      app.add_subcommand("train-lstm", "Train the sequence-level LSTM CC");
  std::string tl_in, tl_out, tl_opt = "adam";
  std::uint64_t tl_seed = 0;
  double tl_lr = 1e-3;
  int tl_epochs = 20, tl_batch = 16, tl_layers = 1, tl_cells = 32,
      tl_past = 0, tl_future = 1;
  train_lstm_cmd->add_option("--in", tl_in, "Training corpus")->required();
  train_lstm_cmd->add_option("--out", tl_out, "Checkpoint path")->required();
  train_lstm_cmd->add_option("--seed", tl_seed, "Training seed");
  train_lstm_cmd->add_option("--lr", tl_lr, "Learning rate");
  train_lstm_cmd->add_option("--epochs", tl_epochs, "Epochs");
  train_lstm_cmd->add_option("--batch", tl_batch, "Batch size (utterances)");
  train_lstm_cmd->add_option("--layers", tl_layers, "LSTM layers");
  train_lstm_cmd->add_option("--cells", tl_cells, "Cells per layer");
  train_lstm_cmd->add_option("--past", tl_past, "Past context words");
  train_lstm_cmd->add_option("--future", tl_future, "Future context words");
  train_lstm_cmd->add_option("--optimizer", tl_opt, "sgd or adam");

  // ---- score ----
  auto *score_cmd =
      app.add_subcommand("score", "Score a corpus into a scored pool");
  std::string sc_model, sc_in, sc_out;
  bool sc_exclude_one = false;
  score_cmd->add_option("--model", sc_model, "CC checkpoint")->required();
  score_cmd->add_option("--in", sc_in, "Corpus to score")->required();
  score_cmd->add_option("--out", sc_out, "Scored pool output")->required();
  score_cmd->add_flag("--exclude-one-word", sc_exclude_one,
                      "Drop single-word utterances (CC test convention)");

  // ---- eval ----
  auto *eval_cmd = app.add_subcommand(
      "eval", "Reliability bins, correlation, and CA/FA metrics");
  std::string ev_model, ev_in, ev_out, ev_csv;
  bool ev_include_one = false;
  eval_cmd->add_option("--model", ev_model, "CC checkpoint")->required();
  eval_cmd->add_option("--in", ev_in, "Test corpus")->required();
  eval_cmd->add_option("--out", ev_out, "JSON report output")->required();
  eval_cmd->add_option("--csv", ev_csv, "CSV prefix for bin/curve points");
  eval_cmd->add_flag("--include-one-word", ev_include_one,
                     "Keep single-word utterances in the test pool");

  // ---- select ----
  auto *select_cmd = app.add_subcommand(
      "select", "Build a selection manifest from a scored pool");
  std::string se_in, se_out, se_mode = "supervised", se_anchor, se_emit,
              se_corpus;
  double se_lo = 0.0, se_hi = 100.0;
  select_cmd->add_option("--in", se_in, "Scored pool")->required();
  select_cmd->add_option("--out", se_out, "Manifest output")->required();
  select_cmd->add_option("--mode", se_mode,
                         "supervised | semi_supervised | combined");
  select_cmd->add_option("--anchor", se_anchor,
                         "Override: top or bottom (with --lo/--hi)");
  select_cmd->add_option("--lo", se_lo, "Override: low percentile");
  select_cmd->add_option("--hi", se_hi, "Override: high percentile");
  select_cmd->add_option("--emit", se_emit,
                         "Also write the adaptation set here (needs --corpus)");
  select_cmd->add_option("--corpus", se_corpus,
                         "Corpus backing the pool, for --emit");

  // ---- adapt ----
  auto *adapt_cmd = app.add_subcommand(
      "adapt", "KLD-regularized adaptation of a toy AM");
  std::string ad_base, ad_pool, ad_manifest, ad_out, ad_opt = "adam";
  double ad_lambda = 0.5, ad_lr = 1e-3;
  int ad_epochs = 5, ad_batch = 32;
  std::uint64_t ad_seed = 0;
  adapt_cmd->add_option("--base", ad_base, "Base toy-AM checkpoint")
      ->required();
  adapt_cmd->add_option("--pool", ad_pool, "AM corpus (JSON Lines)")
      ->required();
  adapt_cmd->add_option("--manifest", ad_manifest, "Selection manifest")
      ->required();
  adapt_cmd->add_option("--out", ad_out, "Adapted checkpoint")->required();
  adapt_cmd->add_option("--lambda", ad_lambda, "KL weight in [0,1]");
  adapt_cmd->add_option("--seed", ad_seed, "Adaptation seed");
  adapt_cmd->add_option("--lr", ad_lr, "Learning rate");
  adapt_cmd->add_option("--epochs", ad_epochs, "Epochs");
  adapt_cmd->add_option("--batch", ad_batch, "Batch size");
  adapt_cmd->add_option("--optimizer", ad_opt, "sgd or adam");

  // ---- train-am ----
  auto *train_am_cmd =
      app.add_subcommand("train-am", "Train the base toy AM");
  std::string ta_in, ta_out, ta_opt = "adam";
  std::uint64_t ta_seed = 0;
  double ta_lr = 1e-3;
  int ta_epochs = 10, ta_batch = 32, ta_hidden = 32, ta_vocab = 10,
      ta_dim = 8;
  train_am_cmd->add_option("--in", ta_in, "AM corpus")->required();
  train_am_cmd->add_option("--out", ta_out, "Checkpoint path")->required();
  train_am_cmd->add_option("--seed", ta_seed, "Training seed");
  train_am_cmd->add_option("--lr", ta_lr, "Learning rate");
  train_am_cmd->add_option("--epochs", ta_epochs, "Epochs");
  train_am_cmd->add_option("--batch", ta_batch, "Batch size");
  train_am_cmd->add_option("--hidden", ta_hidden, "Hidden width");
  train_am_cmd->add_option("--vocab", ta_vocab, "Vocabulary size");
  train_am_cmd->add_option("--dim", ta_dim, "Feature dimension");
  train_am_cmd->add_option("--optimizer", ta_opt, "sgd or adam");

  // ---- experiment ----
  auto *exp_cmd = app.add_subcommand(
      "experiment", "Adaptation experiment matrix over selection policies");
  std::string ex_out, ex_policies = "all", ex_opt = "adam";
  std::uint64_t ex_seed = 0;
  int ex_seeds = 5;
  double ex_lambda = 0.5, ex_sep = 1.0, ex_sigma = 1.0, ex_shift = 2.0,
         ex_lr = 1e-3, ex_adapt_lr = 5e-4;
  int ex_vocab = 10, ex_dim = 8, ex_words = 8;
  std::size_t ex_n_train = 2000, ex_n_pool = 600, ex_n_test = 500;
  int ex_base_epochs = 15, ex_adapt_epochs = 5, ex_batch = 32;
  exp_cmd->add_option("--out", ex_out, "JSON report output")->required();
  exp_cmd->add_option("--seed", ex_seed, "Master seed");
  exp_cmd->add_option("--seeds", ex_seeds, "Number of adaptation seeds");
  exp_cmd->add_option("--lambda", ex_lambda, "KL weight");
  exp_cmd->add_option("--policies", ex_policies,
                      "all or comma-separated policy names");
  exp_cmd->add_option("--vocab", ex_vocab, "Vocabulary size");
  exp_cmd->add_option("--dim", ex_dim, "Feature dimension");
  exp_cmd->add_option("--separation", ex_sep, "Class-mean scale");
  exp_cmd->add_option("--sigma", ex_sigma, "Feature noise");
  exp_cmd->add_option("--shift-norm", ex_shift, "Target-domain shift norm");
  exp_cmd->add_option("--n-train", ex_n_train, "Source training utterances");
  exp_cmd->add_option("--n-pool", ex_n_pool, "Target adaptation utterances");
  exp_cmd->add_option("--n-test", ex_n_test, "Target test utterances");
  exp_cmd->add_option("--words-per-utt", ex_words, "Tokens per utterance");
  exp_cmd->add_option("--base-epochs", ex_base_epochs, "Base training epochs");
  exp_cmd->add_option("--adapt-epochs", ex_adapt_epochs, "Adaptation epochs");
  exp_cmd->add_option("--lr", ex_lr, "Base learning rate");
  exp_cmd->add_option("--adapt-lr", ex_adapt_lr, "Adaptation learning rate");
  exp_cmd->add_option("--batch", ex_batch, "Batch size");

  // ---- report ----
  auto *report_cmd =
      app.add_subcommand("report", "Print a report JSON as a text table");
  std::string rp_in;
  report_cmd->add_option("--in", rp_in, "Report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;  // usage error
  }

  if (gen_cc->parsed()) {
    CcDomainSpec spec = gc_spec;
    if (!gc_spec_path.empty()) {
      std::ifstream in(gc_spec_path);
      if (!in) throw DataError("cannot open spec: " + gc_spec_path);
      std::string text((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
      spec = cc_spec_from_json(text);
    }
    spec.seed = gc_seed;
    const auto corpus = gen_cc_corpus(spec, gc_n);
    save_corpus(corpus, gc_out);
    std::ofstream specout(gc_out + ".spec.json");
    specout << cc_spec_to_json(spec) << '\n';
    write_run_json(gc_out, "gen-cc",
                   json{{"seed", gc_seed},
                        {"n", gc_n},
                        {"spec", json::parse(cc_spec_to_json(spec))}},
                   gc_spec_path.empty()
                       ? std::vector<std::string>{}
                       : std::vector<std::string>{gc_spec_path});
    return 0;
  }

  if (gen_am->parsed()) {
    AmDomainSpec spec;
    if (!ga_spec_path.empty()) {
      std::ifstream in(ga_spec_path);
      if (!in) throw DataError("cannot open spec: " + ga_spec_path);
      std::string text((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
      spec = am_spec_from_json(text);
    } else {
      spec = make_am_spec(ga_vocab, ga_dim, ga_sep, ga_sigma, ga_seed);
    }
    spec.seed = ga_seed;
    if (ga_shift != 0.0) {
      Eigen::VectorXd delta = Eigen::VectorXd::Constant(
          spec.feature_dim, ga_shift / std::sqrt(spec.feature_dim));
      spec = shift_domain(spec, delta);
    }
    const auto corpus = gen_am_corpus(spec, ga_n, ga_words, ga_stream);
    save_am_corpus(corpus, ga_out);
    std::ofstream specout(ga_out + ".spec.json");
    specout << am_spec_to_json(spec) << '\n';
    write_run_json(ga_out, "gen-am",
                   json{{"seed", ga_seed},
                        {"stream", ga_stream},
                        {"n_utts", ga_n},
                        {"words_per_utt", ga_words},
                        {"shift_norm", ga_shift},
                        {"spec", json::parse(am_spec_to_json(spec))}},
                   ga_spec_path.empty()
                       ? std::vector<std::string>{}
                       : std::vector<std::string>{ga_spec_path});
    return 0;
  }

  if (train_mlp_cmd->parsed()) {
    const auto corpus = load_corpus(tm_in);
    MlpConfig mcfg;
    mcfg.hidden_sizes = tm_hidden;
    mcfg.context = {tm_past, tm_future};
    const auto tcfg =
        make_train_config(tm_seed, tm_lr, tm_epochs, tm_batch, tm_opt);
    const auto model = train_mlp(corpus, mcfg, tcfg);
    save_checkpoint(model, tm_out);
    write_run_json(tm_out, "train-mlp",
                   json{{"in", tm_in},
                        {"seed", tm_seed},
                        {"lr", tm_lr},
                        {"epochs", tm_epochs},
                        {"batch", tm_batch},
                        {"hidden", tm_hidden},
                        {"past", tm_past},
                        {"future", tm_future},
                        {"optimizer", tm_opt}},
                   {tm_in});
    return 0;
  }

  if (train_lstm_cmd->parsed()) {
    const auto corpus = load_corpus(tl_in);
    LstmConfig lcfg;
    lcfg.layers = tl_layers;
    lcfg.cells = tl_cells;
    lcfg.context = {tl_past, tl_future};
    const auto tcfg =
        make_train_config(tl_seed, tl_lr, tl_epochs, tl_batch, tl_opt);
    const auto model = train_lstm(corpus, lcfg, tcfg);
    save_checkpoint(model, tl_out);
    write_run_json(tl_out, "train-lstm",
                   json{{"in", tl_in},
                        {"seed", tl_seed},
                        {"lr", tl_lr},
                        {"epochs", tl_epochs},
                        {"batch", tl_batch},
                        {"layers", tl_layers},
                        {"cells", tl_cells},
                        {"past", tl_past},
                        {"future", tl_future},
                        {"optimizer", tl_opt}},
                   {tl_in});
    return 0;
  }

  if (score_cmd->parsed()) {
    const auto model = load_checkpoint(sc_model);
    const auto corpus = load_corpus(sc_in);
    const auto pool = score_corpus(model, corpus, sc_exclude_one);
    save_scored_pool(pool, sc_out);
    write_run_json(sc_out, "score",
                   json{{"model", sc_model},
                        {"in", sc_in},
                        {"exclude_one_word", sc_exclude_one}},
                   {sc_model, sc_in});
    return 0;
  }

  if (eval_cmd->parsed()) {
    const auto model = load_checkpoint(ev_model);
    const auto corpus = load_corpus(ev_in);
    const auto pool = score_corpus(model, corpus, !ev_include_one);
    const auto rel = reliability_bins(pool);
    json bins = json::array();
    for (const auto &b : rel.bins) {
      bins.push_back(json{{"lower", b.lower},
                          {"upper", b.upper},
                          {"mean_confidence", b.mean_confidence},
                          {"mean_accuracy", b.mean_accuracy},
                          {"count", b.count}});
    }
    json report{{"kind", "eval"},
                {"n_utterances", pool.size()},
                {"bins", std::move(bins)}};
    if (rel.pearson) {
      report["pearson"] = *rel.pearson;
    } else {
      report["pearson"] = nullptr;
    }
    // Word-level CA/FA for MLP models.
    if (model.kind == CcKind::Mlp) {
      std::vector<double> scores;
      std::vector<bool> correct;
      for (const auto &utt : corpus) {
        if (!ev_include_one && utt.hypothesis.size() == 1) continue;
        if (utt.hypothesis.empty()) continue;
        const auto word_scores = score_words_mlp(model, utt);
        std::vector<std::string> hyp;
        for (const auto &w : utt.hypothesis) hyp.push_back(w.text);
        const auto res = align(utt.reference, hyp);
        for (std::size_t i = 0; i < word_scores.size(); ++i) {
          scores.push_back(word_scores[i]);
          correct.push_back(res.correct_flags[i]);
        }
      }
      const auto curve =
          ca_fa_curve(scores, correct, default_threshold_grid());
      json points = json::array();
      for (const auto &p : curve) {
        points.push_back(
            json{{"threshold", p.threshold}, {"ca", p.ca}, {"fa", p.fa}});
      }
      report["ca_fa"] = std::move(points);
    }
    std::ofstream out(ev_out);
    if (!out) throw DataError("cannot open for writing: " + ev_out);
    out << report.dump(2) << '\n';
    print_eval_table(rel);
    if (!ev_csv.empty()) {
      std::ofstream bcsv(ev_csv + ".bins.csv");
      bcsv << "lower,upper,mean_confidence,mean_accuracy,count\n";
      for (const auto &b : rel.bins) {
        bcsv << b.lower << ',' << b.upper << ',' << b.mean_confidence << ','
             << b.mean_accuracy << ',' << b.count << '\n';
      }
      if (report.contains("ca_fa")) {
        std::ofstream ccsv(ev_csv + ".cafa.csv");
        ccsv << "threshold,ca,fa\n";
        for (const auto &p : report["ca_fa"]) {
          ccsv << p["threshold"].get<double>() << ','
               << p["ca"].get<double>() << ',' << p["fa"].get<double>()
               << '\n';
        }
      }
    }
    write_run_json(ev_out, "eval",
                   json{{"model", ev_model},
                        {"in", ev_in},
                        {"include_one_word", ev_include_one}},
                   {ev_model, ev_in});
    return 0;
  }

  if (select_cmd->parsed()) {
    const auto pool = load_scored_pool(se_in);
    SelectionManifest manifest;
    if (!se_anchor.empty()) {
      PercentileRange range;
      if (se_anchor == "top") {
        range.anchor = RangeAnchor::Top;
      } else if (se_anchor == "bottom") {
        range.anchor = RangeAnchor::Bottom;
      } else {
        throw UsageError("--anchor must be top or bottom");
      }
      range.lo_pct = se_lo;
      range.hi_pct = se_hi;
      manifest = select(pool, range,
                        se_mode == "semi_supervised" ? LabelSource::Hypothesis
                                                     : LabelSource::Reference);
    } else if (se_mode == "supervised") {
      manifest = select_with_policy(pool, SelectionMode::Supervised);
    } else if (se_mode == "semi_supervised") {
      manifest = select_with_policy(pool, SelectionMode::SemiSupervised);
    } else if (se_mode == "combined") {
      manifest = select_with_policy(pool, SelectionMode::Combined);
    } else {
      throw UsageError("--mode must be supervised, semi_supervised, or "
                       "combined; got " +
                       se_mode);
    }
    save_manifest(manifest, se_out);
    std::vector<std::string> inputs{se_in};
    if (!se_emit.empty()) {
      if (se_corpus.empty()) {
        throw UsageError("--emit requires --corpus");
      }
      emit_adaptation_set(manifest, load_corpus(se_corpus), se_emit);
      inputs.push_back(se_corpus);
    }
    write_run_json(se_out, "select",
                   json{{"in", se_in},
                        {"mode", se_mode},
                        {"anchor", se_anchor},
                        {"lo", se_lo},
                        {"hi", se_hi},
                        {"emit", se_emit},
                        {"corpus", se_corpus}},
                   inputs);
    return 0;
  }

  if (train_am_cmd->parsed()) {
    const auto corpus = load_am_corpus(ta_in);
    ToyAmConfig cfg;
    cfg.feature_dim = ta_dim;
    cfg.vocab_size = ta_vocab;
    cfg.hidden = ta_hidden;
    const auto tcfg =
        make_train_config(ta_seed, ta_lr, ta_epochs, ta_batch, ta_opt);
    const auto model = train_toy_am(corpus, cfg, tcfg);
    save_toy_am(model, ta_out);
    write_run_json(ta_out, "train-am",
                   json{{"in", ta_in},
                        {"seed", ta_seed},
                        {"lr", ta_lr},
                        {"epochs", ta_epochs},
                        {"batch", ta_batch},
                        {"hidden", ta_hidden},
                        {"vocab", ta_vocab},
                        {"dim", ta_dim},
                        {"optimizer", ta_opt}},
                   {ta_in});
    return 0;
  }

  if (adapt_cmd->parsed()) {
    const auto base = load_toy_am(ad_base);
    const auto pool = load_am_corpus(ad_pool);
    const auto manifest = load_manifest(ad_manifest);
    std::unordered_map<std::string, const AmUtterance *> by_id;
    for (const auto &u : pool) by_id[u.id] = &u;
    std::vector<AdaptationSample> samples;
    for (std::size_t i = 0; i < manifest.ids.size(); ++i) {
      const auto it = by_id.find(manifest.ids[i]);
      if (it == by_id.end()) {
        throw DataError("adapt: manifest id not in pool: " + manifest.ids[i]);
      }
      const AmUtterance &u = *it->second;
      std::vector<int> labels = u.labels;
      if (manifest.label_sources[i] == LabelSource::Hypothesis) {
        labels = decode(base, u.features);
      }
      for (Eigen::Index t = 0; t < u.features.rows(); ++t) {
        samples.push_back({u.features.row(t).transpose(),
                           labels[static_cast<std::size_t>(t)]});
      }
    }
    KldConfig cfg;
    cfg.lambda = ad_lambda;
    cfg.train = make_train_config(ad_seed, ad_lr, ad_epochs, ad_batch, ad_opt);
    const auto adapted = adapt(base, samples, cfg);
    save_toy_am(adapted, ad_out);
    write_run_json(ad_out, "adapt",
                   json{{"base", ad_base},
                        {"pool", ad_pool},
                        {"manifest", ad_manifest},
                        {"lambda", ad_lambda},
                        {"seed", ad_seed},
                        {"lr", ad_lr},
                        {"epochs", ad_epochs},
                        {"batch", ad_batch},
                        {"optimizer", ad_opt}},
                   {ad_base, ad_pool, ad_manifest});
    return 0;
  }

  if (exp_cmd->parsed()) {
    std::vector<std::string> policies;
    if (ex_policies == "all") {
      policies = experiment_policies();
    } else {
      std::string cur;
      for (char c : ex_policies + ",") {
        if (c == ',') {
          if (!cur.empty()) policies.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
    }
    const auto source =
        make_am_spec(ex_vocab, ex_dim, ex_sep, ex_sigma, ex_seed);
    Eigen::VectorXd delta = Eigen::VectorXd::Constant(
        ex_dim, ex_shift / std::sqrt(static_cast<double>(ex_dim)));
    const auto target = shift_domain(source, delta);
    const auto train_set = gen_am_corpus(source, ex_n_train, ex_words, 0);
    const auto pool = gen_am_corpus(target, ex_n_pool, ex_words, 1);
    const auto test = gen_am_corpus(target, ex_n_test, ex_words, 2);
    ToyAmConfig acfg;
    acfg.feature_dim = ex_dim;
    acfg.vocab_size = ex_vocab;
    const auto base = train_toy_am(
        train_set, acfg,
        make_train_config(ex_seed, ex_lr, ex_base_epochs, ex_batch, ex_opt));
    KldConfig kcfg;
    kcfg.lambda = ex_lambda;
    kcfg.train =
        make_train_config(0, ex_adapt_lr, ex_adapt_epochs, ex_batch, ex_opt);
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < ex_seeds; ++s) {
      seeds.push_back(derive_seed(ex_seed, 7000 + static_cast<std::uint64_t>(s)));
    }
    const auto report =
        run_table4_experiment(base, pool, test, policies, kcfg, seeds);
    std::ofstream out(ex_out);
    if (!out) throw DataError("cannot open for writing: " + ex_out);
    out << experiment_report_to_json(report) << '\n';
    write_run_json(ex_out, "experiment",
                   json{{"seed", ex_seed},
                        {"seeds", ex_seeds},
                        {"lambda", ex_lambda},
                        {"policies", ex_policies},
                        {"vocab", ex_vocab},
                        {"dim", ex_dim},
                        {"separation", ex_sep},
                        {"sigma", ex_sigma},
                        {"shift_norm", ex_shift},
                        {"n_train", ex_n_train},
                        {"n_pool", ex_n_pool},
                        {"n_test", ex_n_test},
                        {"words_per_utt", ex_words},
                        {"base_epochs", ex_base_epochs},
                        {"adapt_epochs", ex_adapt_epochs},
                        {"lr", ex_lr},
                        {"adapt_lr", ex_adapt_lr},
                        {"batch", ex_batch}},
                   {});
    return 0;
  }

  if (report_cmd->parsed()) {
    std::ifstream in(rp_in);
    if (!in) throw DataError("cannot open report: " + rp_in);
    json j;
    try {
      in >> j;
    } catch (const json::exception &e) {
      throw DataError(std::string("report: malformed JSON: ") + e.what());
    }
    if (j.contains("policies")) {
      std::printf("baseline WER: %.4f  lambda: %.2f\n",
                  j["baseline_wer"].get<double>(),
                  j["lambda"].get<double>());
      std::printf("%-26s %-10s %-10s %-8s %-10s\n", "policy", "med WER",
                  "med WERR%", "n_utts", "hours_eq");
      for (const auto &p : j["policies"]) {
        std::printf("%-26s %-10.4f %-10.2f %-8zu %-10.4f\n",
                    p["policy"].get<std::string>().c_str(),
                    p["median_wer"].get<double>(),
                    p["median_werr"].get<double>(),
                    p["n_utterances"].get<std::size_t>(),
                    p["n_hours_equivalent"].get<double>());
      }
    } else if (j.contains("bins")) {
      std::printf("%-12s %-12s %-12s %-8s\n", "bin", "mean_conf", "mean_acc",
                  "count");
      for (const auto &b : j["bins"]) {
        std::printf("[%.1f,%.1f)   %-12.4f %-12.4f %-8zu\n",
                    b["lower"].get<double>(), b["upper"].get<double>(),
                    b["mean_confidence"].get<double>(),
                    b["mean_accuracy"].get<double>(),
                    b["count"].get<std::size_t>());
      }
      if (!j["pearson"].is_null()) {
        std::printf("pearson      %.4f\n", j["pearson"].get<double>());
      }
    } else {
      throw DataError("report: unrecognized report schema");
    }
    return 0;
  }

  throw UsageError("no subcommand given");
}

}  // namespace

int main(int argc, char **argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError &e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  } catch (const DataError &e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return 3;
  } catch (const NumericError &e) {
    std::cerr << "error: numeric: " << e.what() << '\n';
    return 4;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
