#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ccsel/corpus.hpp"
#include "ccsel/nn.hpp"
#include "ccsel/selection.hpp"
#include "ccsel/synthesis.hpp"

namespace ccsel {

// Toy per-token acoustic classifier: one tanh hidden layer, softmax output
// over the vocabulary. One word per "frame", so decode produces no
// insertions or deletions and corpus WER reduces to the substitution rate.
struct ToyAmConfig {
  int feature_dim = 8;
  int vocab_size = 10;
  int hidden = 32;
};

struct ToyAm {
  ToyAmConfig cfg;
  Parameters params;
};

ToyAm init_toy_am(const ToyAmConfig &cfg, std::uint64_t seed);

// Softmax posteriors, one row per token; rows sum to 1 within 1e-9.
Eigen::MatrixXd am_posteriors(const ToyAm &model,
                              const Eigen::MatrixXd &features);

// Argmax decode, ties to the lowest vocabulary index.
std::vector<int> decode(const ToyAm &model, const Eigen::MatrixXd &features);

// Cross-entropy against soft targets, mean over rows; gradients accumulate.
double toy_am_loss(ToyAm &model, const Eigen::MatrixXd &features,
                   const Eigen::MatrixXd &targets, bool compute_grads);

ToyAm train_toy_am(const std::vector<AmUtterance> &corpus,
                   const ToyAmConfig &cfg, const TrainConfig &tcfg);

struct KldConfig {
  double lambda = 0.5;  // weight of the original model
  TrainConfig train;
};

struct AdaptationSample {
  Eigen::VectorXd features;
  int label = 0;  // vocabulary index (reference or decoded hypothesis)
};

// P = (1-lambda) * labels + lambda * base posteriors, rowwise.
Eigen::MatrixXd interpolate_targets(const Eigen::MatrixXd &label_dist,
                                    const Eigen::MatrixXd &base_posteriors,
                                    double lambda);

// KLD-regularized adaptation via the soft-target form: cross-entropy
// against targets interpolated with the frozen base model's posteriors.
ToyAm adapt(const ToyAm &base, const std::vector<AdaptationSample> &samples,
            const KldConfig &cfg);

double token_error_rate(const ToyAm &model,
                        const std::vector<AmUtterance> &corpus);

void save_toy_am(const ToyAm &model, const std::string &path);
ToyAm load_toy_am(const std::string &path);

// Pool scoring for selection: confidence is the mean max-posterior of the
// base model, accuracy the decoded token accuracy against true labels.
std::vector<ScoredUtterance> score_am_pool(
    const ToyAm &model, const std::vector<AmUtterance> &pool,
    std::int64_t token_duration_ms = 250);

struct PolicyResult {
  std::string policy;
  std::vector<double> wer_per_seed;
  std::vector<double> werr_per_seed;
  double median_wer = 0.0;
  double median_werr = 0.0;
  std::size_t n_utterances = 0;
  double n_hours_equivalent = 0.0;
};

struct ExperimentReport {
  double baseline_wer = 0.0;
  double lambda = 0.5;
  std::vector<std::uint64_t> seeds;
  std::vector<PolicyResult> policies;
};

// The policy matrix: supervised/semi-supervised x {all, top20, penultimate}
// plus the combined run.
std::vector<std::string> experiment_policies();

ExperimentReport run_table4_experiment(
    const ToyAm &base, const std::vector<AmUtterance> &adaptation_pool,
    const std::vector<AmUtterance> &test_split,
    const std::vector<std::string> &policies, const KldConfig &cfg,
    const std::vector<std::uint64_t> &seeds);

std::string experiment_report_to_json(const ExperimentReport &report);

double median(std::vector<double> values);

}  // namespace ccsel
