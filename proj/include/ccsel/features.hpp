#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ccsel/corpus.hpp"

namespace ccsel {

// Base per-word feature dimension: am_score, lm_score, ln(duration), phones.
inline constexpr int kBaseFeatureDim = 4;

struct ContextConfig {
  int past = 0;
  int future = 0;

  int stacked_dim(int base_dim = kBaseFeatureDim) const {
    return base_dim * (past + 1 + future);
  }
};

struct FeatureStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // floored at kStdFloor

  static constexpr double kStdFloor = 1e-6;
};

// (am_score, lm_score, ln(duration_ms), phone_count)
Eigen::VectorXd featurize(const WordHyp &word);

// Per-word vectors concatenated over [i-past, i+future], zero padded at the
// utterance boundaries. Output length equals input length.
std::vector<Eigen::VectorXd> stack_context(
    const std::vector<Eigen::VectorXd> &vectors, const ContextConfig &cfg);

// Population mean/std per dimension; needs at least 2 vectors.
FeatureStats fit_stats(const std::vector<Eigen::VectorXd> &vectors);

Eigen::VectorXd normalize(const Eigen::VectorXd &v, const FeatureStats &stats);

}  // namespace ccsel
