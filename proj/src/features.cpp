#include "ccsel/features.hpp"

#include <cmath>

#include "ccsel/errors.hpp"

namespace ccsel {

Eigen::VectorXd featurize(const WordHyp &word) {
  Eigen::VectorXd v(kBaseFeatureDim);
  v << word.am_score, word.lm_score,
      std::log(static_cast<double>(word.duration_ms)),
      static_cast<double>(word.phone_count);
  return v;
}

std::vector<Eigen::VectorXd> stack_context(
    const std::vector<Eigen::VectorXd> &vectors, const ContextConfig &cfg) {
  const std::size_t n = vectors.size();
  if (n == 0) throw DataError("stack_context: empty sequence");
  const int d = static_cast<int>(vectors[0].size());
  const int window = cfg.past + 1 + cfg.future;
  std::vector<Eigen::VectorXd> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd stacked = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(d) * window);
    for (int k = -cfg.past; k <= cfg.future; ++k) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) + k;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
      stacked.segment(static_cast<Eigen::Index>(k + cfg.past) * d, d) =
          vectors[static_cast<std::size_t>(src)];
    }
    out[i] = std::move(stacked);
  }
  return out;
}

FeatureStats fit_stats(const std::vector<Eigen::VectorXd> &vectors) {
  if (vectors.size() < 2) {
    throw DataError("fit_stats: need at least 2 vectors");
  }
  const Eigen::Index d = vectors[0].size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto &v : vectors) mean += v;
  mean /= static_cast<double>(vectors.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto &v : vectors) var += (v - mean).cwiseAbs2();
  var /= static_cast<double>(vectors.size());  // population convention
  FeatureStats stats;
  stats.mean = std::move(mean);
  stats.std = var.cwiseSqrt().cwiseMax(FeatureStats::kStdFloor);
  return stats;
}

Eigen::VectorXd normalize(const Eigen::VectorXd &v,
                          const FeatureStats &stats) {
  return (v - stats.mean).cwiseQuotient(stats.std);
}

}  // namespace ccsel
