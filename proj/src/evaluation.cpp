#include "ccsel/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "ccsel/alignment.hpp"
#include "ccsel/errors.hpp"

namespace ccsel {

std::vector<double> default_threshold_grid() {
  std::vector<double> grid(101);
  for (int i = 0; i <= 100; ++i) grid[i] = static_cast<double>(i) / 100.0;
  return grid;
}

std::vector<CaFaPoint> ca_fa_curve(const std::vector<double> &scores,
                                   const std::vector<bool> &correct,
                                   const std::vector<double> &thresholds) {
  if (scores.size() != correct.size()) {
    throw DataError("ca_fa_curve: length mismatch");
  }
  std::size_t n_correct = 0, n_incorrect = 0;
  for (bool c : correct) (c ? n_correct : n_incorrect) += 1;
  if (n_correct == 0 || n_incorrect == 0) {
    throw DataError("ca_fa_curve: need both correct and incorrect words");
  }
  std::vector<CaFaPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    std::size_t ca = 0, fa = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) (correct[i] ? ca : fa) += 1;
    }
    out.push_back({t, static_cast<double>(ca) / static_cast<double>(n_correct),
                   static_cast<double>(fa) / static_cast<double>(n_incorrect)});
  }
  return out;
}

ReliabilityReport reliability_bins(const std::vector<ScoredUtterance> &pool) {
  if (pool.empty()) throw DataError("reliability_bins: empty pool");
  ReliabilityReport report;
  report.bins.resize(10);
  std::vector<double> conf_sum(10, 0.0), acc_sum(10, 0.0);
  for (int b = 0; b < 10; ++b) {
    report.bins[b].lower = static_cast<double>(b) / 10.0;
    report.bins[b].upper = static_cast<double>(b + 1) / 10.0;
  }
  for (const auto &s : pool) {
    if (!s.accuracy) {
      throw DataError("reliability_bins: utterance " + s.id +
                      " has no accuracy");
    }
    int b = static_cast<int>(std::floor(s.confidence * 10.0));
    b = std::clamp(b, 0, 9);  // confidence 1.0 lands in the last (closed) bin
    report.bins[b].count += 1;
    conf_sum[b] += s.confidence;
    acc_sum[b] += *s.accuracy;
  }
  std::vector<double> xs, ys;
  for (int b = 0; b < 10; ++b) {
    if (report.bins[b].count == 0) continue;
    const double n = static_cast<double>(report.bins[b].count);
    report.bins[b].mean_confidence = conf_sum[b] / n;
    report.bins[b].mean_accuracy = acc_sum[b] / n;
    xs.push_back(report.bins[b].mean_confidence);
    ys.push_back(report.bins[b].mean_accuracy);
  }
  if (xs.size() >= 2) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
      syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx > 0.0 && syy > 0.0) {
      report.pearson = sxy / std::sqrt(sxx * syy);
    }
  }
  return report;
}

double corpus_wer(const std::vector<Utterance> &utterances) {
  std::size_t errors = 0, ref_words = 0;
  for (const auto &u : utterances) {
    std::vector<std::string> hyp;
    for (const auto &w : u.hypothesis) hyp.push_back(w.text);
    const auto res = align(u.reference, hyp);
    errors += res.n_sub + res.n_del + res.n_ins;
    ref_words += u.reference.size();
  }
  if (ref_words == 0) {
    return errors == 0 ? 0.0 : static_cast<double>(errors);
  }
  return static_cast<double>(errors) / static_cast<double>(ref_words);
}

WerReport wer_report(const std::vector<Utterance> &baseline,
                     const std::vector<Utterance> &adapted) {
  if (baseline.size() != adapted.size()) {
    throw DataError("wer_report: corpora differ in size");
  }
  std::unordered_map<std::string, const Utterance *> by_id;
  for (const auto &u : baseline) by_id[u.id] = &u;
  for (const auto &u : adapted) {
    auto it = by_id.find(u.id);
    if (it == by_id.end()) {
      throw DataError("wer_report: id not in baseline: " + u.id);
    }
    if (it->second->reference != u.reference) {
      throw DataError("wer_report: reference mismatch for id " + u.id);
    }
  }
  WerReport r;
  r.baseline_wer = corpus_wer(baseline);
  r.wer = corpus_wer(adapted);
  if (r.baseline_wer == 0.0) {
    r.werr_vs_baseline = r.wer == 0.0 ? 0.0
                                      : -std::numeric_limits<double>::infinity();
    if (r.wer != 0.0) throw NumericError("wer_report: baseline WER is 0");
  } else {
    r.werr_vs_baseline =
        100.0 * (r.baseline_wer - r.wer) / r.baseline_wer;
  }
  return r;
}

}  // namespace ccsel
