#pragma once

#include <optional>
#include <vector>

#include "ccsel/corpus.hpp"

namespace ccsel {

struct CaFaPoint {
  double threshold = 0.0;
  double ca = 0.0;  // correct accepts / all corrects
  double fa = 0.0;  // incorrect accepts / all incorrects
};

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  double mean_confidence = 0.0;
  double mean_accuracy = 0.0;
  std::size_t count = 0;
};

struct ReliabilityReport {
  std::vector<ReliabilityBin> bins;  // always 10, [0,0.1) .. [0.9,1.0]
  std::optional<double> pearson;     // absent with < 2 non-empty bins
};

struct WerReport {
  double baseline_wer = 0.0;
  double wer = 0.0;
  double werr_vs_baseline = 0.0;  // percent
};

// Default evaluation grid: 101 thresholds, 0.00 .. 1.00.
std::vector<double> default_threshold_grid();

std::vector<CaFaPoint> ca_fa_curve(const std::vector<double> &scores,
                                   const std::vector<bool> &correct,
                                   const std::vector<double> &thresholds);

// Utterance accuracy is clamp(1 - WER, 0, 1), deletions included. Pearson
// is unweighted over the non-empty bins' (mean confidence, mean accuracy).
ReliabilityReport reliability_bins(const std::vector<ScoredUtterance> &pool);

// Pooled corpus WER: total edits / total reference words. Hypothesis sets
// must cover the same utterance ids.
double corpus_wer(const std::vector<Utterance> &utterances);

WerReport wer_report(const std::vector<Utterance> &baseline,
                     const std::vector<Utterance> &adapted);

}  // namespace ccsel
