#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ccsel/corpus.hpp"
#include "ccsel/features.hpp"
#include "ccsel/nn.hpp"

namespace ccsel {

struct MlpConfig {
  std::vector<int> hidden_sizes{32};
  ContextConfig context{1, 1};
};

struct LstmConfig {
  int layers = 1;
  int cells = 32;
  ContextConfig context{0, 1};
};

enum class CcKind { Mlp, Lstm };

struct CcModel {
  CcKind kind = CcKind::Mlp;
  MlpConfig mlp_cfg;
  LstmConfig lstm_cfg;
  Parameters params;
  FeatureStats stats;
};

// One word-level training sample: stacked+normalized features and the
// correctness label (Match -> 1, Substitute/Insert -> 0).
struct WordSample {
  Eigen::VectorXd features;
  double label = 0.0;
};

// Downsamples the majority class (without replacement, seeded) to the
// minority count, then shuffles deterministically.
std::vector<WordSample> balance_classes(const std::vector<WordSample> &samples,
                                        std::uint64_t seed);

CcModel train_mlp(const std::vector<Utterance> &corpus, const MlpConfig &mcfg,
                  const TrainConfig &tcfg);

std::vector<double> score_words_mlp(const CcModel &model,
                                    const Utterance &utt);

// Duration-weighted average of word scores.
double aggregate_utterance(const std::vector<double> &scores,
                           const std::vector<std::int64_t> &durations_ms);

// Sequence regressor on cumulative accuracy labels. One-word utterances are
// excluded from training but still scored at inference.
CcModel train_lstm(const std::vector<Utterance> &corpus,
                   const LstmConfig &lcfg, const TrainConfig &tcfg);

struct UtteranceScore {
  std::vector<double> per_step;  // empty for an empty hypothesis
  double confidence = 0.0;       // final-step prediction, 0 when empty
};

UtteranceScore score_utterance(const CcModel &model, const Utterance &utt);

// Scores a whole corpus into a pool. Accuracy is clamp(1 - WER, 0, 1),
// deletions included. exclude_one_word drops single-word utterances, the
// convention used for CC evaluation splits.
std::vector<ScoredUtterance> score_corpus(const CcModel &model,
                                          const std::vector<Utterance> &corpus,
                                          bool exclude_one_word = false);

// Loss closures exposed for gradient checking. With compute_grads the
// parameter gradient buffers are zeroed and filled.
double mlp_batch_loss(CcModel &model, const Eigen::MatrixXd &x,
                      const Eigen::VectorXd &labels, bool compute_grads);
double lstm_utterance_loss(CcModel &model,
                           const std::vector<Eigen::VectorXd> &inputs,
                           const std::vector<double> &targets,
                           bool compute_grads);

void save_checkpoint(const CcModel &model, const std::string &path);
CcModel load_checkpoint(const std::string &path);
std::string checkpoint_to_string(const CcModel &model);
CcModel checkpoint_from_string(const std::string &text);

}  // namespace ccsel
