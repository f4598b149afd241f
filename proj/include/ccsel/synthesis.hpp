#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ccsel/corpus.hpp"

namespace ccsel {

// Generator for CC corpora: word features are class-conditional Gaussians
// coupled to correctness, hypotheses carry controllable sub/del/ins errors
// with optional burst structure (error probability rises after an error).
struct CcDomainSpec {
  int vocab_size = 50;
  double p_sub = 0.10;
  double p_del = 0.05;
  double p_ins = 0.05;
  int min_len = 2;
  int max_len = 12;
  double burst_rho = 0.3;
  // Feature order: am_score, lm_score, ln-duration offset, phone-rate.
  Eigen::Vector4d mu_correct{-1.0, -1.5, 0.15, 4.0};
  Eigen::Vector4d mu_incorrect{-2.0, -2.5, -0.15, 2.5};
  Eigen::Vector4d sigma{0.5, 0.5, 0.35, 1.0};
  std::uint64_t seed = 0;
};

struct GenCounters {
  std::size_t n_ref_words = 0;
  std::size_t n_sub = 0;
  std::size_t n_del = 0;
  std::size_t n_ins = 0;
};

std::vector<Utterance> gen_cc_corpus(const CcDomainSpec &spec, std::size_t n,
                                     GenCounters *counters = nullptr);

// Generator for the toy acoustic-model task: per-token Gaussian features
// around per-class means; a domain shift translates every class mean.
struct AmDomainSpec {
  int vocab_size = 10;
  int feature_dim = 8;
  std::vector<Eigen::VectorXd> class_means;  // vocab_size vectors
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::string lineage;  // shift annotations
};

AmDomainSpec make_am_spec(int vocab_size, int feature_dim, double separation,
                          double sigma, std::uint64_t seed);

AmDomainSpec shift_domain(const AmDomainSpec &spec,
                          const Eigen::VectorXd &delta);

struct AmUtterance {
  std::string id;
  Eigen::MatrixXd features;  // one row per token
  std::vector<int> labels;
};

std::vector<AmUtterance> gen_am_corpus(const AmDomainSpec &spec,
                                       std::size_t n_utterances,
                                       int words_per_utt,
                                       std::uint64_t stream = 0);

// Monte-Carlo estimate of the Bayes-optimal token error of a spec.
double bayes_error_estimate(const AmDomainSpec &spec, std::size_t n_samples,
                            std::uint64_t seed);

// JSON Lines AM corpus I/O:
// {"id": str, "features": [[num,...],...], "labels": [int,...]}
void save_am_corpus(const std::vector<AmUtterance> &corpus,
                    const std::string &path);
std::vector<AmUtterance> load_am_corpus(const std::string &path);

// Spec (de)serialization for the gen CLI subcommands.
std::string cc_spec_to_json(const CcDomainSpec &spec);
CcDomainSpec cc_spec_from_json(const std::string &text);
std::string am_spec_to_json(const AmDomainSpec &spec);
AmDomainSpec am_spec_from_json(const std::string &text);

}  // namespace ccsel
