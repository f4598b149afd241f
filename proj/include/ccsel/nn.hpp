#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ccsel/rng.hpp"

namespace ccsel {

// Named parameter tensors with matching gradient buffers. std::map keeps
// iteration order deterministic across platforms.
struct Parameters {
  std::map<std::string, Eigen::MatrixXd> value;
  std::map<std::string, Eigen::MatrixXd> grad;

  Eigen::MatrixXd &add(const std::string &name, Eigen::Index rows,
                       Eigen::Index cols);
  void zero_grad();
  std::size_t total_entries() const;
};

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  int epochs = 20;
  int batch_size = 16;
  OptimizerKind optimizer = OptimizerKind::Adam;
  // Adam moments; fixed per convention.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

class Optimizer {
 public:
  explicit Optimizer(const TrainConfig &cfg) : cfg_(cfg) {}
  void step(Parameters &params);

 private:
  TrainConfig cfg_;
  std::map<std::string, Eigen::MatrixXd> m_, v_;
  long t_ = 0;
};

// Throws NumericError if any entry is NaN or Inf.
void check_finite(const Eigen::MatrixXd &m, const std::string &op);

// Elementwise activations (forward, and backward given forward output).
Eigen::MatrixXd sigmoid(const Eigen::MatrixXd &x);
Eigen::MatrixXd sigmoid_backward(const Eigen::MatrixXd &y,
                                 const Eigen::MatrixXd &dy);
Eigen::MatrixXd tanh_fwd(const Eigen::MatrixXd &x);
Eigen::MatrixXd tanh_backward(const Eigen::MatrixXd &y,
                              const Eigen::MatrixXd &dy);
Eigen::MatrixXd relu(const Eigen::MatrixXd &x);
Eigen::MatrixXd relu_backward(const Eigen::MatrixXd &x,
                              const Eigen::MatrixXd &dy);

// Row-wise softmax with max subtraction; rows sum to 1 within 1e-12.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd &logits);

// y = x * W^T + b (rows are samples). Backward fills dW, db and returns dx.
Eigen::MatrixXd affine_forward(const Eigen::MatrixXd &x,
                               const Eigen::MatrixXd &w,
                               const Eigen::VectorXd &b);
Eigen::MatrixXd affine_backward(const Eigen::MatrixXd &x,
                                const Eigen::MatrixXd &w,
                                const Eigen::MatrixXd &dy,
                                Eigen::MatrixXd &dw, Eigen::MatrixXd &db);

// One LSTM step. Gate blocks in the weight matrices are ordered
// [input; forget; candidate; output], each of size H.
struct LstmCache {
  Eigen::VectorXd x, h_prev, c_prev;
  Eigen::VectorXd i, f, g, o, c, tanh_c, h;
};

LstmCache lstm_cell_forward(const Eigen::VectorXd &x,
                            const Eigen::VectorXd &h_prev,
                            const Eigen::VectorXd &c_prev,
                            const Eigen::MatrixXd &wx,
                            const Eigen::MatrixXd &wh,
                            const Eigen::VectorXd &b);

struct LstmCellGrads {
  Eigen::VectorXd dx, dh_prev, dc_prev;
};

// dh/dc are the gradients flowing into this step's h and c. Parameter
// gradients accumulate into dwx/dwh/db.
LstmCellGrads lstm_cell_backward(const LstmCache &cache,
                                 const Eigen::MatrixXd &wx,
                                 const Eigen::MatrixXd &wh,
                                 const Eigen::VectorXd &dh,
                                 const Eigen::VectorXd &dc,
                                 Eigen::MatrixXd &dwx, Eigen::MatrixXd &dwh,
                                 Eigen::MatrixXd &db);

struct LossResult {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // d loss / d input (pred or logits)
};

// Sum of squared errors over the sequence, grad = 2(pred - target).
LossResult mse_loss(const Eigen::VectorXd &pred,
                    const Eigen::VectorXd &target);

// Cross-entropy of softmax(logits) against soft target rows (each summing
// to 1 within 1e-9); loss summed over rows, grad = p - t.
LossResult ce_loss_soft(const Eigen::MatrixXd &logits,
                        const Eigen::MatrixXd &targets);

// Glorot-uniform init: uniform(-r, r), r = sqrt(6/(fan_in+fan_out)).
void glorot_init(Eigen::MatrixXd &m, Eigen::Index fan_in,
                 Eigen::Index fan_out, Rng &rng);

struct GradCheckFailure {
  std::string name;
  Eigen::Index index;
  double analytic, numeric, rel_error;
};

struct GradCheckReport {
  bool pass = true;
  double max_rel_error = 0.0;
  std::size_t entries_checked = 0;
  std::vector<GradCheckFailure> failures;
};

// loss_fn(true) must zero and fill params.grad, returning the loss;
// loss_fn(false) just returns the loss. Checks all entries when the model
// has at most max_entries, otherwise a seeded sample.
GradCheckReport grad_check(const std::function<double(bool)> &loss_fn,
                           Parameters &params, double tolerance,
                           std::size_t max_entries = 100,
                           std::uint64_t seed = 0, double h = 1e-5);

}  // namespace ccsel
