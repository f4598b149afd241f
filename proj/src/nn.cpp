#include "ccsel/nn.hpp"

#include <algorithm>
#include <cmath>

#include "ccsel/errors.hpp"

namespace ccsel {

Eigen::MatrixXd &Parameters::add(const std::string &name, Eigen::Index rows,
                                 Eigen::Index cols) {
  value[name] = Eigen::MatrixXd::Zero(rows, cols);
  grad[name] = Eigen::MatrixXd::Zero(rows, cols);
  return value[name];
}

void Parameters::zero_grad() {
  for (auto &[name, g] : grad) g.setZero();
}

std::size_t Parameters::total_entries() const {
  std::size_t n = 0;
  for (const auto &[name, v] : value) n += static_cast<std::size_t>(v.size());
  return n;
}

void Optimizer::step(Parameters &params) {
  ++t_;
  if (cfg_.optimizer == OptimizerKind::Sgd) {
    for (auto &[name, v] : params.value) {
      v -= cfg_.learning_rate * params.grad.at(name);
    }
    return;
  }
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto &[name, v] : params.value) {
    const Eigen::MatrixXd &g = params.grad.at(name);
    auto [mit, inserted_m] =
        m_.try_emplace(name, Eigen::MatrixXd::Zero(v.rows(), v.cols()));
    auto [vit, inserted_v] =
        v_.try_emplace(name, Eigen::MatrixXd::Zero(v.rows(), v.cols()));
    mit->second = cfg_.beta1 * mit->second + (1.0 - cfg_.beta1) * g;
    vit->second =
        cfg_.beta2 * vit->second + (1.0 - cfg_.beta2) * g.cwiseAbs2();
    const Eigen::MatrixXd m_hat = mit->second / bc1;
    const Eigen::MatrixXd v_hat = vit->second / bc2;
    v.array() -= cfg_.learning_rate * m_hat.array() /
                 (v_hat.array().sqrt() + cfg_.adam_eps);
  }
}

void check_finite(const Eigen::MatrixXd &m, const std::string &op) {
  if (!m.allFinite()) {
    throw NumericError("non-finite value produced by " + op);
  }
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd &x) {
  Eigen::MatrixXd y = (1.0 / (1.0 + (-x.array()).exp())).matrix();
  check_finite(y, "sigmoid");
  return y;
}

Eigen::MatrixXd sigmoid_backward(const Eigen::MatrixXd &y,
                                 const Eigen::MatrixXd &dy) {
  return (dy.array() * y.array() * (1.0 - y.array())).matrix();
}

Eigen::MatrixXd tanh_fwd(const Eigen::MatrixXd &x) {
  Eigen::MatrixXd y = x.array().tanh().matrix();
  check_finite(y, "tanh");
  return y;
}

Eigen::MatrixXd tanh_backward(const Eigen::MatrixXd &y,
                              const Eigen::MatrixXd &dy) {
  return (dy.array() * (1.0 - y.array().square())).matrix();
}

Eigen::MatrixXd relu(const Eigen::MatrixXd &x) {
  return x.cwiseMax(0.0);
}

Eigen::MatrixXd relu_backward(const Eigen::MatrixXd &x,
                              const Eigen::MatrixXd &dy) {
  return (x.array() > 0.0).select(dy, Eigen::MatrixXd::Zero(x.rows(), x.cols()));
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd &logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    Eigen::ArrayXd e = (logits.row(r).array() - mx).exp();
    p.row(r) = (e / e.sum()).matrix();
  }
  check_finite(p, "softmax");
  return p;
}

Eigen::MatrixXd affine_forward(const Eigen::MatrixXd &x,
                               const Eigen::MatrixXd &w,
                               const Eigen::VectorXd &b) {
  if (x.cols() != w.cols()) {
    throw DataError("affine: input dim " + std::to_string(x.cols()) +
                    " vs weight dim " + std::to_string(w.cols()));
  }
  Eigen::MatrixXd y = (x * w.transpose()).rowwise() + b.transpose();
  check_finite(y, "affine");
  return y;
}

Eigen::MatrixXd affine_backward(const Eigen::MatrixXd &x,
                                const Eigen::MatrixXd &w,
                                const Eigen::MatrixXd &dy,
                                Eigen::MatrixXd &dw, Eigen::MatrixXd &db) {
  dw += dy.transpose() * x;
  db += dy.colwise().sum().transpose();
  return dy * w;
}

LstmCache lstm_cell_forward(const Eigen::VectorXd &x,
                            const Eigen::VectorXd &h_prev,
                            const Eigen::VectorXd &c_prev,
                            const Eigen::MatrixXd &wx,
                            const Eigen::MatrixXd &wh,
                            const Eigen::VectorXd &b) {
  const Eigen::Index hsz = h_prev.size();
  if (wx.rows() != 4 * hsz || wx.cols() != x.size() || wh.rows() != 4 * hsz ||
      wh.cols() != hsz || b.size() != 4 * hsz) {
    throw DataError("lstm_cell: shape mismatch");
  }
  Eigen::VectorXd z = wx * x + wh * h_prev + b;
  LstmCache cache;
  cache.x = x;
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  cache.i = sigmoid(z.segment(0, hsz));
  cache.f = sigmoid(z.segment(hsz, hsz));
  cache.g = tanh_fwd(z.segment(2 * hsz, hsz));
  cache.o = sigmoid(z.segment(3 * hsz, hsz));
  cache.c = cache.f.cwiseProduct(c_prev) + cache.i.cwiseProduct(cache.g);
  cache.tanh_c = tanh_fwd(cache.c);
  cache.h = cache.o.cwiseProduct(cache.tanh_c);
  check_finite(cache.h, "lstm_cell");
  return cache;
}

LstmCellGrads lstm_cell_backward(const LstmCache &cache,
                                 const Eigen::MatrixXd &wx,
                                 const Eigen::MatrixXd &wh,
                                 const Eigen::VectorXd &dh,
                                 const Eigen::VectorXd &dc,
                                 Eigen::MatrixXd &dwx, Eigen::MatrixXd &dwh,
                                 Eigen::MatrixXd &db) {
  const Eigen::Index hsz = cache.h_prev.size();
  const Eigen::VectorXd do_ = dh.cwiseProduct(cache.tanh_c);
  Eigen::VectorXd dct =
      dc + dh.cwiseProduct(cache.o)
               .cwiseProduct(
                   (1.0 - cache.tanh_c.array().square()).matrix());
  const Eigen::VectorXd di = dct.cwiseProduct(cache.g);
  const Eigen::VectorXd df = dct.cwiseProduct(cache.c_prev);
  const Eigen::VectorXd dg = dct.cwiseProduct(cache.i);

  Eigen::VectorXd dz(4 * hsz);
  dz.segment(0, hsz) =
      di.cwiseProduct(cache.i).cwiseProduct((1.0 - cache.i.array()).matrix());
  dz.segment(hsz, hsz) =
      df.cwiseProduct(cache.f).cwiseProduct((1.0 - cache.f.array()).matrix());
  dz.segment(2 * hsz, hsz) =
      dg.cwiseProduct((1.0 - cache.g.array().square()).matrix());
  dz.segment(3 * hsz, hsz) =
      do_.cwiseProduct(cache.o).cwiseProduct(
          (1.0 - cache.o.array()).matrix());

  dwx += dz * cache.x.transpose();
  dwh += dz * cache.h_prev.transpose();
  db += dz;

  LstmCellGrads out;
  out.dx = wx.transpose() * dz;
  out.dh_prev = wh.transpose() * dz;
  out.dc_prev = dct.cwiseProduct(cache.f);
  return out;
}

LossResult mse_loss(const Eigen::VectorXd &pred,
                    const Eigen::VectorXd &target) {
  if (pred.size() != target.size()) {
    throw DataError("mse_loss: length mismatch");
  }
  LossResult r;
  const Eigen::VectorXd diff = pred - target;
  r.loss = diff.squaredNorm();
  r.grad = 2.0 * diff;
  return r;
}

LossResult ce_loss_soft(const Eigen::MatrixXd &logits,
                        const Eigen::MatrixXd &targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
    throw DataError("ce_loss_soft: shape mismatch");
  }
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    if (std::abs(targets.row(r).sum() - 1.0) > 1e-9) {
      throw DataError("ce_loss_soft: target row " + std::to_string(r) +
                      " does not sum to 1");
    }
  }
  const Eigen::MatrixXd p = softmax_rows(logits);
  LossResult r;
  r.loss = -(targets.array() * (p.array() + 1e-300).log()).sum();
  r.grad = p - targets;
  check_finite(r.grad, "ce_loss_soft");
  return r;
}

void glorot_init(Eigen::MatrixXd &m, Eigen::Index fan_in, Eigen::Index fan_out,
                 Rng &rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = (2.0 * rng.uniform01() - 1.0) * r;
    }
  }
}

GradCheckReport grad_check(const std::function<double(bool)> &loss_fn,
                           Parameters &params, double tolerance,
                           std::size_t max_entries, std::uint64_t seed,
                           double h) {
  GradCheckReport report;
  params.zero_grad();
  loss_fn(true);
  std::map<std::string, Eigen::MatrixXd> analytic = params.grad;

  // Flatten (name, index) pairs, then check all or a seeded sample.
  std::vector<std::pair<std::string, Eigen::Index>> entries;
  for (const auto &[name, v] : params.value) {
    for (Eigen::Index k = 0; k < v.size(); ++k) entries.emplace_back(name, k);
  }
  std::vector<std::pair<std::string, Eigen::Index>> picked;
  if (entries.size() <= max_entries) {
    picked = entries;
  } else {
    Rng rng(seed);
    rng.shuffle(entries);
    picked.assign(entries.begin(),
                  entries.begin() + static_cast<std::ptrdiff_t>(max_entries));
  }

  for (const auto &[name, k] : picked) {
    double &slot = params.value.at(name).data()[k];
    const double orig = slot;
    slot = orig + h;
    const double lp = loss_fn(false);
    slot = orig - h;
    const double lm = loss_fn(false);
    slot = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    const double a = analytic.at(name).data()[k];
    const double denom = std::max(std::abs(a) + std::abs(numeric), 1e-8);
    const double rel = std::abs(a - numeric) / denom;
    report.max_rel_error = std::max(report.max_rel_error, rel);
    ++report.entries_checked;
    if (rel > tolerance) {
      report.pass = false;
      report.failures.push_back({name, k, a, numeric, rel});
    }
  }
  return report;
}

}  // namespace ccsel
