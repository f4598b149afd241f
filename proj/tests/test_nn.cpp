#include "doctest.h"

#include <cmath>

#include "ccsel/errors.hpp"
#include "ccsel/nn.hpp"

using namespace ccsel;

TEST_CASE("activation fixed points") {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 2);
  CHECK(sigmoid(z)(0, 0) == 0.5);
  CHECK(tanh_fwd(z)(0, 1) == 0.0);
  const auto sm = softmax_rows(z);
  CHECK(sm(0, 0) == doctest::Approx(0.5));
  CHECK(sm(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("softmax rows sum to 1 within 1e-12") {
  Eigen::MatrixXd logits(3, 4);
  logits << 1, 2, 3, 4, -100, 0, 100, 50, 0.5, 0.5, 0.5, 0.5;
  const auto p = softmax_rows(logits);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    CHECK(std::abs(p.row(r).sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("affine identity map") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(affine_forward(x, w, b) == x);
  Eigen::MatrixXd bad(2, 4);
  CHECK_THROWS_AS(affine_forward(bad, w, b), DataError);
}

TEST_CASE("lstm cell with zero weights gives zero output") {
  const int h = 3, d = 2;
  Eigen::MatrixXd wx = Eigen::MatrixXd::Zero(4 * h, d);
  Eigen::MatrixXd wh = Eigen::MatrixXd::Zero(4 * h, h);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(4 * h);
  Eigen::VectorXd x(d);
  x << 1.7, -2.3;
  const auto cache = lstm_cell_forward(x, Eigen::VectorXd::Zero(h),
                                       Eigen::VectorXd::Zero(h), wx, wh, b);
  CHECK(cache.h.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("saturated forget gate preserves cell state") {
  const int h = 2, d = 2;
  Eigen::MatrixXd wx = Eigen::MatrixXd::Zero(4 * h, d);
  Eigen::MatrixXd wh = Eigen::MatrixXd::Zero(4 * h, h);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(4 * h);
  b.segment(0, h).setConstant(-30.0);     // input gate ~ 0
  b.segment(h, h).setConstant(30.0);      // forget gate ~ 1
  Eigen::VectorXd c_prev(h);
  c_prev << 0.4, -0.9;
  Eigen::VectorXd x(d);
  x << 1.0, 1.0;
  const auto cache = lstm_cell_forward(x, Eigen::VectorXd::Zero(h), c_prev,
                                       wx, wh, b);
  CHECK((cache.c - c_prev).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("mse loss basics") {
  Eigen::VectorXd p(3), t(3);
  p << 0.2, 0.5, 0.9;
  t = p;
  const auto r = mse_loss(p, t);
  CHECK(r.loss == 0.0);
  CHECK(r.grad.cwiseAbs().maxCoeff() == 0.0);
  t << 0.0, 0.5, 0.9;
  CHECK(mse_loss(p, t).loss == doctest::Approx(0.04));
}

TEST_CASE("cross-entropy with one-hot target is negative log prob") {
  Eigen::MatrixXd logits(1, 3);
  logits << 1.0, 2.0, 0.5;
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(1, 3);
  target(0, 1) = 1.0;
  const auto r = ce_loss_soft(logits, target);
  const auto p = softmax_rows(logits);
  CHECK(r.loss == doctest::Approx(-std::log(p(0, 1))));
  // grad = p - t
  CHECK(r.grad(0, 0) == doctest::Approx(p(0, 0)));
  CHECK(r.grad(0, 1) == doctest::Approx(p(0, 1) - 1.0));
}

TEST_CASE("cross-entropy rejects non-distribution targets") {
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(1, 2);
  Eigen::MatrixXd target(1, 2);
  target << 0.6, 0.6;
  CHECK_THROWS_AS(ce_loss_soft(logits, target), DataError);
}

TEST_CASE("ce gradient matches finite differences") {
  Eigen::MatrixXd logits(2, 3);
  logits << 0.3, -1.2, 0.8, 2.0, 0.0, -0.5;
  Eigen::MatrixXd target(2, 3);
  target << 0.2, 0.5, 0.3, 1.0, 0.0, 0.0;
  const auto r = ce_loss_soft(logits, target);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    Eigen::MatrixXd lp = logits, lm = logits;
    lp.data()[i] += h;
    lm.data()[i] -= h;
    const double num =
        (ce_loss_soft(lp, target).loss - ce_loss_soft(lm, target).loss) /
        (2 * h);
    CHECK(r.grad.data()[i] == doctest::Approx(num).epsilon(1e-5));
  }
}

TEST_CASE("grad_check on a linear model with mse") {
  Parameters params;
  auto &w = params.add("w", 1, 3);
  w << 0.5, -0.3, 0.2;
  Eigen::MatrixXd x(4, 3);
  x << 1, 2, 3, -1, 0.5, 2, 0, 0, 1, 3, -2, 0.7;
  Eigen::VectorXd t(4);
  t << 1, 0, 0.5, -1;
  auto loss_fn = [&](bool grads) {
    if (grads) params.zero_grad();
    const Eigen::VectorXd pred = x * params.value.at("w").transpose();
    const auto r = mse_loss(pred, t);
    if (grads) params.grad.at("w") += r.grad.transpose() * x;
    return r.loss;
  };
  const auto report = grad_check(loss_fn, params, 1e-7);
  CHECK(report.pass);
  CHECK(report.entries_checked == 3);
  CHECK(report.max_rel_error <= 1e-7);
}

TEST_CASE("grad_check through a 3-step LSTM with regression head") {
  const int h = 4, d = 3;
  Parameters params;
  Rng rng(5);
  glorot_init(params.add("wx", 4 * h, d), d, h, rng);
  glorot_init(params.add("wh", 4 * h, h), h, h, rng);
  params.add("b", 4 * h, 1);
  glorot_init(params.add("head", 1, h), h, 1, rng);

  std::vector<Eigen::VectorXd> xs;
  std::vector<double> targets{1.0, 0.5, 1.0 / 3.0};
  for (int t = 0; t < 3; ++t) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x(k) = rng.normal();
    xs.push_back(x);
  }

  auto loss_fn = [&](bool grads) {
    if (grads) params.zero_grad();
    const auto &wx = params.value.at("wx");
    const auto &wh = params.value.at("wh");
    const Eigen::VectorXd b = params.value.at("b").col(0);
    const auto &head = params.value.at("head");
    Eigen::VectorXd hs = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(h);
    std::vector<LstmCache> caches;
    std::vector<double> preds;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      auto cache = lstm_cell_forward(xs[t], hs, cs, wx, wh, b);
      hs = cache.h;
      cs = cache.c;
      preds.push_back(head.row(0).dot(hs));
      caches.push_back(std::move(cache));
    }
    double loss = 0.0;
    for (std::size_t t = 0; t < preds.size(); ++t) {
      const double diff = preds[t] - targets[t];
      loss += diff * diff;
    }
    if (!grads) return loss;
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
    for (int t = static_cast<int>(xs.size()) - 1; t >= 0; --t) {
      const double dpred = 2.0 * (preds[t] - targets[t]);
      params.grad.at("head").row(0) += dpred * caches[t].h.transpose();
      Eigen::VectorXd dh = dh_next + dpred * head.row(0).transpose();
      auto g = lstm_cell_backward(caches[t], wx, wh, dh, dc_next,
                                  params.grad.at("wx"), params.grad.at("wh"),
                                  params.grad.at("b"));
      dh_next = g.dh_prev;
      dc_next = g.dc_prev;
    }
    return loss;
  };
  const auto report = grad_check(loss_fn, params, 1e-4, 200, 3);
  CHECK(report.pass);
  CHECK(report.max_rel_error <= 1e-4);
}

TEST_CASE("grad_check on a zero-parameter model passes vacuously") {
  Parameters params;
  auto loss_fn = [](bool) { return 1.0; };
  const auto report = grad_check(loss_fn, params, 1e-7);
  CHECK(report.pass);
  CHECK(report.entries_checked == 0);
}

TEST_CASE("adam step with zero gradient leaves parameters untouched") {
  Parameters params;
  auto &w = params.add("w", 2, 2);
  w << 1, 2, 3, 4;
  const Eigen::MatrixXd before = w;
  TrainConfig cfg;
  Optimizer opt(cfg);
  params.zero_grad();
  for (int i = 0; i < 10; ++i) opt.step(params);
  CHECK((params.value.at("w") - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("check_finite raises NumericError") {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(check_finite(m, "test"), NumericError);
}
