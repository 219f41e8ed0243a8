#include <doctest.h>

#include <cmath>

#include "auglab/augmented_sgd.hpp"

using namespace auglab;

namespace {

Mat gaussian_data(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double shift) {
  Rng rng(seed);
  Mat X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = (standard_normal(d, rng).array() + shift).matrix().transpose();
  return X;
}

}  // namespace

TEST_CASE("sign group drives squared-loss SGD to zero") {
  // Constant steps leave stationary noise of order eta * sd(x) in the last
  // iterate, so the tail average is compared against 0.
  const Mat X = gaussian_data(100, 1, 1, 1.0);
  SgdConfig cfg;
  cfg.eta0 = 0.1;
  cfg.max_steps = 10000;
  cfg.seed = 5;
  cfg.record_trajectory = true;
  const auto res = augmented_sgd(squared_loss(1), make_sign_group(1), X, Vec::Ones(1), cfg);
  CHECK_FALSE(res.diverged);
  double tail = 0.0;
  for (std::size_t t = 5000; t < res.trajectory.size(); ++t) tail += res.trajectory[t](0);
  tail /= static_cast<double>(res.trajectory.size() - 5000);
  CHECK(std::abs(tail) < 0.05);
  CHECK(std::abs(res.fit.theta_hat(0)) < 1.0);
}

TEST_CASE("trivial group reproduces plain SGD") {
  const Mat X = gaussian_data(30, 3, 2, 0.5);
  SgdConfig cfg;
  cfg.batch_size = 4;
  cfg.max_steps = 200;
  cfg.seed = 9;
  cfg.record_trajectory = true;
  const auto a = augmented_sgd(squared_loss(3), make_trivial_group(3), X, Vec::Zero(3), cfg);
  const auto b = plain_sgd(squared_loss(3), X, Vec::Zero(3), cfg);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t t = 0; t < a.trajectory.size(); ++t) CHECK(a.trajectory[t] == b.trajectory[t]);
}

TEST_CASE("same seed gives the same trajectory") {
  const Mat X = gaussian_data(30, 4, 3, 0.0);
  SgdConfig cfg;
  cfg.batch_size = 3;
  cfg.max_steps = 300;
  cfg.seed = 1;
  cfg.record_trajectory = true;
  const FiniteGroup g = make_cyclic_shift_group(4);
  const auto a = augmented_sgd(squared_loss(4), g, X, Vec::Zero(4), cfg);
  const auto b = augmented_sgd(squared_loss(4), g, X, Vec::Zero(4), cfg);
  CHECK(a.trajectory == b.trajectory);
  cfg.seed = 2;
  CHECK_FALSE(augmented_sgd(squared_loss(4), g, X, Vec::Zero(4), cfg).trajectory == a.trajectory);
}

TEST_CASE("flip group SGD approaches the augmented least-squares solution") {
  const Mat X = gaussian_data(200, 2, 4, 0.0);
  SgdConfig cfg;
  cfg.schedule = LearningRate::inverse_t;
  cfg.eta0 = 0.5;
  cfg.batch_size = 10;
  cfg.max_steps = 20000;
  cfg.seed = 3;
  const FiniteGroup g = make_flip_group(2);
  const auto res = augmented_sgd(squared_loss(2), g, X, Vec::Zero(2), cfg);
  const Vec exact = augmented_erm_fit(squared_loss(2), OrbitAverager::exact(g), X, Vec::Zero(2)).theta_hat;
  CHECK((res.fit.theta_hat - exact).norm() < 0.02);
}

TEST_CASE("update direction is unbiased over the group") {
  Rng rng(4);
  const Mat batch = gaussian_data(3, 3, 5, 0.3);
  const Vec theta = standard_normal(2, rng);
  const LossModel loss = logistic_loss(2);
  const FiniteGroup lifted = lift_group(make_flip_group(2), 1);
  Mat rows = batch;
  rows.col(2) = Vec::Ones(3) - 2.0 * (batch.col(2).array() < 0).cast<double>().matrix();

  // Rows are (z, y) with the flip acting on z only. Average of sgd_direction over every assignment of elements to rows.
  Vec avg = Vec::Zero(2);
  int count = 0;
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t c = 0; c < 2; ++c) {
        avg += sgd_direction(loss, rows, {lifted.element(a), lifted.element(b), lifted.element(c)},
                             theta);
        ++count;
      }
    }
  }
  avg /= count;
  Vec exact = Vec::Zero(2);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (const auto& e : lifted.elements()) exact += loss.grad(theta, e.apply(rows.row(i).transpose()));
  }
  exact /= 6.0;
  CHECK((avg - exact).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("windowed objective does not increase") {
  const Mat X = gaussian_data(100, 3, 6, 1.0);
  SgdConfig cfg;
  cfg.eta0 = 0.05;
  cfg.batch_size = 5;
  cfg.max_steps = 1000;
  cfg.seed = 8;
  cfg.record_objective = true;
  const auto res = augmented_sgd(squared_loss(3), make_cyclic_shift_group(3), X, Vec::Constant(3, 5.0), cfg);
  REQUIRE(res.objective.size() == 1000);
  const double minimum = augmented_erm_fit(squared_loss(3), OrbitAverager::exact(make_cyclic_shift_group(3)), X,
                                           Vec::Zero(3)).objective;
  std::vector<double> windows;
  for (std::size_t w = 0; w + 100 <= res.objective.size(); w += 100) {
    double s = 0.0;
    for (std::size_t t = w; t < w + 100; ++t) s += res.objective[t];
    windows.push_back(s / 100.0);
  }
  // Non-increasing up to the stationary noise floor around the minimum.
  for (std::size_t w = 1; w < windows.size(); ++w) {
    CHECK(windows[w] <= windows[w - 1] + 0.01 * (windows[0] - minimum));
  }
}

TEST_CASE("divergence is flagged") {
  const Mat X = gaussian_data(10, 1, 7, 0.0);
  SgdConfig cfg;
  cfg.eta0 = 5.0;
  cfg.max_steps = 1000;
  const auto res = plain_sgd(squared_loss(1), X, Vec::Ones(1), cfg);
  CHECK(res.diverged);
  CHECK(res.fit.iterations < 1000);
}

TEST_CASE("config validation") {
  const Mat X = gaussian_data(5, 1, 8, 0.0);
  SgdConfig cfg;
  cfg.batch_size = 6;
  CHECK_THROWS_AS(plain_sgd(squared_loss(1), X, Vec::Zero(1), cfg), ConfigError);
  cfg.batch_size = 1;
  cfg.eta0 = 0.0;
  CHECK_THROWS_AS(plain_sgd(squared_loss(1), X, Vec::Zero(1), cfg), ConfigError);
}
