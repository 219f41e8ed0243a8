#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "auglab/approx_invariance.hpp"

using namespace auglab;

namespace {

Mat gaussian_points(Eigen::Index n, Eigen::Index d, Rng& rng, double shift = 0.0) {
  Mat X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = (standard_normal(d, rng).array() + shift).matrix().transpose();
  return X;
}

double brute_force_w1(const Mat& a, const Mat& b) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(a.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) c += (a.row(i) - b.row(perm[static_cast<std::size_t>(i)])).norm();
    best = std::min(best, c / static_cast<double>(a.rows()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Exact W1 of two 1-d empirical measures from their CDFs on the merged support.
double cdf_w1(const Vec& a, const Vec& b) {
  std::vector<double> pts(a.data(), a.data() + a.size());
  pts.insert(pts.end(), b.data(), b.data() + b.size());
  std::sort(pts.begin(), pts.end());
  auto cdf = [](const Vec& s, double t) { return (s.array() <= t).cast<double>().mean(); };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    total += std::abs(cdf(a, pts[k]) - cdf(b, pts[k])) * (pts[k + 1] - pts[k]);
  }
  return total;
}

FiniteGroup translation_set(Eigen::Index d, const Vec& c) {
  return make_transform_set(static_cast<std::size_t>(d), {[c](const Vec& x) { return Vec(x + c); }});
}

}  // namespace

TEST_CASE("1-d W1") {
  Rng rng(1);
  const Vec a = standard_normal(50, rng);
  CHECK(wasserstein1_1d(a, a).distance == 0.0);
  CHECK(wasserstein1_1d(a, (a.array() + 0.7).matrix()).distance == doctest::Approx(0.7).epsilon(1e-12));
  const Vec b = standard_normal(37, rng);
  CHECK(std::abs(wasserstein1_1d(a, b).distance - cdf_w1(a, b)) < 1e-12);
  CHECK(std::abs(wasserstein1_1d(a, b).distance - wasserstein1_1d(b, a).distance) < 1e-12);
  const Vec big_a = standard_normal(10000, rng);
  const Vec big_b = (standard_normal(10000, rng).array() + 1.0).matrix();
  CHECK(std::abs(wasserstein1_1d(big_a, big_b).distance - 1.0) < 0.05);
  CHECK_THROWS_AS(wasserstein1_1d(Vec(), a), ConfigError);
}

TEST_CASE("assignment W1") {
  Rng rng(2);
  const Mat a = gaussian_points(40, 2, rng);
  const auto self = wasserstein1_assignment(a, a);
  CHECK(self.distance == 0.0);
  for (std::size_t i = 0; i < self.coupling.size(); ++i) CHECK(self.coupling[i] == i);

  const Mat x = gaussian_points(60, 1, rng);
  const Mat y = gaussian_points(60, 1, rng, 0.4);
  CHECK(std::abs(wasserstein1_assignment(x, y).distance - wasserstein1_1d(x.col(0), y.col(0)).distance) < 1e-10);

  for (int n = 1; n <= 6; ++n) {
    const Mat p = gaussian_points(n, 3, rng);
    const Mat q = gaussian_points(n, 3, rng, 0.5);
    CHECK(std::abs(wasserstein1_assignment(p, q).distance - brute_force_w1(p, q)) < 1e-12);
  }
  CHECK_THROWS_AS(wasserstein1_assignment(gaussian_points(3, 2, rng), gaussian_points(4, 2, rng)), ConfigError);
  CHECK_THROWS_AS(wasserstein1_assignment(Mat::Zero(513, 1), Mat::Zero(513, 1)), CapabilityError);
}

TEST_CASE("W1 metric axioms") {
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Mat a = gaussian_points(20, 2, rng);
    const Mat b = gaussian_points(20, 2, rng, 0.3);
    const Mat c = gaussian_points(20, 2, rng, -0.2);
    const double ab = empirical_w1(a, b);
    CHECK(std::abs(ab - empirical_w1(b, a)) < 1e-10);
    CHECK(ab <= empirical_w1(a, c) + empirical_w1(c, b) + 1e-10);
  }
}

TEST_CASE("mean shift band") {
  Rng rng(4);
  const VecFn id = [](const Vec& x) { return x; };
  const std::function<Vec(Rng&)> symmetric = [](Rng& r) {
    Vec x = standard_normal(2, r);
    return x;
  };
  // A symmetric sampler gives lhs of MC size; orbit-closed points give exactly 0.
  const auto sampled = mean_shift_band(id, make_flip_group(2), symmetric, 400, rng);
  CHECK(sampled.lhs <= sampled.rhs + 1e-12);
  CHECK(sampled.lhs < 4.0 * std::sqrt(2.0 / 400.0));
  const Mat half = gaussian_points(50, 2, rng);
  Mat closed(100, 2);
  closed.topRows(50) = half;
  closed.bottomRows(50) = half.rowwise().reverse();
  CHECK(mean_shift_band(id, make_flip_group(2), closed).lhs < 1e-12);

  Vec c(2);
  c << 0.3, -0.4;
  const auto tr = mean_shift_band(id, translation_set(2, c), symmetric, 100, rng);
  CHECK(tr.lhs == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tr.rhs == doctest::Approx(0.5).epsilon(1e-12));

  const std::function<Vec(Rng&)> biased = [](Rng& r) {
    Vec x = standard_normal(2, r);
    x(0) += 1.0;
    return x;
  };
  const auto b = mean_shift_band(id, make_flip_group(2), biased, 200, rng);
  CHECK(b.lhs > 0.1);
  CHECK(b.lhs <= b.rhs + 1e-12);
}

TEST_CASE("covariance band") {
  Rng rng(5);
  const VecFn clipped = [](const Vec& x) { return Vec(x.cwiseMax(-3.0).cwiseMin(3.0)); };
  const auto triv = covariance_band_check(clipped, make_trivial_group(2), gaussian_points(100, 2, rng), 3.0 * std::sqrt(2.0));
  CHECK(triv.deviation.cwiseAbs().maxCoeff() == 0.0);
  CHECK(triv.lower_margin >= -1e-12);
  CHECK(triv.upper_margin >= -1e-12);

  // Orbit-closed data: flipped copies of every point are present, so the
  // empirical measure is exactly invariant and the radius vanishes.
  const Mat half = gaussian_points(50, 2, rng);
  Mat closed(100, 2);
  closed.topRows(50) = half;
  closed.bottomRows(50) = half.rowwise().reverse();
  const auto ex = covariance_band_check(clipped, make_flip_group(2), closed);
  CHECK(ex.radius < 1e-12);
  CHECK((ex.deviation - ex.center).cwiseAbs().maxCoeff() < 1e-12);

  Mat biased = gaussian_points(200, 2, rng);
  biased.col(0).array() += 0.8;
  const auto b = covariance_band_check(clipped, make_flip_group(2), biased, 3.0 * std::sqrt(2.0));
  CHECK(b.lower_margin >= 0.0);
  CHECK(b.upper_margin >= 0.0);
  CHECK_FALSE(b.sup_norm_estimated);
  CHECK_THROWS_AS(covariance_band_check(clipped, make_flip_group(2), biased, 0.5), ConfigError);
}

TEST_CASE("MSE tradeoff") {
  Rng rng(6);
  const DatasetEstimator mean = [](const Mat& d) { return Vec(d.colwise().mean().transpose().cwiseMax(-5.0).cwiseMin(5.0)); };
  const MatSampler symmetric = [](Rng& r) {
    Mat X(20, 2);
    for (Eigen::Index i = 0; i < 20; ++i) X.row(i) = standard_normal(2, r).transpose();
    return X;
  };
  const auto triv = mse_tradeoff(mean, make_trivial_group(2), symmetric, Vec::Zero(2), 100, rng);
  CHECK(triv.mse_diff == 0.0);
  CHECK(triv.variance_term == 0.0);
  CHECK(triv.w1 == 0.0);

  const MatSampler shifted = [](Rng& r) {
    Mat X(20, 2);
    for (Eigen::Index i = 0; i < 20; ++i) X.row(i) = standard_normal(2, r).transpose();
    X.col(0).array() += 0.1;
    return X;
  };
  Vec theta0(2);
  theta0 << 0.1, 0.0;
  const auto t = mse_tradeoff(mean, make_flip_group(2), shifted, theta0, 400, rng, 5.0 * std::sqrt(2.0));
  CHECK(t.in_band);
  CHECK(t.mse_aug == doctest::Approx(t.mse_plain + t.mse_diff));
}

TEST_CASE("Rademacher estimates") {
  LossModel loss;
  loss.param_dim = 1;
  loss.value = [](const Vec&, const Vec& x) { return std::min(1.0, std::abs(x(0)) / 3.0); };
  Rng rng(7);
  const Mat X = gaussian_points(10, 1, rng);
  Vec L(10);
  for (Eigen::Index i = 0; i < 10; ++i) L(i) = loss.value(Vec::Zero(1), X.row(i).transpose());
  double exact = 0.0;
  for (int mask = 0; mask < 1024; ++mask) {
    double s = 0.0;
    for (int i = 0; i < 10; ++i) s += ((mask >> i) & 1 ? 1.0 : -1.0) * L(i);
    exact += std::abs(s) / 10.0 / 1024.0;
  }
  const auto est = rademacher_estimate(loss, {Vec::Zero(1)}, X, 10000, rng);
  CHECK(std::abs(est.value - exact) < 0.1 * exact);
  CHECK(est.is_lower_bound);
  CHECK_FALSE(est.clipped);

  LossModel zero;
  zero.param_dim = 1;
  zero.value = [](const Vec&, const Vec&) { return 0.0; };
  CHECK(rademacher_estimate(zero, {Vec::Zero(1)}, X, 100, rng).value == 0.0);
  CHECK_THROWS_AS(rademacher_estimate(zero, {}, X, 100, rng), ConfigError);

  LossModel big;
  big.param_dim = 1;
  big.value = [](const Vec&, const Vec&) { return 2.0; };
  CHECK(rademacher_estimate(big, {Vec::Zero(1)}, X, 10, rng).clipped);
}

TEST_CASE("augmentation reduces Rademacher complexity on shared signs") {
  LossModel loss;
  loss.param_dim = 2;
  loss.value = [](const Vec& theta, const Vec& x) { return 1.0 - std::exp(-(theta - x).squaredNorm() / 4.0); };
  std::vector<Vec> grid;
  for (double a = -1.0; a <= 1.0; a += 0.5) {
    for (double b = -1.0; b <= 1.0; b += 0.5) grid.push_back((Vec(2) << a, b).finished());
  }
  Rng rng(8);
  const Mat X = gaussian_points(30, 2, rng);
  const auto cmp = rademacher_compare(loss, grid, X, make_flip_group(2), 500, rng);
  CHECK(cmp.augmented.value <= cmp.plain.value);
  CHECK(cmp.max_draw_delta <= 1e-15);
  CHECK(cmp.delta <= 0.0);
}
