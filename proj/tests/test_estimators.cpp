#include <doctest.h>

#include <cmath>

#include "auglab/estimators.hpp"

using namespace auglab;

namespace {

Mat gaussian_data(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double shift = 0.0) {
  Rng rng(seed);
  Mat X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = (standard_normal(d, rng).array() + shift).matrix().transpose();
  return X;
}

double mixture_loglik(const Vec& x, double theta) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double a = std::exp(-0.5 * (x(i) - theta) * (x(i) - theta));
    const double b = std::exp(-0.5 * (x(i) + theta) * (x(i) + theta));
    s += std::log(0.5 * (a + b) / std::sqrt(2.0 * M_PI));
  }
  return s;
}

double grid_argmax(const Vec& x, double hi, double step) {
  double best = 0.0;
  double best_val = mixture_loglik(x, 0.0);
  for (double t = step; t <= hi; t += step) {
    const double v = mixture_loglik(x, t);
    if (v > best_val) {
      best_val = v;
      best = t;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("gradients match finite differences") {
  Rng rng(1);
  for (const LossModel& loss : {squared_loss(3), gaussian_location_loss(3), logistic_loss(3)}) {
    for (int rep = 0; rep < 5; ++rep) {
      const Vec theta = standard_normal(3, rng);
      Vec xx = standard_normal(4, rng);
      xx(3) = rep % 2 == 0 ? 1.0 : -1.0;
      if (loss.closed_form) xx = Vec(xx.head(3));  // logistic rows keep the label last
      const Vec g = loss.grad(theta, xx);
      for (Eigen::Index j = 0; j < 3; ++j) {
        Vec e = Vec::Zero(3);
        e(j) = 1e-6;
        const double fd = (loss.value(theta + e, xx) - loss.value(theta - e, xx)) / 2e-6;
        CHECK(std::abs(fd - g(j)) <= 1e-5 * std::max(1.0, std::abs(g(j))));
      }
      const Mat H = loss.hessian(theta, xx);
      CHECK((H - H.transpose()).norm() <= 1e-14 * std::max(1.0, H.norm()));
    }
  }
}

TEST_CASE("ERM") {
  const Mat X = gaussian_data(50, 2, 2, 1.0);
  const Vec mean = X.colwise().mean().transpose();
  CHECK((erm_fit(squared_loss(2), X, Vec::Zero(2)).theta_hat - mean).norm() < 1e-14);
  CHECK((erm_fit(gaussian_location_loss(2), X, Vec::Zero(2)).theta_hat - mean).norm() < 1e-14);

  // Squared loss without the closed form runs the optimizer.
  LossModel sq = squared_loss(2);
  sq.closed_form = nullptr;
  const auto fit = erm_fit(sq, X, Vec::Zero(2));
  CHECK(fit.converged);
  CHECK((fit.theta_hat - mean).norm() < 1e-8);

  // 1-d logistic toy against a grid search.
  Rng rng(3);
  Mat D(100, 2);
  std::bernoulli_distribution flip(0.8);
  for (Eigen::Index i = 0; i < 100; ++i) {
    const double z = standard_normal(1, rng)(0);
    const double y = z > 0 ? 1.0 : -1.0;
    D(i, 0) = z;
    D(i, 1) = flip(rng) ? y : -y;
  }
  const LossModel lg = logistic_loss(1);
  const auto lf = erm_fit(lg, D, Vec::Zero(1));
  CHECK(lf.converged);
  double best = 0.0;
  double best_risk = empirical_risk(lg, D, Vec::Zero(1));
  for (double t = -5.0; t <= 5.0; t += 1e-4) {
    const double r = empirical_risk(lg, D, Vec::Constant(1, t));
    if (r < best_risk) {
      best_risk = r;
      best = t;
    }
  }
  CHECK(std::abs(lf.theta_hat(0) - best) < 2e-4);
  CHECK(lf.objective <= best_risk + 1e-12);
}

TEST_CASE("augmented ERM") {
  const Mat X = gaussian_data(20, 2, 4, 0.5);
  const auto sign = OrbitAverager::exact(make_sign_group(2));
  CHECK(augmented_erm_fit(squared_loss(2), sign, X, Vec::Ones(2)).theta_hat.norm() < 1e-15);

  const auto triv = OrbitAverager::exact(make_trivial_group(2));
  CHECK(augmented_erm_fit(squared_loss(2), triv, X, Vec::Zero(2)).theta_hat ==
        erm_fit(squared_loss(2), X, Vec::Zero(2)).theta_hat);

  Mat both(40, 2);
  both.topRows(20) = X;
  both.bottomRows(20) = X.rowwise().reverse();
  const auto flip = OrbitAverager::exact(make_flip_group(2));
  LossModel sq = squared_loss(2);
  sq.closed_form = nullptr;
  const auto a = augmented_erm_fit(sq, flip, X, Vec::Zero(2));
  const auto b = erm_fit(sq, both, Vec::Zero(2));
  CHECK((a.theta_hat - b.theta_hat).norm() < 1e-8);
  CHECK(std::abs(a.theta_hat(0) - a.theta_hat(1)) < 1e-8);

  const Mat ex = expand_dataset(flip, X);
  CHECK(ex.rows() == 40);
  CHECK(ex.row(1) == X.row(0).reverse());
}

TEST_CASE("Gaussian mean estimators") {
  Mat one(1, 1);
  one << 1.7;
  const auto s = gaussian_mean_estimators(one, make_sign_group(1));
  CHECK(s.mle(0) == 1.7);
  CHECK(s.amle(0) == 0.0);
  CHECK(s.cmle.norm() < 1e-15);

  Mat two(1, 2);
  two << 1, 3;
  const auto f = gaussian_mean_estimators(two, make_flip_group(2));
  CHECK(f.amle.isApprox(Vec::Constant(2, 2.0)));
  CHECK(f.cmle.isApprox(Vec::Constant(2, 2.0)));

  const Mat X = gaussian_data(10, 3, 5);
  const auto t = gaussian_mean_estimators(X, make_trivial_group(3));
  CHECK(t.amle == t.mle);

  Mat shear = Mat::Identity(2, 2);
  shear(0, 1) = 1.0;
  Mat shear2 = Mat::Identity(2, 2);
  CHECK_THROWS_AS(gaussian_mean_estimators(two, make_matrix_group({shear2, shear})), ConfigError);
}

TEST_CASE("mean matrix projects onto the invariant subspace") {
  for (const FiniteGroup& g : {make_flip_group(5), make_cyclic_shift_group(4), make_permutation_group(4),
                               make_sign_group(3), make_permutation_group(9)}) {
    CAPTURE(g.name());
    const Mat B = invariant_subspace_basis(g);
    const Mat P = g.mean_matrix();
    const auto d = static_cast<Eigen::Index>(g.dim());
    if (B.cols() > 0) CHECK((P * B - B).cwiseAbs().maxCoeff() < 1e-12);
    const Mat perp = Mat::Identity(d, d) - B * B.transpose();
    CHECK((P * perp).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(invariant_subspace_basis(make_flip_group(5)).cols() == 3);
  CHECK(invariant_subspace_basis(make_sign_group(3)).cols() == 0);
}

TEST_CASE("Poisson estimators") {
  Mat counts(2, 4);
  counts << 1, 0, 3, 2, 3, 0, 1, 0;
  const auto p = poisson_estimators(counts, make_flip_group(4));
  Vec mean(4);
  mean << 2, 0, 2, 1;
  CHECK(p.mle_mean == mean);
  Vec amle(4);
  amle << 1.5, 1.0, 1.0, 1.5;
  CHECK(p.amle_mean.isApprox(amle));
  CHECK(std::isinf(p.mle_natural(1)));
  CHECK(p.amle_natural(1) == doctest::Approx(0.0));
}

TEST_CASE("marginal MLE under the sign group") {
  CHECK(marginal_mle_1d(Vec::Zero(5)).theta_hat(0) == 0.0);

  Vec pm(20);
  for (Eigen::Index i = 0; i < 20; ++i) pm(i) = i % 2 == 0 ? 5.0 : -5.0;
  CHECK(std::abs(marginal_mle_1d(pm).theta_hat(0) - grid_argmax(pm, 10.0, 1e-4)) < 1e-3);
  CHECK(std::abs(marginal_mle_1d(pm).theta_hat(0) - 5.0) < 1e-3);

  Vec small(6);
  small << 0.3, -0.3, 0.5, -0.5, 0.1, -0.1;
  CHECK(marginal_mle_1d(small).theta_hat(0) == 0.0);
  CHECK(grid_argmax(small, 3.0, 1e-3) == 0.0);

  Rng rng(9);
  Vec mix(200);
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index i = 0; i < mix.size(); ++i) mix(i) = (coin(rng) ? 2.0 : -2.0) + standard_normal(1, rng)(0);
  const double oracle = grid_argmax(mix, 5.0, 1e-4);
  const auto fit = marginal_mle_1d(mix);
  CHECK(std::abs(fit.theta_hat(0) - oracle) < 2e-4);
  CHECK(fit.objective == doctest::Approx(mixture_loglik(mix, fit.theta_hat(0))).epsilon(1e-10));
}

TEST_CASE("augmentation of dataset estimators") {
  Rng rng(1);
  const Mat X = gaussian_data(5, 2, 6);
  const DatasetEstimator first = [](const Mat& d) { return Vec::Constant(1, d(0, 0)); };
  CHECK(augment_estimator(first, DatasetAction::diagonal(make_sign_group(2)), X, 0, rng)(0) == 0.0);

  const DatasetEstimator sum_norms = [](const Mat& d) { return Vec::Constant(1, d.rowwise().norm().sum()); };
  CHECK(augment_estimator(sum_norms, DatasetAction::diagonal(make_sign_group(2)), X, 0, rng)(0) ==
        doctest::Approx(sum_norms(X)(0)));

  // OLS slope under independent per-row flips, against explicit enumeration of 2^4 patterns.
  const Mat D = gaussian_data(4, 2, 7);
  const DatasetEstimator ols = [](const Mat& d) {
    const Vec z = d.col(0);
    const Vec y = d.col(1);
    return Vec::Constant(1, z.dot(y) / z.dot(z));
  };
  double oracle = 0.0;
  for (int mask = 0; mask < 16; ++mask) {
    Mat t = D;
    for (int i = 0; i < 4; ++i) {
      if ((mask >> i) & 1) t.row(i) = D.row(i).reverse();
    }
    oracle += ols(t)(0) / 16.0;
  }
  const auto action = DatasetAction::product(make_flip_group(2), 4);
  CHECK(action.count() == 16.0);
  CHECK(augment_estimator(ols, action, D, 0, rng)(0) == doctest::Approx(oracle).epsilon(1e-13));
}

TEST_CASE("U-statistics") {
  const auto half_sq = [](const Mat& t) { return 0.5 * (t(0, 0) - t(1, 0)) * (t(0, 0) - t(1, 0)); };
  Mat d(3, 1);
  d << 1, 2, 3;
  CHECK(u_statistic(half_sq, d, 2) == doctest::Approx(1.0).epsilon(1e-15));
  const auto mean_kernel = [](const Mat& t) { return t.mean(); };
  const Mat X = gaussian_data(7, 1, 8);
  CHECK(u_statistic(mean_kernel, X, 3) == doctest::Approx(X.mean()).epsilon(1e-13));
  const auto max_kernel = [](const Mat& t) { return t.maxCoeff(); };
  CHECK(u_statistic(max_kernel, X, 7) == X.maxCoeff());
  CHECK_THROWS_AS(u_statistic(mean_kernel, X, 8), ConfigError);
  const double mc = u_statistic(half_sq, X, 2, 20000, 5);
  const double sv = (X.array() - X.mean()).square().sum() / 6.0;
  CHECK(std::abs(mc - sv) < 0.1 * sv);
}

TEST_CASE("linear regression trio") {
  const int p = 5;
  Rng rng(10);
  const Vec y = standard_normal(p, rng);
  const auto trio = linreg_trio(Mat::Identity(p, p), y, make_permutation_group(p));
  CHECK((trio.beta_adist - Vec::Constant(p, y.mean())).norm() < 1e-13);
  CHECK((trio.beta_cerm - Vec::Constant(p, y.mean())).norm() < 1e-13);
  CHECK(trio.risks.erm == doctest::Approx(5.0));
  CHECK(trio.risks.adist == doctest::Approx(1.0));
  CHECK(trio.risks.cerm == doctest::Approx(1.0));

  const auto triv = linreg_trio(Mat::Identity(p, p), y, make_trivial_group(p));
  CHECK((triv.beta_adist - triv.beta_erm).norm() == 0.0);

  // r_aDIST <= r_ERM on random designs for orthogonal actions.
  for (int rep = 0; rep < 20; ++rep) {
    Mat X(12, 4);
    for (Eigen::Index j = 0; j < 4; ++j) X.col(j) = standard_normal(12, rng);
    for (const FiniteGroup& g : {make_permutation_group(4), make_cyclic_shift_group(4), make_flip_group(4)}) {
      const auto t = linreg_trio(X, X * Vec::Ones(4), g, 0.7);
      CHECK(t.risks.adist <= t.risks.erm + 1e-12);
    }
  }
  CHECK_THROWS_AS(linreg_trio(Mat::Zero(3, 3), Vec::Ones(3), make_permutation_group(3)), NumericalError);
  CHECK_THROWS_AS(linreg_trio(Mat::Identity(3, 3), Vec::Ones(3), make_sign_group(3)), ConfigError);
}

TEST_CASE("augmented MLE does not increase MSE") {
  const FiniteGroup g = make_flip_group(6);
  Vec mu(6);
  mu << 1, -2, 0.5, 0.5, -2, 1;
  Rng rng(12);
  std::vector<double> diff;
  for (int r = 0; r < 500; ++r) {
    Mat X(5, 6);
    for (Eigen::Index i = 0; i < 5; ++i) X.row(i) = (mu + standard_normal(6, rng)).transpose();
    const auto e = gaussian_mean_estimators(X, g);
    diff.push_back((e.amle - mu).squaredNorm() - (e.mle - mu).squaredNorm());
  }
  const auto ms = mean_stderr(diff);
  CHECK(ms.mean <= 3 * ms.se);
}
