#include "auglab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace auglab {

namespace {

double softplus(double t) {
  // log(1 + e^t) without overflow
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Vec column_mean(const Mat& data) { return data.colwise().mean().transpose(); }

void require_rows(const Mat& data, const char* what) {
  if (data.rows() == 0) throw ConfigError(std::string(what) + " needs at least one row");
}

}  // namespace

LossModel squared_loss(Eigen::Index dim) {
  LossModel loss;
  loss.param_dim = dim;
  loss.strong_convexity = 2.0;
  loss.value = [](const Vec& theta, const Vec& x) { return (theta - x).squaredNorm(); };
  loss.grad = [](const Vec& theta, const Vec& x) -> Vec { return 2.0 * (theta - x); };
  loss.hessian = [dim](const Vec&, const Vec&) -> Mat { return 2.0 * Mat::Identity(dim, dim); };
  loss.closed_form = column_mean;
  return loss;
}

LossModel gaussian_location_loss(Eigen::Index dim) {
  LossModel loss;
  loss.param_dim = dim;
  loss.strong_convexity = 1.0;
  loss.value = [](const Vec& theta, const Vec& x) { return 0.5 * (theta - x).squaredNorm(); };
  loss.grad = [](const Vec& theta, const Vec& x) -> Vec { return theta - x; };
  loss.hessian = [dim](const Vec&, const Vec&) -> Mat { return Mat::Identity(dim, dim); };
  loss.closed_form = column_mean;
  return loss;
}

LossModel logistic_loss(Eigen::Index dim) {
  LossModel loss;
  loss.param_dim = dim;
  loss.value = [dim](const Vec& theta, const Vec& x) {
    const double y = x(dim);
    return softplus(-y * theta.dot(x.head(dim)));
  };
  loss.grad = [dim](const Vec& theta, const Vec& x) -> Vec {
    const double y = x(dim);
    return -y * sigmoid(-y * theta.dot(x.head(dim))) * x.head(dim);
  };
  loss.hessian = [dim](const Vec& theta, const Vec& x) -> Mat {
    const double s = sigmoid(theta.dot(x.head(dim)));
    return s * (1.0 - s) * x.head(dim) * x.head(dim).transpose();
  };
  return loss;
}

double empirical_risk(const LossModel& loss, const Mat& data, const Vec& theta) {
  require_rows(data, "empirical_risk");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) sum += loss.value(theta, data.row(i).transpose());
  return sum / static_cast<double>(data.rows());
}

Vec empirical_gradient(const LossModel& loss, const Mat& data, const Vec& theta) {
  require_rows(data, "empirical_gradient");
  Vec sum = Vec::Zero(theta.size());
  for (Eigen::Index i = 0; i < data.rows(); ++i) sum += loss.grad(theta, data.row(i).transpose());
  return sum / static_cast<double>(data.rows());
}

EstimatorResult erm_fit(const LossModel& loss, const Mat& data, const Vec& init, double tol,
                        std::size_t max_iter) {
  require_rows(data, "erm_fit");
  if (init.size() != loss.param_dim) throw ConfigError("init has wrong parameter dimension");
  EstimatorResult out;
  if (loss.closed_form) {
    out.theta_hat = loss.closed_form(data);
    out.objective = empirical_risk(loss, data, out.theta_hat);
    out.converged = empirical_gradient(loss, data, out.theta_hat).norm() <= std::max(tol, 1e-10);
    return out;
  }
  Vec theta = init;
  double risk = empirical_risk(loss, data, theta);
  double step = 1.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const Vec g = empirical_gradient(loss, data, theta);
    const double gnorm2 = g.squaredNorm();
    out.iterations = it;
    if (std::sqrt(gnorm2) <= tol) {
      out.converged = true;
      break;
    }
    step = std::min(step * 2.0, 1e6);
    Vec candidate = theta - step * g;
    double cand_risk = empirical_risk(loss, data, candidate);
    while (cand_risk > risk - 0.5 * step * gnorm2 && step > 1e-16) {
      step *= 0.5;
      candidate = theta - step * g;
      cand_risk = empirical_risk(loss, data, candidate);
    }
    if (step <= 1e-16) break;  // no descent possible at machine precision
    theta = std::move(candidate);
    risk = cand_risk;
    out.iterations = it + 1;
  }
  out.theta_hat = theta;
  out.objective = risk;
  if (!out.converged) out.converged = empirical_gradient(loss, data, theta).norm() <= tol;
  return out;
}

Mat expand_dataset(const OrbitAverager& avg, const Mat& data) {
  require_rows(data, "expand_dataset");
  std::vector<Vec> rows;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Vec x = data.row(i).transpose();
    if (avg.mode == AverageMode::exact) {
      for (const auto& g : avg.group.elements()) rows.push_back(g.apply(x));
    } else {
      Rng rng = make_rng(avg.seed, static_cast<std::uint64_t>(i));
      for (std::size_t j = 0; j < avg.k; ++j) rows.push_back(avg.group.haar_sample(rng).apply(x));
    }
  }
  Mat out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  return out;
}

EstimatorResult augmented_erm_fit(const LossModel& loss, const OrbitAverager& avg,
                                  const Mat& data, const Vec& init, double tol) {
  if (avg.mode == AverageMode::exact && !avg.group.enumerated()) {
    throw CapabilityError("exact augmented fit requires an enumerated group");
  }
  return erm_fit(loss, expand_dataset(avg, data), init, tol);
}

Mat invariant_subspace_basis(const FiniteGroup& group) {
  if (!group.is_linear()) throw CapabilityError("invariant subspace requires a linear action");
  const auto d = static_cast<Eigen::Index>(group.dim());
  if (!group.enumerated()) {
    Eigen::SelfAdjointEigenSolver<Mat> es(group.mean_matrix());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (std::abs(es.eigenvalues()(j) - 1.0) < 1e-10) keep.push_back(j);
    }
    Mat basis(d, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      basis.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]);
    }
    return basis;
  }
  const auto& elems = group.elements();
  Mat stacked(d * static_cast<Eigen::Index>(elems.size()), d);
  for (std::size_t k = 0; k < elems.size(); ++k) {
    if (elems[k].matrix->rows() != d) throw CapabilityError("invariant subspace needs a square action");
    stacked.middleRows(static_cast<Eigen::Index>(k) * d, d) =
        elems[k].matrix->transpose() - Mat::Identity(d, d);
  }
  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (j >= sv.size() || sv(j) < 1e-10) keep.push_back(j);
  }
  Mat basis(d, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    basis.col(static_cast<Eigen::Index>(c)) = svd.matrixV().col(keep[c]);
  }
  return basis;
}

GaussianMeanEstimates gaussian_mean_estimators(const Mat& data, const FiniteGroup& group) {
  require_rows(data, "gaussian_mean_estimators");
  if (static_cast<std::size_t>(data.cols()) != group.dim()) {
    throw ConfigError("data dimension does not match the group");
  }
  if (group.enumerated()) {
    for (const auto& g : group.elements()) {
      if (!g.matrix || g.matrix->rows() != g.matrix->cols() ||
          (g.matrix->transpose() * *g.matrix - Mat::Identity(g.matrix->rows(), g.matrix->cols()))
                  .cwiseAbs()
                  .maxCoeff() > 1e-10) {
        throw ConfigError("gaussian_mean_estimators requires an orthogonal linear action");
      }
    }
  }
  GaussianMeanEstimates out;
  out.mle = column_mean(data);
  out.amle = group.mean_matrix() * out.mle;
  const Mat basis = invariant_subspace_basis(group);
  out.cmle = basis * (basis.transpose() * out.mle);
  return out;
}

PoissonEstimates poisson_estimators(const Mat& counts, const FiniteGroup& group) {
  require_rows(counts, "poisson_estimators");
  if ((counts.array() < 0.0).any()) throw ConfigError("Poisson counts must be nonnegative");
  PoissonEstimates out;
  out.mle_mean = column_mean(counts);
  out.amle_mean = group.mean_matrix() * out.mle_mean;
  out.mle_natural = out.mle_mean.array().log();
  out.amle_natural = out.amle_mean.array().log();
  return out;
}

EstimatorResult marginal_mle_1d(const Vec& data, double tol) {
  if (data.size() == 0) throw ConfigError("marginal_mle_1d needs data");
  const double n = static_cast<double>(data.size());
  auto loglik = [&data, n](double theta) {
    double s = -0.5 * n * theta * theta;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      const double a = std::abs(data(i) * theta);
      // log cosh(a) = a + log1p(e^{-2a}) - log 2
      s += a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
      s += -0.5 * data(i) * data(i) - 0.5 * std::log(2.0 * M_PI);
    }
    return s;
  };
  // The score divided by theta is decreasing on (0, inf) with limit
  // sum x^2 - n at 0, so the maximizer is 0 unless sum x^2 > n.
  auto h = [&data, n](double theta) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i) s += data(i) * std::tanh(data(i) * theta) / theta;
    return s - n;
  };
  EstimatorResult out;
  out.theta_hat = Vec::Zero(1);
  out.converged = true;
  if (data.squaredNorm() <= n) {
    out.objective = loglik(0.0);
    return out;
  }
  double lo = 0.0;
  double hi = data.cwiseAbs().sum() / n;  // h(hi) <= 0 here
  std::size_t it = 0;
  while (hi - lo > tol && it < 400) {
    const double mid = 0.5 * (lo + hi);
    if (mid > 0.0 && h(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++it;
  }
  out.theta_hat(0) = 0.5 * (lo + hi);
  out.iterations = it;
  out.objective = loglik(out.theta_hat(0));
  return out;
}

DatasetAction DatasetAction::diagonal(FiniteGroup group) {
  DatasetAction a;
  a.count_ = group.nominal_order();
  a.apply_ = [group](std::size_t idx, const Mat& data) { return group.element(idx).apply_rows(data); };
  a.sample_ = [group](const Mat& data, Rng& rng) { return group.haar_sample(rng).apply_rows(data); };
  return a;
}

DatasetAction DatasetAction::product(FiniteGroup group, std::size_t n) {
  DatasetAction a;
  a.count_ = std::pow(group.nominal_order(), static_cast<double>(n));
  a.apply_ = [group, n](std::size_t idx, const Mat& data) {
    if (static_cast<std::size_t>(data.rows()) != n) throw ConfigError("product action built for a different n");
    const std::size_t k = group.order();
    Mat out(data.rows(), data.cols());
    // row i uses digit i of idx in base |G|, least significant first
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const Vec gx = group.element(idx % k).apply(data.row(i).transpose());
      if (gx.size() != out.cols()) throw ConfigError("product action must preserve row length");
      out.row(i) = gx.transpose();
      idx /= k;
    }
    return out;
  };
  a.sample_ = [group, n](const Mat& data, Rng& rng) {
    if (static_cast<std::size_t>(data.rows()) != n) throw ConfigError("product action built for a different n");
    Mat out(data.rows(), data.cols());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      out.row(i) = group.haar_sample(rng).apply(data.row(i).transpose()).transpose();
    }
    return out;
  };
  return a;
}

DatasetAction DatasetAction::subsample(std::size_t n, std::size_t r) {
  return diagonal(make_subsample_semigroup(n, r));
}

Mat DatasetAction::apply(std::size_t index, const Mat& data) const {
  if (static_cast<double>(index) >= count_) throw ConfigError("dataset transform index out of range");
  return apply_(index, data);
}

Mat DatasetAction::sample(const Mat& data, Rng& rng) const { return sample_(data, rng); }

Vec augment_estimator(const DatasetEstimator& base, const DatasetAction& action, const Mat& data,
                      std::size_t k, Rng& rng) {
  Vec sum;
  double count = 0.0;
  auto accumulate = [&sum, &count](const Vec& v) {
    if (count == 0.0) {
      sum = v;
    } else {
      if (v.size() != sum.size()) throw ConfigError("estimator output length varies");
      sum += v;
    }
    count += 1.0;
  };
  if (k == 0) {
    if (!action.enumerable()) {
      throw CapabilityError("exact augmentation needs at most " +
                            std::to_string(FiniteGroup::kEnumerationCutoff) + " transforms");
    }
    const auto total = static_cast<std::size_t>(action.count());
    for (std::size_t idx = 0; idx < total; ++idx) accumulate(base(action.apply(idx, data)));
  } else {
    for (std::size_t j = 0; j < k; ++j) accumulate(base(action.sample(data, rng)));
  }
  return sum / count;
}

double u_statistic(const std::function<double(const Mat&)>& kernel, const Mat& data,
                   std::size_t r, std::size_t mc_draws, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(data.rows());
  if (r == 0 || r > n) throw ConfigError("u_statistic needs 1 <= r <= n");
  const DatasetAction subsets = DatasetAction::subsample(n, r);
  Rng rng(seed);
  const DatasetEstimator base = [&kernel](const Mat& tuple) {
    Vec v(1);
    v(0) = kernel(tuple);
    return v;
  };
  return augment_estimator(base, subsets, data, mc_draws, rng)(0);
}

LinregTrio linreg_trio(const Mat& X, const Vec& y, const FiniteGroup& group, double gamma) {
  if (X.rows() != y.size()) throw ConfigError("design and response lengths differ");
  if (static_cast<std::size_t>(X.cols()) != group.dim()) {
    throw ConfigError("group dimension must equal the number of covariates");
  }
  Eigen::JacobiSVD<Mat> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  if (sv.size() < X.cols() || sv(sv.size() - 1) <= 1e-12 * std::max(1.0, sv(0))) {
    throw NumericalError("design matrix is singular");
  }
  LinregTrio out;
  out.beta_erm = svd.solve(y);
  const Mat G = group.mean_matrix();
  out.beta_adist = G.transpose() * out.beta_erm;
  out.invariant_basis = invariant_subspace_basis(group);
  if (out.invariant_basis.cols() == 0) throw ConfigError("invariant subspace is empty");
  const Mat XB = X * out.invariant_basis;
  out.beta_cerm = out.invariant_basis * XB.colPivHouseholderQr().solve(y);

  const double g2 = gamma * gamma;
  const Mat& V = svd.matrixV();
  for (Eigen::Index j = 0; j < sv.size(); ++j) {
    const double inv2 = 1.0 / (sv(j) * sv(j));
    out.risks.erm += g2 * inv2;
    out.risks.adist += g2 * inv2 * (G.transpose() * V.col(j)).squaredNorm();
  }
  out.risks.cerm = g2 * (XB.transpose() * XB).inverse().trace();
  return out;
}

}  // namespace auglab
