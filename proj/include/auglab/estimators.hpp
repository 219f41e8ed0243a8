#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "auglab/core.hpp"
#include "auglab/group_actions.hpp"
#include "auglab/orbit_average.hpp"

namespace auglab {

/// Loss L(theta, x) with gradient and optional Hessian. `closed_form`, when
/// set, returns the minimizer of the empirical risk over the rows of a
/// dataset and replaces the iterative optimizer.
struct LossModel {
  std::function<double(const Vec& theta, const Vec& x)> value;
  std::function<Vec(const Vec& theta, const Vec& x)> grad;
  std::function<Mat(const Vec& theta, const Vec& x)> hessian;
  std::function<Vec(const Mat& data)> closed_form;
  Eigen::Index param_dim = 0;
  double strong_convexity = 0.0;
};

/// L = ||theta - x||^2, strongly convex with lambda = 2.
LossModel squared_loss(Eigen::Index dim);
/// Negative Gaussian log-likelihood of a unit-variance location model, up to
/// a constant: L = ||theta - x||^2 / 2.
LossModel gaussian_location_loss(Eigen::Index dim);
/// Logistic loss on rows (z, y) with y in {-1, +1}: log(1 + exp(-y theta'z)).
LossModel logistic_loss(Eigen::Index dim);

struct EstimatorResult {
  Vec theta_hat;
  std::size_t iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

constexpr double kFitTolerance = 1e-8;
constexpr std::size_t kMaxIterations = 100000;

double empirical_risk(const LossModel& loss, const Mat& data, const Vec& theta);
Vec empirical_gradient(const LossModel& loss, const Mat& data, const Vec& theta);

/// Minimizes the empirical risk by gradient descent with backtracking; uses
/// loss.closed_form when present. Non-convergence is flagged, not thrown.
EstimatorResult erm_fit(const LossModel& loss, const Mat& data, const Vec& init,
                        double tol = kFitTolerance, std::size_t max_iter = kMaxIterations);

/// Rows g x_i for every element the averager uses, grouped by row i. Exact
/// mode on a group of order k gives k*n rows.
Mat expand_dataset(const OrbitAverager& avg, const Mat& data);

/// Minimizer of the orbit-averaged empirical risk, computed as erm_fit on the
/// expanded dataset.
EstimatorResult augmented_erm_fit(const LossModel& loss, const OrbitAverager& avg,
                                  const Mat& data, const Vec& init,
                                  double tol = kFitTolerance);

/// Orthonormal basis of {v : g'v = v for all g}: null space of the stacked
/// (g' - I) via SVD with threshold 1e-10. Sampler-backed groups use the
/// eigenvectors of the closed-form mean matrix with eigenvalue 1.
Mat invariant_subspace_basis(const FiniteGroup& group);

struct GaussianMeanEstimates {
  Vec mle;
  Vec amle;
  Vec cmle;
};

/// MLE, aMLE (mean matrix applied to the sample mean) and cMLE (projection
/// onto the invariant subspace, computed independently from its basis).
GaussianMeanEstimates gaussian_mean_estimators(const Mat& data, const FiniteGroup& group);

struct PoissonEstimates {
  Vec mle_mean;     // sample mean of counts
  Vec amle_mean;    // averaged sufficient statistic
  Vec mle_natural;  // log of the above; -inf for zero means
  Vec amle_natural;
};

PoissonEstimates poisson_estimators(const Mat& counts, const FiniteGroup& group);

/// Maximizer over theta >= 0 of the symmetric mixture likelihood
/// prod_i (phi(x_i - theta) + phi(x_i + theta)) / 2.
EstimatorResult marginal_mle_1d(const Vec& data, double tol = 1e-10);

/// A family of transforms of a whole dataset with the uniform measure.
class DatasetAction {
 public:
  /// The same g applied to every row.
  static DatasetAction diagonal(FiniteGroup group);
  /// Independent g per row: the product group G^n.
  static DatasetAction product(FiniteGroup group, std::size_t n);
  /// Row subsets of size r.
  static DatasetAction subsample(std::size_t n, std::size_t r);

  /// Number of transforms, as a real (G^n overflows integers quickly).
  double count() const { return count_; }
  bool enumerable() const { return count_ <= static_cast<double>(FiniteGroup::kEnumerationCutoff); }
  Mat apply(std::size_t index, const Mat& data) const;
  Mat sample(const Mat& data, Rng& rng) const;

 private:
  double count_ = 0.0;
  std::function<Mat(std::size_t, const Mat&)> apply_;
  std::function<Mat(const Mat&, Rng&)> sample_;
};

using DatasetEstimator = std::function<Vec(const Mat&)>;

/// E_g base(g data): exact over all transforms when k == 0, otherwise the mean
/// over k sampled transforms.
Vec augment_estimator(const DatasetEstimator& base, const DatasetAction& action,
                      const Mat& data, std::size_t k, Rng& rng);

/// U-statistic of order r. Exact over all r-subsets when mc_draws == 0.
double u_statistic(const std::function<double(const Mat&)>& kernel, const Mat& data,
                   std::size_t r, std::size_t mc_draws = 0, std::uint64_t seed = 0);

struct LinregRisks {
  double erm = 0.0;
  double adist = 0.0;
  double cerm = 0.0;
};

struct LinregTrio {
  Vec beta_erm;
  Vec beta_adist;
  Vec beta_cerm;
  Mat invariant_basis;
  LinregRisks risks;  // closed forms for noise variance gamma^2
};

LinregTrio linreg_trio(const Mat& X, const Vec& y, const FiniteGroup& group, double gamma = 1.0);

}  // namespace auglab
