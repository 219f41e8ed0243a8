#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "auglab/core.hpp"
#include "auglab/estimators.hpp"
#include "auglab/group_actions.hpp"
#include "auglab/orbit_average.hpp"

namespace auglab {

enum class W1Method { sorted_1d, exact_assignment };

struct W1Result {
  double distance = 0.0;
  W1Method method = W1Method::sorted_1d;
  std::vector<std::size_t> coupling;  // b-index matched to each a-index (assignment only)
};

/// Exact W1 between the empirical measures of two 1-d samples of any sizes,
/// integrating the difference of the piecewise-constant quantile functions.
W1Result wasserstein1_1d(const Vec& a, const Vec& b);

constexpr std::size_t kAssignmentCutoff = 512;

/// Exact W1 between equal-size point clouds (rows) under Euclidean cost, via
/// a shortest-augmenting-path assignment solver.
W1Result wasserstein1_assignment(const Mat& a, const Mat& b);

/// Minimum-cost perfect matching for a square cost matrix; returns the column
/// assigned to each row.
std::vector<std::size_t> solve_assignment(const Mat& cost);

/// W1 between the empirical measures of the rows of a and b, choosing the 1-d
/// method for single-column inputs.
double empirical_w1(const Mat& a, const Mat& b);

using MatSampler = std::function<Mat(Rng&)>;  // one n x d dataset per call

struct MeanShiftBand {
  double lhs = 0.0;  // ||E f_bar - E f||
  double rhs = 0.0;  // E_g W1(f(gX), f(X))
};

/// Both sides of the mean-shift inequality on the empirical measure of
/// `n_mc` draws from `sampler`; exact on that measure.
MeanShiftBand mean_shift_band(const VecFn& f, const FiniteGroup& group,
                              const std::function<Vec(Rng&)>& sampler, std::size_t n_mc, Rng& rng);
/// Same check on a given set of points (rows).
MeanShiftBand mean_shift_band(const VecFn& f, const FiniteGroup& group, const Mat& data);

struct CovarianceBand {
  Mat deviation;       // Cov f_bar - Cov f
  Mat center;          // -E_X Cov_g f(gX)
  double radius = 0.0; // 4 ||f||_inf E_g W1
  double lower_margin = 0.0;  // min eig(deviation - center + radius I)
  double upper_margin = 0.0;  // min eig(center + radius I - deviation)
  double sup_norm = 0.0;
  bool sup_norm_estimated = false;
};

/// Loewner band check. Margins >= 0 mean membership. Without `sup_norm`,
/// ||f||_inf is estimated as twice the largest norm over all evaluated values.
CovarianceBand covariance_band_check(const VecFn& f, const FiniteGroup& group,
                                     const std::function<Vec(Rng&)>& sampler, std::size_t n_mc,
                                     Rng& rng, std::optional<double> sup_norm = std::nullopt);
CovarianceBand covariance_band_check(const VecFn& f, const FiniteGroup& group, const Mat& data,
                                     std::optional<double> sup_norm = std::nullopt);

struct MseTradeoff {
  double mse_plain = 0.0;
  double mse_aug = 0.0;
  double mse_diff = 0.0;        // MSE(theta_G) - MSE(theta)
  double mse_diff_se = 0.0;
  double variance_term = 0.0;   // E_X tr Cov_g theta(gX)
  double w1 = 0.0;              // E_g W1(theta(gX), theta(X))
  double bias_norm = 0.0;
  double sup_norm = 0.0;
  double delta = 0.0;           // W1 (W1 + 2 ||bias|| + 4 ||theta||_inf)
  bool in_band = false;         // |diff + variance_term| <= delta + 3 se
};

/// MSE tradeoff for an estimator on datasets drawn from `sampler`, with the
/// group acting on whole datasets through the diagonal action.
MseTradeoff mse_tradeoff(const DatasetEstimator& estimator, const FiniteGroup& group,
                         const MatSampler& sampler, const Vec& theta0, std::size_t n_mc, Rng& rng,
                         std::optional<double> sup_norm = std::nullopt);

struct RademacherEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n_rademacher_draws = 0;
  std::size_t theta_grid_size = 0;
  bool is_lower_bound = true;  // sup over a finite grid
  bool clipped = false;        // a loss value fell outside [0, 1]
};

/// Grid Rademacher complexity of the loss class on fixed data.
RademacherEstimate rademacher_estimate(const LossModel& loss, const std::vector<Vec>& theta_grid,
                                       const Mat& data, std::size_t n_rad, Rng& rng);

struct RademacherComparison {
  RademacherEstimate plain;      // E_eps E_g sup |n^-1 sum eps_i L(theta, g X_i)|
  RademacherEstimate plain_raw;  // E_eps sup |n^-1 sum eps_i L(theta, X_i)|
  RademacherEstimate augmented;  // E_eps sup |n^-1 sum eps_i Lbar(theta, X_i)|
  double delta = 0.0;            // augmented - plain
  double max_draw_delta = 0.0;   // largest per-draw augmented - plain
};

/// Shared-sign comparison of plain and augmented loss classes. The plain
/// value averages the sup over g, which makes augmented <= plain hold per
/// draw by Jensen.
RademacherComparison rademacher_compare(const LossModel& loss, const std::vector<Vec>& theta_grid,
                                        const Mat& data, const FiniteGroup& group,
                                        std::size_t n_rad, Rng& rng);

}  // namespace auglab
