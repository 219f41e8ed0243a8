#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "auglab/core.hpp"
#include "auglab/group_actions.hpp"

namespace auglab {

using VecFn = std::function<Vec(const Vec&)>;

enum class AverageMode { exact, monte_carlo };

/// Configuration for f -> f_bar. In Monte Carlo mode each data point i draws
/// its own k elements from the stream derived from (seed, i).
struct OrbitAverager {
  FiniteGroup group;
  AverageMode mode = AverageMode::exact;
  std::size_t k = 1;
  std::uint64_t seed = 0;

  static OrbitAverager exact(FiniteGroup g) { return {std::move(g), AverageMode::exact, 0, 0}; }
  static OrbitAverager monte_carlo(FiniteGroup g, std::size_t k, std::uint64_t seed) {
    return {std::move(g), AverageMode::monte_carlo, k, seed};
  }
};

/// Values f(g x) for the elements the averager uses at point `point_index`,
/// one row per element.
Mat orbit_values(const OrbitAverager& avg, const VecFn& f, const Vec& x,
                 std::size_t point_index = 0);

Vec orbit_average(const OrbitAverager& avg, const VecFn& f, const Vec& x,
                  std::size_t point_index = 0);

/// max over points x and elements g of ||f_bar(gx) - f_bar(x)||. When g changes
/// the dimension of x (subsampling), gx is outside the group's domain and
/// f_bar(gx) is taken to be f(gx).
double invariance_defect(const OrbitAverager& avg, const VecFn& f, const Mat& points);

struct VarianceDecomposition {
  Mat cov_f;
  Mat cov_fbar;
  Mat mean_within_orbit_cov;
  double residual = 0.0;
};

/// Law of total covariance on the joint empirical measure of rows x uniform
/// group elements. All covariances use 1/N normalization.
VarianceDecomposition total_variance_decomposition(const OrbitAverager& avg, const VecFn& f,
                                                   const Mat& data);

struct JensenCheck {
  double lhs = 0.0;  // mean_i phi(f_bar(X_i))
  double rhs = 0.0;  // mean_{i,g} phi(f(g X_i))
};

JensenCheck jensen_contraction_check(const OrbitAverager& avg, const VecFn& f,
                                     const std::function<double(const Vec&)>& phi,
                                     const Mat& data);

/// Decomposition with k sampled elements per row. Without replacement the k
/// elements are distinct, so k = |G| reproduces the exact decomposition.
VarianceDecomposition finite_aug_decomposition(const VecFn& f, const FiniteGroup& group,
                                               std::size_t k, const Mat& data, Rng& rng,
                                               bool without_replacement = false);

}  // namespace auglab
