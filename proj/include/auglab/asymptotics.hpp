#pragma once

#include <functional>
#include <utility>

#include "auglab/core.hpp"
#include "auglab/estimators.hpp"
#include "auglab/group_actions.hpp"

namespace auglab {

using DataSampler = std::function<Vec(Rng&)>;

struct CovarianceReport {
  Mat V_hat;                  // mean Hessian over sampled X and the group
  Mat grad_cov;               // E grad L grad L' (joint over X and g)
  Mat within_orbit_grad_cov;  // E_X Cov_g grad L(theta, gX)
  Mat sigma0;
  Mat sigmaG;
  Mat sigmaG_alt;             // V^-1 E[grad Lbar grad Lbar'] V^-1, a second route to sigmaG
  Mat sigma0_se;              // entrywise MC standard errors with V held fixed
  Mat sigmaG_se;
  double relative_efficiency = 1.0;
  std::size_t n_mc = 0;
};

/// Central-difference Hessian of L(., x) with step 1e-5 (1 + |theta_j|).
Mat numerical_hessian(const LossModel& loss, const Vec& theta, const Vec& x);

/// MC sandwich covariances at theta0. The within-orbit covariance is exact
/// over the enumerated group for every sampled X.
CovarianceReport estimate_sandwich(const LossModel& loss, const FiniteGroup& group,
                                   const Vec& theta0, const DataSampler& sampler,
                                   std::size_t n_mc, Rng& rng);

struct PluginInference {
  Mat V_hat;
  Mat I_hat;
  Mat sigma_hat;
  Vec lower;
  Vec upper;
  double z = 0.0;
};

/// Plug-in covariance V^-1 I V^-1 and per-coordinate normal intervals at
/// theta_hat. I uses outer products of the orbit-averaged gradient; with
/// `plain_gradient` it uses the unaveraged gradients over the data instead.
PluginInference plugin_inference(const LossModel& loss, const FiniteGroup& group,
                                 const Mat& data, const Vec& theta_hat, double alpha,
                                 bool plain_gradient = false);

struct BoundCheck {
  MeanStderr plain_sq_error;  // MC E||theta_n - theta0||^2
  MeanStderr aug_sq_error;    // MC E||theta_{n,G} - theta0||^2
  double plain_bound = 0.0;   // 4 tr Cov grad L / (lambda^2 n)
  double aug_bound = 0.0;     // same with E_X tr Cov_g grad L(theta0, gX) subtracted
};

/// Strongly convex variance bound, MC over `reps` datasets of size n. The
/// population traces in the bounds use a separate MC pool of `n_pop` draws.
BoundCheck strong_convexity_bound_check(const LossModel& loss, const FiniteGroup& group,
                                        const Vec& theta0, const DataSampler& sampler,
                                        std::size_t n, std::size_t reps, Rng& rng,
                                        std::size_t n_pop = 20000);

struct TangentProjection {
  Mat P;
  Mat P_perp;
};

/// P = B (B'B)^-1 B' for a full-column-rank basis B.
TangentProjection tangent_projection(const Mat& invariant_basis);

struct TangentialCheck {
  double invariance_residual = 0.0;  // max ||P grad l(gx) - P grad l(x)||
  Mat within_full;                   // E Cov_g grad l(gX)
  Mat within_perp;                   // E Cov_g P_perp grad l(gX)
  double within_residual = 0.0;      // max-abs difference of the two
};

TangentialCheck tangential_decomposition_check(const LossModel& loss, const FiniteGroup& group,
                                               const Vec& theta0, const Mat& invariant_basis,
                                               const DataSampler& sampler, std::size_t n_mc,
                                               Rng& rng);

struct AmleCmleCriterion {
  Mat M;
  double min_eigenvalue = 0.0;
  bool is_psd = false;
};

/// Block matrix [[ (I_11)^-1, (I^-1)_{1.} ], [ (I^-1)_{.1}, Ibar^-1 ]] for the
/// first `q1` coordinates; PSD means the aMLE beats the cMLE on theta_1.
AmleCmleCriterion amle_cmle_criterion(const Mat& I_theta, const Mat& Ibar_theta,
                                      Eigen::Index q1);

/// Dense matrix representation of a fourth-order tensor in Kronecker order:
/// entry ((i, i'), (j, j')) sits at row i * b + i', column j * c + j'.
struct Tensor4 {
  Mat entries;
  Mat stderr_entries;  // MC standard errors, empty for closed forms
  Eigen::Index row_base = 0;
  Eigen::Index col_base = 0;
};

constexpr Eigen::Index kTensorCutoff = 16;

/// Circulant matrix with C(i, j) = v[(i - j) mod d]; columns are successive shifts.
Mat circulant(const Vec& v);

/// MC estimate of E (X X' kron X X').
Tensor4 fourth_moment_mc(Eigen::Index d, const DataSampler& sampler, std::size_t n_mc, Rng& rng);
/// MC estimate of d^-2 E (C_X C_X' kron C_X C_X').
Tensor4 circulant_fourth_moment_mc(Eigen::Index d, const DataSampler& sampler, std::size_t n_mc,
                                   Rng& rng);

/// I_W = (W kron W) E (XX' kron XX') for the quadratic-activation network.
Tensor4 fisher_tensor_2lnn(const Mat& W, const DataSampler& sampler, std::size_t n_mc, Rng& rng);
/// Ibar_W = (W kron W) d^-2 E (C_X C_X' kron C_X C_X').
Tensor4 augmented_fisher_tensor_2lnn(const Mat& W, const DataSampler& sampler, std::size_t n_mc,
                                     Rng& rng);

/// Trace of the Fisher information over W, read off the Kronecker layout as
/// sum_{i,j} K((i,i),(j,j)).
double fisher_trace(const Tensor4& t);
/// The pd x pd Fisher matrix F((i,j),(i',j')) = K((i,i'),(j,j')).
Mat as_fisher_matrix(const Tensor4& t);

/// d^-2 E (C_X C_X' kron C_X C_X') for X ~ N(0, I_d) via the DFT: the real
/// part of conj(F2) (F2^2 .* M) conj(F2), where M is the Gaussian fourth
/// moment of FX by Wick pairing. `imag_residue` receives the largest
/// imaginary magnitude discarded.
Tensor4 dft_fourth_moment_closed_form(Eigen::Index d, double* imag_residue = nullptr);
/// Unitary DFT matrix F(j, k) = d^-1/2 exp(-2 pi i j k / d), 0-based.
CMat dft_matrix(Eigen::Index d);

struct ClassificationGain {
  Tensor4 mean_U;   // E U_W
  Tensor4 mean_vU;  // E [v_W U_W]
  Tensor4 gain;     // (W kron W) E [v eta'^2 ((XX') kron (XX') - A kron A)]
  MeanStderr gain_trace;
};

/// Link eta with its derivative.
struct Link {
  std::function<double(double)> eta;
  std::function<double(double)> deriv;
};
Link sigmoid_link();

/// MC tensors for the least-squares classification network f = 1'sigma(Wx)
/// with sigma(t) = t^2/2. A = E_g (gX)(gX)', which equals d^-1 C_X C_X' for
/// the cyclic shift group and X X' for the trivial group.
ClassificationGain classification_gain(const Mat& W, const Link& link, const FiniteGroup& group,
                                       const DataSampler& sampler, std::size_t n_mc, Rng& rng);

}  // namespace auglab
