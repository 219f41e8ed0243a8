#include "auglab/asymptotics.hpp"

#include <cmath>
#include <complex>

#include <boost/math/distributions/normal.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include "auglab/orbit_average.hpp"

namespace auglab {

namespace {

constexpr double kMaxCondition = 1e12;

Mat checked_inverse(const Mat& V, const char* what) {
  const Mat sym = 0.5 * (V + V.transpose());
  Eigen::JacobiSVD<Mat> svd(sym);
  const Vec& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || smax / smin > kMaxCondition) {
    throw NumericalError(std::string(what) + " is singular (condition number above 1e12)");
  }
  return sym.inverse();
}

Mat hessian_at(const LossModel& loss, const Vec& theta, const Vec& x) {
  return loss.hessian ? loss.hessian(theta, x) : numerical_hessian(loss, theta, x);
}

// Running entrywise mean and standard error of matrix-valued samples.
class MatMoments {
 public:
  void add(const Mat& m) {
    if (n_ == 0) {
      sum_ = m;
      sumsq_ = m.cwiseProduct(m);
    } else {
      sum_ += m;
      sumsq_ += m.cwiseProduct(m);
    }
    ++n_;
  }
  Mat mean() const { return sum_ / static_cast<double>(n_); }
  Mat stderr_entries() const {
    const double n = static_cast<double>(n_);
    if (n_ < 2) return Mat::Zero(sum_.rows(), sum_.cols());
    const Mat mu = mean();
    Mat var = (sumsq_ / n - mu.cwiseProduct(mu)) * (n / (n - 1.0));
    var = var.cwiseMax(0.0);
    return (var / n).cwiseSqrt();
  }

 private:
  Mat sum_;
  Mat sumsq_;
  std::size_t n_ = 0;
};

Mat kron_square(const Mat& B) { return Eigen::kroneckerProduct(B, B).eval(); }

void require_tensor_dims(Eigen::Index p, Eigen::Index d) {
  if (d < 1 || d > kTensorCutoff || p < 1 || p > kTensorCutoff) {
    throw ConfigError("tensor dimensions must satisfy 1 <= p, d <= " + std::to_string(kTensorCutoff));
  }
}

Vec draw(const DataSampler& sampler, Rng& rng, Eigen::Index d) {
  Vec x = sampler(rng);
  if (x.size() != d) throw ConfigError("sampler returned a vector of the wrong length");
  return x;
}

Tensor4 make_tensor(const MatMoments& acc, Eigen::Index row_base, Eigen::Index col_base) {
  Tensor4 t;
  t.entries = acc.mean();
  t.stderr_entries = acc.stderr_entries();
  t.row_base = row_base;
  t.col_base = col_base;
  return t;
}

}  // namespace

Mat numerical_hessian(const LossModel& loss, const Vec& theta, const Vec& x) {
  const Eigen::Index p = theta.size();
  Mat H(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double h = 1e-5 * (1.0 + std::abs(theta(j)));
    Vec up = theta;
    Vec down = theta;
    up(j) += h;
    down(j) -= h;
    H.col(j) = (loss.grad(up, x) - loss.grad(down, x)) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

CovarianceReport estimate_sandwich(const LossModel& loss, const FiniteGroup& group,
                                   const Vec& theta0, const DataSampler& sampler,
                                   std::size_t n_mc, Rng& rng) {
  if (!group.enumerated()) throw CapabilityError("estimate_sandwich needs an enumerated group");
  if (n_mc < 2) throw ConfigError("estimate_sandwich needs n_mc >= 2");
  const Eigen::Index p = theta0.size();
  const auto k = static_cast<double>(group.order());
  Mat H = Mat::Zero(p, p);
  Mat within = Mat::Zero(p, p);
  std::vector<Mat> joint_outer;
  std::vector<Vec> averaged;
  joint_outer.reserve(n_mc);
  averaged.reserve(n_mc);
  for (std::size_t s = 0; s < n_mc; ++s) {
    const Vec x = sampler(rng);
    Mat grads(static_cast<Eigen::Index>(group.order()), p);
    Mat hsum = Mat::Zero(p, p);
    for (const auto& g : group.elements()) {
      const Vec gx = g.apply(x);
      grads.row(static_cast<Eigen::Index>(g.index)) = loss.grad(theta0, gx).transpose();
      hsum += hessian_at(loss, theta0, gx);
    }
    H += hsum / k;
    joint_outer.push_back(grads.transpose() * grads / k);
    averaged.push_back(grads.colwise().mean().transpose());
    within += population_covariance(grads);
  }
  const double n = static_cast<double>(n_mc);
  CovarianceReport r;
  r.n_mc = n_mc;
  r.V_hat = H / n;
  const Mat Vinv = checked_inverse(r.V_hat, "V_hat");
  r.grad_cov = Mat::Zero(p, p);
  Mat avg_outer = Mat::Zero(p, p);
  MatMoments m0;
  MatMoments mG;
  for (std::size_t s = 0; s < n_mc; ++s) {
    r.grad_cov += joint_outer[s];
    const Mat a = averaged[s] * averaged[s].transpose();
    avg_outer += a;
    m0.add(Vinv * joint_outer[s] * Vinv);
    mG.add(Vinv * a * Vinv);
  }
  r.grad_cov /= n;
  avg_outer /= n;
  r.within_orbit_grad_cov = within / n;
  r.sigma0 = Vinv * r.grad_cov * Vinv;
  r.sigmaG = r.sigma0 - Vinv * r.within_orbit_grad_cov * Vinv;
  r.sigmaG_alt = Vinv * avg_outer * Vinv;
  r.sigma0_se = m0.stderr_entries();
  r.sigmaG_se = mG.stderr_entries();
  const double trG = r.sigmaG.trace();
  if (!(trG > 0.0)) throw NumericalError("augmented covariance has nonpositive trace");
  r.relative_efficiency = r.sigma0.trace() / trG;
  return r;
}

PluginInference plugin_inference(const LossModel& loss, const FiniteGroup& group, const Mat& data,
                                 const Vec& theta_hat, double alpha, bool plain_gradient) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
  if (!group.enumerated()) throw CapabilityError("plugin_inference needs an enumerated group");
  if (data.rows() < 2) throw ConfigError("plugin_inference needs n >= 2");
  const Eigen::Index p = theta_hat.size();
  const auto k = static_cast<double>(group.order());
  PluginInference out;
  out.V_hat = Mat::Zero(p, p);
  out.I_hat = Mat::Zero(p, p);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Vec x = data.row(i).transpose();
    Vec gbar = Vec::Zero(p);
    for (const auto& g : group.elements()) {
      const Vec gx = g.apply(x);
      out.V_hat += hessian_at(loss, theta_hat, gx) / k;
      gbar += loss.grad(theta_hat, gx) / k;
    }
    const Vec v = plain_gradient ? loss.grad(theta_hat, x) : gbar;
    out.I_hat += v * v.transpose();
  }
  const double n = static_cast<double>(data.rows());
  out.V_hat /= n;
  out.I_hat /= n;
  const Mat Vinv = checked_inverse(out.V_hat, "V_hat");
  out.sigma_hat = Vinv * out.I_hat * Vinv;
  out.sigma_hat = 0.5 * (out.sigma_hat + out.sigma_hat.transpose());
  const boost::math::normal standard;
  out.z = boost::math::quantile(standard, 1.0 - alpha / 2.0);
  const Vec half = (out.sigma_hat.diagonal().cwiseMax(0.0) / n).cwiseSqrt() * out.z;
  out.lower = theta_hat - half;
  out.upper = theta_hat + half;
  return out;
}

BoundCheck strong_convexity_bound_check(const LossModel& loss, const FiniteGroup& group,
                                        const Vec& theta0, const DataSampler& sampler,
                                        std::size_t n, std::size_t reps, Rng& rng,
                                        std::size_t n_pop) {
  if (!(loss.strong_convexity > 0.0)) throw ConfigError("bound check needs lambda > 0");
  if (n == 0 || reps < 2 || n_pop < 2) throw ConfigError("bound check needs n >= 1, reps >= 2");
  if (!group.enumerated()) throw CapabilityError("bound check needs an enumerated group");
  const Eigen::Index p = theta0.size();
  const OrbitAverager avg = OrbitAverager::exact(group);
  std::vector<double> plain;
  std::vector<double> aug;
  for (std::size_t r = 0; r < reps; ++r) {
    Vec first = sampler(rng);
    Mat data(static_cast<Eigen::Index>(n), first.size());
    data.row(0) = first.transpose();
    for (Eigen::Index i = 1; i < data.rows(); ++i) data.row(i) = sampler(rng).transpose();
    plain.push_back((erm_fit(loss, data, theta0).theta_hat - theta0).squaredNorm());
    aug.push_back((augmented_erm_fit(loss, avg, data, theta0).theta_hat - theta0).squaredNorm());
  }
  Mat grads(static_cast<Eigen::Index>(n_pop), p);
  double within_trace = 0.0;
  for (Eigen::Index s = 0; s < grads.rows(); ++s) {
    const Vec x = sampler(rng);
    grads.row(s) = loss.grad(theta0, x).transpose();
    Mat orbit(static_cast<Eigen::Index>(group.order()), p);
    for (const auto& g : group.elements()) {
      orbit.row(static_cast<Eigen::Index>(g.index)) = loss.grad(theta0, g.apply(x)).transpose();
    }
    within_trace += population_covariance(orbit).trace();
  }
  within_trace /= static_cast<double>(n_pop);
  const double lambda = loss.strong_convexity;
  const double scale = 4.0 / (lambda * lambda * static_cast<double>(n));
  BoundCheck out;
  out.plain_sq_error = mean_stderr(plain);
  out.aug_sq_error = mean_stderr(aug);
  const double total_trace = population_covariance(grads).trace();
  out.plain_bound = scale * total_trace;
  out.aug_bound = scale * (total_trace - within_trace);
  return out;
}

TangentProjection tangent_projection(const Mat& B) {
  const Eigen::Index p = B.rows();
  TangentProjection out;
  if (B.cols() == 0) {
    out.P = Mat::Zero(p, p);
    out.P_perp = Mat::Identity(p, p);
    return out;
  }
  Eigen::JacobiSVD<Mat> svd(B);
  const Vec& sv = svd.singularValues();
  if (B.cols() > p || sv(sv.size() - 1) <= 1e-10 * std::max(1.0, sv(0))) {
    throw ConfigError("tangent basis is rank deficient");
  }
  out.P = B * (B.transpose() * B).inverse() * B.transpose();
  out.P_perp = Mat::Identity(p, p) - out.P;
  return out;
}

TangentialCheck tangential_decomposition_check(const LossModel& loss, const FiniteGroup& group,
                                               const Vec& theta0, const Mat& invariant_basis,
                                               const DataSampler& sampler, std::size_t n_mc,
                                               Rng& rng) {
  if (!group.enumerated()) throw CapabilityError("tangential check needs an enumerated group");
  if (n_mc == 0) throw ConfigError("tangential check needs n_mc >= 1");
  const TangentProjection proj = tangent_projection(invariant_basis);
  const Eigen::Index p = theta0.size();
  TangentialCheck out;
  out.within_full = Mat::Zero(p, p);
  out.within_perp = Mat::Zero(p, p);
  for (std::size_t s = 0; s < n_mc; ++s) {
    const Vec x = sampler(rng);
    Mat grads(static_cast<Eigen::Index>(group.order()), p);
    for (const auto& g : group.elements()) {
      grads.row(static_cast<Eigen::Index>(g.index)) = loss.grad(theta0, g.apply(x)).transpose();
    }
    const Vec base = proj.P * loss.grad(theta0, x);
    for (Eigen::Index j = 0; j < grads.rows(); ++j) {
      out.invariance_residual =
          std::max(out.invariance_residual, (proj.P * grads.row(j).transpose() - base).norm());
    }
    out.within_full += population_covariance(grads);
    out.within_perp += population_covariance(grads * proj.P_perp.transpose());
  }
  out.within_full /= static_cast<double>(n_mc);
  out.within_perp /= static_cast<double>(n_mc);
  out.within_residual = (out.within_full - out.within_perp).cwiseAbs().maxCoeff();
  return out;
}

AmleCmleCriterion amle_cmle_criterion(const Mat& I_theta, const Mat& Ibar_theta, Eigen::Index q1) {
  const Eigen::Index p = I_theta.rows();
  if (I_theta.cols() != p || Ibar_theta.rows() != p || Ibar_theta.cols() != p) {
    throw ConfigError("information matrices must be square and of equal size");
  }
  if (q1 < 1 || q1 > p) throw ConfigError("block split must satisfy 1 <= q1 <= p");
  const Mat Iinv = checked_inverse(I_theta, "information matrix");
  const Mat I11inv = checked_inverse(I_theta.topLeftCorner(q1, q1), "I_11");
  const Mat Ibarinv = checked_inverse(Ibar_theta, "averaged information");
  AmleCmleCriterion out;
  out.M = Mat::Zero(q1 + p, q1 + p);
  out.M.topLeftCorner(q1, q1) = I11inv;
  out.M.topRightCorner(q1, p) = Iinv.topRows(q1);
  out.M.bottomLeftCorner(p, q1) = Iinv.leftCols(q1);
  out.M.bottomRightCorner(p, p) = Ibarinv;
  out.min_eigenvalue = min_eigenvalue(out.M);
  out.is_psd = out.min_eigenvalue >= -1e-10;
  return out;
}

Mat circulant(const Vec& v) {
  const Eigen::Index d = v.size();
  Mat C(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) C(i, j) = v(((i - j) % d + d) % d);
  }
  return C;
}

Tensor4 fourth_moment_mc(Eigen::Index d, const DataSampler& sampler, std::size_t n_mc, Rng& rng) {
  require_tensor_dims(1, d);
  MatMoments acc;
  for (std::size_t s = 0; s < n_mc; ++s) {
    const Vec x = draw(sampler, rng, d);
    acc.add(kron_square(x * x.transpose()));
  }
  return make_tensor(acc, d, d);
}

Tensor4 circulant_fourth_moment_mc(Eigen::Index d, const DataSampler& sampler, std::size_t n_mc,
                                   Rng& rng) {
  require_tensor_dims(1, d);
  MatMoments acc;
  for (std::size_t s = 0; s < n_mc; ++s) {
    const Mat C = circulant(draw(sampler, rng, d));
    acc.add(kron_square(C * C.transpose() / static_cast<double>(d)));
  }
  return make_tensor(acc, d, d);
}

Tensor4 fisher_tensor_2lnn(const Mat& W, const DataSampler& sampler, std::size_t n_mc, Rng& rng) {
  const Eigen::Index d = W.cols();
  require_tensor_dims(W.rows(), d);
  MatMoments acc;
  for (std::size_t s = 0; s < n_mc; ++s) {
    const Vec x = draw(sampler, rng, d);
    acc.add(kron_square(W * x * x.transpose()));
  }
  return make_tensor(acc, W.rows(), d);
}

Tensor4 augmented_fisher_tensor_2lnn(const Mat& W, const DataSampler& sampler, std::size_t n_mc,
                                     Rng& rng) {
  const Eigen::Index d = W.cols();
  require_tensor_dims(W.rows(), d);
  MatMoments acc;
  for (std::size_t s = 0; s < n_mc; ++s) {
    const Mat C = circulant(draw(sampler, rng, d));
    acc.add(kron_square(W * C * C.transpose() / static_cast<double>(d)));
  }
  return make_tensor(acc, W.rows(), d);
}

double fisher_trace(const Tensor4& t) {
  double tr = 0.0;
  for (Eigen::Index i = 0; i < t.row_base; ++i) {
    for (Eigen::Index j = 0; j < t.col_base; ++j) tr += t.entries(i * t.row_base + i, j * t.col_base + j);
  }
  return tr;
}

Mat as_fisher_matrix(const Tensor4& t) {
  const Eigen::Index p = t.row_base;
  const Eigen::Index d = t.col_base;
  Mat F(p * d, p * d);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index ip = 0; ip < p; ++ip) {
      for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index jp = 0; jp < d; ++jp) {
          F(i * d + j, ip * d + jp) = t.entries(i * p + ip, j * d + jp);
        }
      }
    }
  }
  return F;
}

CMat dft_matrix(Eigen::Index d) {
  if (d < 1) throw ConfigError("DFT size must be positive");
  CMat F(d, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) {
      // reduce jk mod d first so the angle stays small
      const double angle = -2.0 * M_PI * static_cast<double>((j * k) % d) / static_cast<double>(d);
      F(j, k) = std::polar(scale, angle);
    }
  }
  return F;
}

Tensor4 dft_fourth_moment_closed_form(Eigen::Index d, double* imag_residue) {
  require_tensor_dims(1, d);
  const CMat F = dft_matrix(d);
  const CMat Q = F * F;  // E[(FX)_i (FX)_j] for X ~ N(0, I)
  const CMat F2 = Eigen::kroneckerProduct(F, F).eval();
  const CMat F2sq = F2 * F2;
  const Eigen::Index D = d * d;
  CMat M(D, D);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index ip = 0; ip < d; ++ip) {
        for (Eigen::Index jp = 0; jp < d; ++jp) {
          M(i * d + j, ip * d + jp) =
              Q(i, j) * Q(ip, jp) + Q(i, jp) * Q(ip, j) + Q(i, ip) * Q(j, jp);
        }
      }
    }
  }
  const CMat conjF2 = F2.conjugate();
  const CMat K = conjF2 * F2sq.cwiseProduct(M) * conjF2;
  if (imag_residue != nullptr) *imag_residue = K.imag().cwiseAbs().maxCoeff();
  Tensor4 t;
  t.entries = K.real();
  t.row_base = d;
  t.col_base = d;
  return t;
}

Link sigmoid_link() {
  Link l;
  l.eta = [](double t) { return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); };
  l.deriv = [eta = l.eta](double t) {
    const double s = eta(t);
    return s * (1.0 - s);
  };
  return l;
}

ClassificationGain classification_gain(const Mat& W, const Link& link, const FiniteGroup& group,
                                       const DataSampler& sampler, std::size_t n_mc, Rng& rng) {
  const Eigen::Index p = W.rows();
  const Eigen::Index d = W.cols();
  require_tensor_dims(p, d);
  if (!group.enumerated() || !group.is_linear() || group.dim() != static_cast<std::size_t>(d)) {
    throw ConfigError("classification_gain needs an enumerated linear group on R^d");
  }
  const auto k = static_cast<double>(group.order());
  MatMoments u_acc;
  MatMoments vu_acc;
  MatMoments gain_acc;
  std::vector<double> traces;
  traces.reserve(n_mc);
  for (std::size_t s = 0; s < n_mc; ++s) {
    const Vec x = draw(sampler, rng, d);
    const Vec wx = W * x;
    const double f = 0.5 * wx.squaredNorm();
    const double eta = link.eta(f);
    const double v = eta * (1.0 - eta);
    const double d1 = link.deriv(f);
    Mat A = Mat::Zero(d, d);
    for (const auto& g : group.elements()) {
      const Vec gx = g.apply(x);
      A += gx * gx.transpose() / k;
    }
    const Mat U = d1 * d1 * kron_square(W * x * x.transpose());
    const Mat gain = v * (U - d1 * d1 * kron_square(W * A));
    u_acc.add(U);
    vu_acc.add(v * U);
    gain_acc.add(gain);
    Tensor4 tmp;
    tmp.entries = gain;
    tmp.row_base = p;
    tmp.col_base = d;
    traces.push_back(fisher_trace(tmp));
  }
  ClassificationGain out;
  out.mean_U = make_tensor(u_acc, p, d);
  out.mean_vU = make_tensor(vu_acc, p, d);
  out.gain = make_tensor(gain_acc, p, d);
  out.gain_trace = mean_stderr(traces);
  return out;
}

}  // namespace auglab
