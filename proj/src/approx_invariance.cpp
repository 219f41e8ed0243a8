#include "auglab/approx_invariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace auglab {

namespace {

Mat stack_rows(const std::vector<Vec>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  return out;
}

Mat draw_points(const std::function<Vec(Rng&)>& sampler, std::size_t n, Rng& rng) {
  if (n == 0) throw ConfigError("need at least one sample");
  std::vector<Vec> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) rows.push_back(sampler(rng));
  return stack_rows(rows);
}

// f evaluated at every row of data, and at every g-transformed row.
struct PushForward {
  Mat base;                 // n x p: f(X_i)
  std::vector<Mat> by_g;    // |G| of n x p: f(g X_i)
  double max_norm = 0.0;
};

PushForward push_forward(const VecFn& f, const FiniteGroup& group, const Mat& data) {
  if (!group.enumerated()) throw CapabilityError("band checks need an enumerated group");
  PushForward pf;
  std::vector<Vec> base;
  for (Eigen::Index i = 0; i < data.rows(); ++i) base.push_back(f(data.row(i).transpose()));
  pf.base = stack_rows(base);
  for (const auto& g : group.elements()) {
    std::vector<Vec> vals;
    for (Eigen::Index i = 0; i < data.rows(); ++i) vals.push_back(f(g.apply(data.row(i).transpose())));
    pf.by_g.push_back(stack_rows(vals));
  }
  pf.max_norm = pf.base.rowwise().norm().maxCoeff();
  for (const auto& m : pf.by_g) pf.max_norm = std::max(pf.max_norm, m.rowwise().norm().maxCoeff());
  return pf;
}

double mean_w1(const PushForward& pf) {
  double w = 0.0;
  for (const auto& m : pf.by_g) w += empirical_w1(m, pf.base);
  return w / static_cast<double>(pf.by_g.size());
}

double clip01(double v, bool& clipped) {
  if (v < 0.0 || v > 1.0) {
    clipped = true;
    return std::clamp(v, 0.0, 1.0);
  }
  return v;
}

// rows: grid index, cols: data index
Mat loss_table(const LossModel& loss, const std::vector<Vec>& grid, const Mat& data,
               const GroupElement* g, bool& clipped) {
  Mat t(static_cast<Eigen::Index>(grid.size()), data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Vec x = g == nullptr ? Vec(data.row(i).transpose()) : g->apply(data.row(i).transpose());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      t(static_cast<Eigen::Index>(k), i) = clip01(loss.value(grid[k], x), clipped);
    }
  }
  return t;
}

Vec rademacher_signs(Eigen::Index n, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  Vec eps(n);
  for (Eigen::Index i = 0; i < n; ++i) eps(i) = coin(rng) ? 1.0 : -1.0;
  return eps;
}

double sup_abs_mean(const Mat& table, const Vec& eps) {
  return (table * eps).cwiseAbs().maxCoeff() / static_cast<double>(eps.size());
}

RademacherEstimate summarize(const std::vector<double>& draws, std::size_t grid, bool clipped) {
  const MeanStderr ms = mean_stderr(draws);
  RademacherEstimate r;
  r.value = ms.mean;
  r.se = ms.se;
  r.n_rademacher_draws = draws.size();
  r.theta_grid_size = grid;
  r.clipped = clipped;
  return r;
}

void require_grid(const std::vector<Vec>& grid, const Mat& data, std::size_t n_rad) {
  if (grid.empty()) throw ConfigError("theta grid is empty");
  if (data.rows() == 0) throw ConfigError("Rademacher estimate needs data");
  if (n_rad == 0) throw ConfigError("need at least one Rademacher draw");
}

}  // namespace

W1Result wasserstein1_1d(const Vec& a, const Vec& b) {
  if (a.size() == 0 || b.size() == 0) throw ConfigError("W1 needs nonempty samples");
  std::vector<double> x(a.data(), a.data() + a.size());
  std::vector<double> y(b.data(), b.data() + b.size());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto n = static_cast<long long>(x.size());
  const auto m = static_cast<long long>(y.size());
  // Quantile breakpoints i/n and j/m, in units of 1/(n m).
  long long i = 0;
  long long j = 0;
  long long prev = 0;
  double total = 0.0;
  while (i < n && j < m) {
    const long long next_a = (i + 1) * m;
    const long long next_b = (j + 1) * n;
    const long long next = std::min(next_a, next_b);
    total += static_cast<double>(next - prev) *
             std::abs(x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)]);
    prev = next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  W1Result r;
  r.distance = total / (static_cast<double>(n) * static_cast<double>(m));
  r.method = W1Method::sorted_1d;
  return r;
}

std::vector<std::size_t> solve_assignment(const Mat& cost) {
  const Eigen::Index n = cost.rows();
  if (cost.cols() != n) throw ConfigError("assignment needs a square cost matrix");
  if (n == 0) return {};
  // Shortest augmenting paths with row/column potentials (1-based internally).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Eigen::Index> match(static_cast<std::size_t>(n + 1), 0);  // column -> row
  std::vector<Eigen::Index> way(static_cast<std::size_t>(n + 1), 0);
  for (Eigen::Index row = 1; row <= n; ++row) {
    match[0] = row;
    Eigen::Index col0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(col0)] = 1;
      const Eigen::Index row0 = match[static_cast<std::size_t>(col0)];
      double delta = inf;
      Eigen::Index col1 = 0;
      for (Eigen::Index col = 1; col <= n; ++col) {
        const auto c = static_cast<std::size_t>(col);
        if (used[c]) continue;
        const double cur = cost(row0 - 1, col - 1) - u[static_cast<std::size_t>(row0)] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = col;
        }
      }
      for (Eigen::Index col = 0; col <= n; ++col) {
        const auto c = static_cast<std::size_t>(col);
        if (used[c]) {
          u[static_cast<std::size_t>(match[c])] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[static_cast<std::size_t>(col0)] != 0);
    do {
      const Eigen::Index col1 = way[static_cast<std::size_t>(col0)];
      match[static_cast<std::size_t>(col0)] = match[static_cast<std::size_t>(col1)];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> assignment(static_cast<std::size_t>(n));
  for (Eigen::Index col = 1; col <= n; ++col) {
    assignment[static_cast<std::size_t>(match[static_cast<std::size_t>(col)] - 1)] =
        static_cast<std::size_t>(col - 1);
  }
  return assignment;
}

W1Result wasserstein1_assignment(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError("assignment W1 needs equal sample counts and dimensions");
  }
  if (a.rows() == 0) throw ConfigError("W1 needs nonempty samples");
  if (static_cast<std::size_t>(a.rows()) > kAssignmentCutoff) {
    throw CapabilityError("assignment W1 supports at most " + std::to_string(kAssignmentCutoff) +
                          " points");
  }
  const Eigen::Index n = a.rows();
  Mat cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (a.row(i) - b.row(j)).norm();
  }
  W1Result r;
  r.method = W1Method::exact_assignment;
  r.coupling = solve_assignment(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, static_cast<Eigen::Index>(r.coupling[static_cast<std::size_t>(i)]));
  r.distance = total / static_cast<double>(n);
  return r;
}

double empirical_w1(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) throw ConfigError("W1 inputs must have the same dimension");
  if (a.cols() == 1) return wasserstein1_1d(a.col(0), b.col(0)).distance;
  return wasserstein1_assignment(a, b).distance;
}

MeanShiftBand mean_shift_band(const VecFn& f, const FiniteGroup& group,
                              const std::function<Vec(Rng&)>& sampler, std::size_t n_mc, Rng& rng) {
  return mean_shift_band(f, group, draw_points(sampler, n_mc, rng));
}

MeanShiftBand mean_shift_band(const VecFn& f, const FiniteGroup& group, const Mat& data) {
  const PushForward pf = push_forward(f, group, data);
  Vec mean_aug = Vec::Zero(pf.base.cols());
  for (const auto& m : pf.by_g) mean_aug += m.colwise().mean().transpose();
  mean_aug /= static_cast<double>(pf.by_g.size());
  MeanShiftBand out;
  out.lhs = (mean_aug - pf.base.colwise().mean().transpose()).norm();
  out.rhs = mean_w1(pf);
  return out;
}

CovarianceBand covariance_band_check(const VecFn& f, const FiniteGroup& group,
                                     const std::function<Vec(Rng&)>& sampler, std::size_t n_mc,
                                     Rng& rng, std::optional<double> sup_norm) {
  return covariance_band_check(f, group, draw_points(sampler, n_mc, rng), sup_norm);
}

CovarianceBand covariance_band_check(const VecFn& f, const FiniteGroup& group, const Mat& data,
                                     std::optional<double> sup_norm) {
  const PushForward pf = push_forward(f, group, data);
  const Eigen::Index n = pf.base.rows();
  const Eigen::Index p = pf.base.cols();
  const auto k = static_cast<Eigen::Index>(pf.by_g.size());
  Mat means = Mat::Zero(n, p);
  Mat within = Mat::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    Mat orbit(k, p);
    for (Eigen::Index g = 0; g < k; ++g) orbit.row(g) = pf.by_g[static_cast<std::size_t>(g)].row(i);
    means.row(i) = orbit.colwise().mean();
    within += population_covariance(orbit);
  }
  CovarianceBand out;
  out.sup_norm_estimated = !sup_norm.has_value();
  out.sup_norm = sup_norm ? *sup_norm : 2.0 * pf.max_norm;
  if (sup_norm && pf.max_norm > *sup_norm * (1.0 + 1e-12)) {
    throw ConfigError("f exceeds the supplied sup norm");
  }
  out.deviation = population_covariance(means) - population_covariance(pf.base);
  out.center = -within / static_cast<double>(n);
  out.radius = 4.0 * out.sup_norm * mean_w1(pf);
  const Mat I = Mat::Identity(p, p);
  out.lower_margin = min_eigenvalue(out.deviation - out.center + out.radius * I);
  out.upper_margin = min_eigenvalue(out.center + out.radius * I - out.deviation);
  return out;
}

MseTradeoff mse_tradeoff(const DatasetEstimator& estimator, const FiniteGroup& group,
                         const MatSampler& sampler, const Vec& theta0, std::size_t n_mc, Rng& rng,
                         std::optional<double> sup_norm) {
  if (!group.enumerated()) throw CapabilityError("mse_tradeoff needs an enumerated group");
  if (n_mc < 2) throw ConfigError("mse_tradeoff needs n_mc >= 2");
  const auto k = static_cast<std::size_t>(group.order());
  std::vector<Vec> base;
  std::vector<std::vector<Vec>> by_g(k);
  std::vector<double> diffs;
  double variance_term = 0.0;
  double max_norm = 0.0;
  for (std::size_t r = 0; r < n_mc; ++r) {
    const Mat data = sampler(rng);
    const Vec t = estimator(data);
    max_norm = std::max(max_norm, t.norm());
    std::vector<Vec> orbit;
    for (const auto& g : group.elements()) {
      orbit.push_back(estimator(g.apply_rows(data)));
      max_norm = std::max(max_norm, orbit.back().norm());
      by_g[g.index].push_back(orbit.back());
    }
    const Mat orbit_m = stack_rows(orbit);
    const Vec t_aug = orbit_m.colwise().mean().transpose();
    variance_term += population_covariance(orbit_m).trace();
    diffs.push_back((t_aug - theta0).squaredNorm() - (t - theta0).squaredNorm());
    base.push_back(t);
  }
  MseTradeoff out;
  const Mat base_m = stack_rows(base);
  for (const auto& t : base) out.mse_plain += (t - theta0).squaredNorm();
  out.mse_plain /= static_cast<double>(n_mc);
  const MeanStderr d = mean_stderr(diffs);
  out.mse_diff = d.mean;
  out.mse_diff_se = d.se;
  out.mse_aug = out.mse_plain + out.mse_diff;
  out.variance_term = variance_term / static_cast<double>(n_mc);
  for (const auto& vals : by_g) out.w1 += empirical_w1(stack_rows(vals), base_m);
  out.w1 /= static_cast<double>(k);
  out.bias_norm = (base_m.colwise().mean().transpose() - theta0).norm();
  if (sup_norm && max_norm > *sup_norm * (1.0 + 1e-12)) {
    throw ConfigError("estimator exceeds the supplied sup norm");
  }
  out.sup_norm = sup_norm ? *sup_norm : 2.0 * max_norm;
  out.delta = out.w1 * (out.w1 + 2.0 * out.bias_norm + 4.0 * out.sup_norm);
  out.in_band = std::abs(out.mse_diff + out.variance_term) <= out.delta + 3.0 * out.mse_diff_se;
  return out;
}

RademacherEstimate rademacher_estimate(const LossModel& loss, const std::vector<Vec>& theta_grid,
                                       const Mat& data, std::size_t n_rad, Rng& rng) {
  require_grid(theta_grid, data, n_rad);
  bool clipped = false;
  const Mat table = loss_table(loss, theta_grid, data, nullptr, clipped);
  std::vector<double> draws;
  draws.reserve(n_rad);
  for (std::size_t s = 0; s < n_rad; ++s) {
    draws.push_back(sup_abs_mean(table, rademacher_signs(data.rows(), rng)));
  }
  return summarize(draws, theta_grid.size(), clipped);
}

RademacherComparison rademacher_compare(const LossModel& loss, const std::vector<Vec>& theta_grid,
                                        const Mat& data, const FiniteGroup& group,
                                        std::size_t n_rad, Rng& rng) {
  require_grid(theta_grid, data, n_rad);
  if (!group.enumerated()) throw CapabilityError("rademacher_compare needs an enumerated group");
  bool clipped = false;
  const Mat raw = loss_table(loss, theta_grid, data, nullptr, clipped);
  std::vector<Mat> tables;
  Mat avg = Mat::Zero(raw.rows(), raw.cols());
  for (const auto& g : group.elements()) {
    tables.push_back(loss_table(loss, theta_grid, data, &g, clipped));
    avg += tables.back();
  }
  avg /= static_cast<double>(tables.size());
  std::vector<double> plain;
  std::vector<double> plain_raw;
  std::vector<double> augmented;
  RademacherComparison out;
  out.max_draw_delta = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < n_rad; ++s) {
    const Vec eps = rademacher_signs(data.rows(), rng);
    double sym = 0.0;
    for (const auto& t : tables) sym += sup_abs_mean(t, eps);
    sym /= static_cast<double>(tables.size());
    const double a = sup_abs_mean(avg, eps);
    plain.push_back(sym);
    plain_raw.push_back(sup_abs_mean(raw, eps));
    augmented.push_back(a);
    out.max_draw_delta = std::max(out.max_draw_delta, a - sym);
  }
  out.plain = summarize(plain, theta_grid.size(), clipped);
  out.plain_raw = summarize(plain_raw, theta_grid.size(), clipped);
  out.augmented = summarize(augmented, theta_grid.size(), clipped);
  out.delta = out.augmented.value - out.plain.value;
  return out;
}

}  // namespace auglab
