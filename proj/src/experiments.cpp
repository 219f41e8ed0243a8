#include "auglab/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "auglab/asymptotics.hpp"
#include "auglab/estimators.hpp"

namespace auglab {

namespace {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Mat exchange_matrix(Eigen::Index d) { return Mat::Identity(d, d).rowwise().reverse(); }

double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

ExperimentReport run_flip_experiment(std::size_t d, std::size_t reps, std::uint64_t seed) {
  if (d < 2 || d % 2 != 0) throw ConfigError("flip experiment needs an even dimension d >= 2");
  if (reps == 0) throw ConfigError("reps must be positive");
  const auto D = static_cast<Eigen::Index>(d);
  const Mat J = exchange_matrix(D);
  Rng mu_rng = make_rng(seed, 0);
  const Vec z = standard_normal(D, mu_rng);
  const Vec mu = 0.5 * (z + J * z);

  ExperimentReport report("flip");
  report.config() = {{"dim", d}, {"reps", reps}, {"seed", seed}, {"n_per_rep", 1}, {"mu", to_std(mu)}};
  std::vector<double> mse_mle;
  std::vector<double> mse_amle;
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng = make_rng(seed, r + 1);
    const Vec x = mu + standard_normal(D, rng);
    const Vec amle = 0.5 * (x + J * x);
    mse_mle.push_back((x - mu).squaredNorm() / static_cast<double>(d));
    mse_amle.push_back((amle - mu).squaredNorm() / static_cast<double>(d));
    report.add(r, "d=" + std::to_string(d), "mse_mle", mse_mle.back());
    report.add(r, "d=" + std::to_string(d), "mse_amle", mse_amle.back());
  }
  const MeanStderr re = ratio_of_means(mse_mle, mse_amle);
  report.add_derived("d=" + std::to_string(d), "relative_efficiency", re.mean, re.se);
  return report;
}

ExperimentReport run_poisson_experiment(const std::vector<double>& lambdas, std::size_t d,
                                        std::size_t reps, std::uint64_t seed,
                                        std::optional<FiniteGroup> group) {
  if (lambdas.empty()) throw ConfigError("lambda grid is empty");
  if (d == 0 || reps == 0) throw ConfigError("dimension and reps must be positive");
  const FiniteGroup G = group ? *group : make_flip_group(d);
  if (G.dim() != d) throw ConfigError("group dimension does not match d");
  const Mat mean = G.mean_matrix();
  const auto D = static_cast<Eigen::Index>(d);

  ExperimentReport report("poisson");
  report.config() = {{"dim", d}, {"reps", reps}, {"seed", seed}, {"group", G.name()},
                     {"lambdas", lambdas}};
  for (std::size_t gi = 0; gi < lambdas.size(); ++gi) {
    const double lambda = lambdas[gi];
    if (!(lambda > 0.0)) throw ConfigError("Poisson rates must be positive");
    const std::string key = "lambda=" + format_double(lambda);
    std::vector<double> mse_mle;
    std::vector<double> mse_amle;
    for (std::size_t r = 0; r < reps; ++r) {
      Rng rng = make_rng(derive_seed(seed, gi), r);
      std::poisson_distribution<int> pois(lambda);
      Mat counts(1, D);
      for (Eigen::Index j = 0; j < D; ++j) counts(0, j) = pois(rng);
      const Vec mle = counts.row(0).transpose();
      const Vec amle = mean * mle;
      mse_mle.push_back((mle.array() - lambda).square().mean());
      mse_amle.push_back((amle.array() - lambda).square().mean());
      report.add(r, key, "mse_mle", mse_mle.back());
      report.add(r, key, "mse_amle", mse_amle.back());
    }
    const MeanStderr re = ratio_of_means(mse_mle, mse_amle);
    report.add_derived(key, "relative_efficiency", re.mean, re.se);
  }
  return report;
}

ExperimentReport run_circular_experiment(const std::vector<std::size_t>& d_grid, std::size_t p,
                                         std::size_t reps, std::uint64_t seed) {
  if (d_grid.empty()) throw ConfigError("dimension grid is empty");
  if (p == 0 || reps == 0) throw ConfigError("p and reps must be positive");
  ExperimentReport report("circ");
  report.config() = {{"dims", d_grid}, {"p", p}, {"reps", reps}, {"seed", seed}};
  const double pd = static_cast<double>(p);
  for (std::size_t gi = 0; gi < d_grid.size(); ++gi) {
    const std::size_t d = d_grid[gi];
    if (d == 0 || d > static_cast<std::size_t>(kTensorCutoff)) {
      throw ConfigError("circ dimensions must be in [1, " + std::to_string(kTensorCutoff) + "]");
    }
    const std::string key = "d=" + std::to_string(d);
    const double dd = static_cast<double>(d);
    for (std::size_t r = 0; r < reps; ++r) {
      Rng rng = make_rng(derive_seed(seed, gi), r);
      const Vec x = standard_normal(static_cast<Eigen::Index>(d), rng);
      const Mat S = x * x.transpose();
      const Mat C = circulant(x);
      const Mat CC = C * C.transpose();
      const double plain = pd * (S * S).trace();
      const double aug = pd * (CC * CC).trace() / (dd * dd);
      report.add(r, key, "tr_fisher", plain);
      report.add(r, key, "tr_aug_fisher", aug);
      report.add(r, key, "ratio", plain / aug);
    }
    const MeanStderr rom = ratio_of_means(report.values(key, "tr_fisher"), report.values(key, "tr_aug_fisher"));
    report.add_derived(key, "ratio_of_means", rom.mean, rom.se);
    report.add_derived(key, "target", dd / 2.0, 0.0);
  }
  return report;
}

ExperimentReport run_linreg_experiment(std::size_t p, Design design, double gamma,
                                       std::size_t reps, std::uint64_t seed) {
  if (p < 2) throw ConfigError("linreg experiment needs p >= 2");
  if (gamma < 0.0) throw ConfigError("noise level must be nonnegative");
  if (reps == 0) throw ConfigError("reps must be positive");
  const auto P = static_cast<Eigen::Index>(p);
  Mat X;
  if (design == Design::identity) {
    X = Mat::Identity(P, P);
  } else {
    Rng rng = make_rng(seed, 0);
    X = Mat(3 * P, P);
    for (Eigen::Index j = 0; j < P; ++j) X.col(j) = standard_normal(3 * P, rng);
  }
  const FiniteGroup group = make_permutation_group(p);
  const Vec beta = Vec::Ones(P);
  const std::string key = design == Design::identity ? "design=identity" : "design=random";

  ExperimentReport report("linreg");
  report.config() = {{"p", p}, {"design", design == Design::identity ? "identity" : "random"},
                     {"n", X.rows()}, {"gamma", gamma}, {"reps", reps}, {"seed", seed}};
  LinregRisks closed;
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng = make_rng(seed, r + 1);
    const Vec y = X * beta + gamma * standard_normal(X.rows(), rng);
    const LinregTrio trio = linreg_trio(X, y, group, gamma);
    closed = trio.risks;
    report.add(r, key, "sq_err_erm", (trio.beta_erm - beta).squaredNorm());
    report.add(r, key, "sq_err_adist", (trio.beta_adist - beta).squaredNorm());
    report.add(r, key, "sq_err_cerm", (trio.beta_cerm - beta).squaredNorm());
  }
  report.add_derived(key, "risk_erm", closed.erm, 0.0);
  report.add_derived(key, "risk_adist", closed.adist, 0.0);
  report.add_derived(key, "risk_cerm", closed.cerm, 0.0);
  return report;
}

ReluSchedule relu_schedule(const ReluGdConfig& cfg, std::size_t group_order) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw ConfigError("epsilon must be in (0, 1)");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta must be in (0, 1)");
  if (!(cfg.gamma > 0.0)) throw ConfigError("margin must be positive");
  const double n = static_cast<double>(cfg.n);
  const double k = static_cast<double>(group_order);
  ReluSchedule s;
  s.lambda = (std::sqrt(2.0 * std::log(4.0 * n * k / cfg.delta)) + std::log(4.0 / cfg.epsilon)) /
             (cfg.gamma / 4.0);
  s.rho = 4.0 * s.lambda / (cfg.gamma * std::sqrt(static_cast<double>(cfg.m)));
  s.steps = cfg.steps > 0
                ? cfg.steps
                : static_cast<std::size_t>(std::ceil(2.0 * s.lambda * s.lambda / (n * cfg.epsilon)));
  return s;
}

namespace {

struct CapData {
  Mat X;  // rows on the unit sphere
  Vec y;
};

// Two caps around +-u with u = 1/sqrt(d): x = s c u + sqrt(1 - c^2) v, v a
// unit vector orthogonal to u. Shifts fix u and preserve orthogonality to
// u, so labels are shift-invariant and y <u, x> = c for every point.
CapData make_cap_data(std::size_t n, std::size_t d, double cap, Rng& rng) {
  const auto D = static_cast<Eigen::Index>(d);
  const Vec u = Vec::Constant(D, 1.0 / std::sqrt(static_cast<double>(d)));
  CapData data{Mat(static_cast<Eigen::Index>(n), D), Vec(static_cast<Eigen::Index>(n))};
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    const double s = coin(rng) ? 1.0 : -1.0;
    Vec v = standard_normal(D, rng);
    v -= v.dot(u) * u;
    v.normalize();
    data.X.row(i) = (s * cap * u + std::sqrt(1.0 - cap * cap) * v).transpose();
    data.y(i) = s;
  }
  return data;
}

struct ReluNet {
  Mat W;
  Vec a;
  double scale;

  Vec forward(const Mat& X) const {
    return (X * W.transpose()).cwiseMax(0.0) * a * scale;
  }
};

// Mean logistic loss and its gradient over the rows of X.
double logistic_risk_grad(const ReluNet& net, const Mat& X, const Vec& y, Mat* grad) {
  const Mat H = X * net.W.transpose();
  const Vec f = H.cwiseMax(0.0) * net.a * net.scale;
  const double N = static_cast<double>(X.rows());
  double risk = 0.0;
  Vec coef(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double z = y(i) * f(i);
    risk += softplus(-z);
    coef(i) = -y(i) * sigmoid(-z) / N;
  }
  if (grad != nullptr) {
    Mat G = (H.array() > 0.0).cast<double>().matrix();
    G = (G.array().colwise() * coef.array()).matrix();
    G = (G.array().rowwise() * net.a.transpose().array()).matrix();
    *grad = (G.transpose() * X) * net.scale;
  }
  return risk / N;
}

}  // namespace

ExperimentReport run_relu_gd_experiment(const ReluGdConfig& cfg) {
  if (cfg.n == 0 || cfg.m == 0 || cfg.d < 2) throw ConfigError("relu experiment needs n, m >= 1 and d >= 2");
  if (!(cfg.eta > 0.0 && cfg.eta <= 1.0)) throw ConfigError("step size must be in (0, 1]");
  const double cap = 2.0 * cfg.gamma;
  if (!(cap < 1.0)) throw ConfigError("margin gamma must be below 1/2");
  FiniteGroup group = cfg.group == "shift"     ? make_cyclic_shift_group(cfg.d)
                      : cfg.group == "trivial" ? make_trivial_group(cfg.d)
                                               : throw ConfigError("relu group must be shift or trivial");
  const ReluSchedule sched = relu_schedule(cfg, group.order());

  Rng data_rng = make_rng(cfg.seed, 0);
  const CapData train = make_cap_data(cfg.n, cfg.d, cap, data_rng);
  Rng test_rng = make_rng(cfg.seed, 1);
  const CapData test = make_cap_data(cfg.n_test, cfg.d, cap, test_rng);
  Rng init_rng = make_rng(cfg.seed, 2);
  ReluNet net;
  const auto m = static_cast<Eigen::Index>(cfg.m);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  net.W = Mat(m, d);
  for (Eigen::Index s = 0; s < m; ++s) net.W.row(s) = standard_normal(d, init_rng).transpose();
  std::bernoulli_distribution coin(0.5);
  net.a = Vec(m);
  for (Eigen::Index s = 0; s < m; ++s) net.a(s) = coin(init_rng) ? 1.0 : -1.0;
  net.scale = 1.0 / std::sqrt(static_cast<double>(cfg.m));
  const Mat W0 = net.W;

  std::vector<Mat> transformed;
  for (const auto& g : group.elements()) transformed.push_back(g.apply_rows(train.X));
  Mat expanded;
  Vec expanded_y;
  if (cfg.expand_plain) {
    const auto n = train.X.rows();
    const auto k = static_cast<Eigen::Index>(transformed.size());
    expanded = Mat(n * k, d);
    expanded_y = Vec(n * k);
    for (Eigen::Index g = 0; g < k; ++g) {
      expanded.middleRows(g * n, n) = transformed[static_cast<std::size_t>(g)];
      expanded_y.segment(g * n, n) = train.y;
    }
  }
  auto risk_grad = [&](Mat* grad) {
    if (cfg.expand_plain) return logistic_risk_grad(net, expanded, expanded_y, grad);
    double risk = 0.0;
    Mat gsum = Mat::Zero(m, d);
    Mat gpart;
    for (const auto& Xg : transformed) {
      risk += logistic_risk_grad(net, Xg, train.y, grad != nullptr ? &gpart : nullptr);
      if (grad != nullptr) gsum += gpart;
    }
    const double k = static_cast<double>(transformed.size());
    if (grad != nullptr) *grad = gsum / k;
    return risk / k;
  };

  double best_risk = std::numeric_limits<double>::infinity();
  Mat best_W = net.W;
  double max_disp = 0.0;
  double final_risk = 0.0;
  bool diverged = false;
  Mat grad;
  for (std::size_t t = 0; t <= sched.steps; ++t) {
    const double risk = risk_grad(t < sched.steps ? &grad : nullptr);
    if (!std::isfinite(risk)) {
      diverged = true;
      break;
    }
    if (risk < best_risk) {
      best_risk = risk;
      best_W = net.W;
    }
    final_risk = risk;
    if (t == sched.steps) break;
    net.W -= cfg.eta * grad;
    max_disp = std::max(max_disp, (net.W - W0).rowwise().norm().maxCoeff());
  }
  net.W = best_W;
  const Vec f_test = net.forward(test.X);
  double errors = 0.0;
  for (Eigen::Index i = 0; i < f_test.size(); ++i) {
    if (test.y(i) * f_test(i) <= 0.0) errors += 1.0;
  }

  ExperimentReport report("relu");
  report.config() = {{"n", cfg.n},         {"m", cfg.m},           {"dim", cfg.d},
                     {"gamma", cfg.gamma}, {"eta", cfg.eta},       {"epsilon", cfg.epsilon},
                     {"delta", cfg.delta}, {"steps", sched.steps}, {"group", cfg.group},
                     {"expand_plain", cfg.expand_plain},           {"n_test", cfg.n_test},
                     {"seed", cfg.seed}};
  const std::string key = "group=" + cfg.group;
  if (diverged) throw NumericalError("relu GD diverged");
  report.add(0, key, "best_risk", best_risk);
  report.add(0, key, "final_risk", final_risk);
  report.add(0, key, "test_error", errors / static_cast<double>(f_test.size()));
  report.add(0, key, "max_displacement", max_disp);
  report.add(0, key, "rho", sched.rho);
  report.add(0, key, "lambda", sched.lambda);
  report.add(0, key, "steps", static_cast<double>(sched.steps));
  return report;
}

ExperimentReport run_spherical_density(const SphereConfig& cfg) {
  if (cfg.n < 2 || cfg.p == 0 || cfg.reps == 0) throw ConfigError("sphere experiment needs n >= 2, p >= 1, reps >= 1");
  if (cfg.bandwidth < 0.0) throw ConfigError("bandwidth must be positive");
  if (cfg.rotations < 2 || cfg.rotations % 2 != 0) throw ConfigError("rotations must be even and >= 2");
  if (cfg.grid_points < 2 || !(cfg.grid_hi > cfg.grid_lo)) throw ConfigError("bad evaluation grid");
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto p = static_cast<Eigen::Index>(cfg.p);
  const auto G = static_cast<Eigen::Index>(cfg.grid_points);
  const Vec grid = Vec::LinSpaced(G, cfg.grid_lo, cfg.grid_hi);
  const double step = (cfg.grid_hi - cfg.grid_lo) / static_cast<double>(G - 1);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
  Vec truth(G);
  for (Eigen::Index k = 0; k < G; ++k) truth(k) = inv_sqrt_2pi * std::exp(-0.5 * grid(k) * grid(k));

  auto kde = [&](const Vec& centers, double h) {
    Vec dens = Vec::Zero(G);
    for (Eigen::Index k = 0; k < G; ++k) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < centers.size(); ++i) {
        const double t = (grid(k) - centers(i)) / h;
        s += std::exp(-0.5 * t * t);
      }
      dens(k) = s * inv_sqrt_2pi / (h * static_cast<double>(centers.size()));
    }
    return dens;
  };
  auto ise = [&](const Vec& dens) {
    const Vec sq = (dens - truth).array().square();
    return step * (sq.sum() - 0.5 * (sq(0) + sq(G - 1)));
  };

  ExperimentReport report("sphere");
  report.config() = {{"n", cfg.n}, {"dim", cfg.p}, {"bandwidth", cfg.bandwidth},
                     {"rotations", cfg.rotations}, {"grid", {cfg.grid_lo, cfg.grid_hi, cfg.grid_points}},
                     {"reps", cfg.reps}, {"seed", cfg.seed}, {"sampler", "gaussian"}};
  const std::string key = "p=" + std::to_string(cfg.p);
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    Rng rng = make_rng(cfg.seed, r);
    Mat X(n, p);
    for (Eigen::Index i = 0; i < n; ++i) X.row(i) = standard_normal(p, rng).transpose();
    const Vec first = X.col(0);
    double h = cfg.bandwidth;
    if (h == 0.0) {
      const double mean = first.mean();
      const double sd = std::sqrt((first.array() - mean).square().sum() / static_cast<double>(n - 1));
      h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
    }
    // Z(1)/||Z|| in antithetic pairs, drawn independently for each point;
    // for p = 1 these are exactly +-1.
    const auto R = static_cast<Eigen::Index>(cfg.rotations);
    const Vec norms = X.rowwise().norm();
    Vec centers(n * R);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < R / 2; ++k) {
        const Vec z = standard_normal(p, rng);
        const double u = z(0) / z.norm();
        centers(i * R + 2 * k) = norms(i) * u;
        centers(i * R + 2 * k + 1) = -norms(i) * u;
      }
    }
    const double ise_plain = ise(kde(first, h));
    const double ise_aug = ise(kde(centers, h));
    report.add(r, key, "ise_kde", ise_plain);
    report.add(r, key, "ise_aug", ise_aug);
    report.add(r, key, "aug_better", ise_aug <= ise_plain ? 1.0 : 0.0);
    report.add(r, key, "bandwidth", h);
  }
  return report;
}

ExperimentReport run_sgd_experiment(const std::string& group_spec, std::size_t n,
                                    const SgdConfig& cfg, std::size_t reps) {
  if (n == 0 || reps == 0) throw ConfigError("n and reps must be positive");
  const FiniteGroup group = parse_group_spec(group_spec);
  if (!group.is_linear()) throw ConfigError("sgd experiment needs a linear group");
  const auto d = static_cast<Eigen::Index>(group.dim());
  const Mat mean = group.mean_matrix();
  if (mean.rows() != d) throw ConfigError("sgd experiment needs a group acting on single points");
  const LossModel loss = gaussian_location_loss(d);

  ExperimentReport report("sgd");
  report.config() = {{"group", group_spec}, {"n", n},
                     {"lr", cfg.eta0},      {"schedule", cfg.schedule == LearningRate::constant ? "constant" : "inverse_t"},
                     {"batch", cfg.batch_size}, {"steps", cfg.max_steps},
                     {"reps", reps},        {"seed", cfg.seed}};
  const std::string key = "group=" + group_spec;
  Rng theta_rng = make_rng(cfg.seed, 0);
  const Vec theta0 = mean * standard_normal(d, theta_rng);
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng = make_rng(cfg.seed, r + 1);
    Mat data(static_cast<Eigen::Index>(n), d);
    for (Eigen::Index i = 0; i < data.rows(); ++i) data.row(i) = (theta0 + standard_normal(d, rng)).transpose();
    const Vec aerm = mean * data.colwise().mean().transpose();
    SgdConfig run = cfg;
    run.seed = derive_seed(cfg.seed, r + 1);
    const SgdResult res = augmented_sgd(loss, group, data, Vec::Zero(d), run);
    report.add(r, key, "diverged", res.diverged ? 1.0 : 0.0);
    if (res.diverged) continue;
    report.add(r, key, "sq_dist_to_aerm", (res.fit.theta_hat - aerm).squaredNorm());
    report.add(r, key, "sq_err", (res.fit.theta_hat - theta0).squaredNorm());
  }
  return report;
}

}  // namespace auglab
