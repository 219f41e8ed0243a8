#include "auglab/augmented_sgd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "auglab/orbit_average.hpp"

namespace auglab {

namespace {

constexpr double kDivergenceNorm = 1e12;

double augmented_risk(const LossModel& loss, const FiniteGroup* group, const Mat& data,
                      const Vec& theta) {
  if (group == nullptr) return empirical_risk(loss, data, theta);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Vec x = data.row(i).transpose();
    double s = 0.0;
    for (const auto& g : group->elements()) s += loss.value(theta, g.apply(x));
    sum += s / static_cast<double>(group->order());
  }
  return sum / static_cast<double>(data.rows());
}

Vec augmented_gradient(const LossModel& loss, const FiniteGroup* group, const Mat& data,
                       const Vec& theta) {
  if (group == nullptr) return empirical_gradient(loss, data, theta);
  Vec sum = Vec::Zero(theta.size());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Vec x = data.row(i).transpose();
    for (const auto& g : group->elements()) sum += loss.grad(theta, g.apply(x));
  }
  return sum / static_cast<double>(data.rows() * static_cast<Eigen::Index>(group->order()));
}

SgdResult run_sgd(const LossModel& loss, const FiniteGroup* group, const Mat& data,
                  const Vec& init, const SgdConfig& cfg) {
  const auto n = static_cast<std::size_t>(data.rows());
  if (n == 0) throw ConfigError("SGD needs data");
  if (cfg.batch_size == 0 || cfg.batch_size > n) throw ConfigError("batch size must be in [1, n]");
  if (!(cfg.eta0 > 0.0)) throw ConfigError("learning rate must be positive");
  if (init.size() != loss.param_dim) throw ConfigError("init has wrong parameter dimension");
  const bool need_full = cfg.record_objective || cfg.grad_tol > 0.0;
  if (need_full && group != nullptr && !group->enumerated()) {
    throw CapabilityError("objective and gradient checks need an enumerated group");
  }

  Rng batch_rng = make_rng(cfg.seed, 0);
  Rng aug_rng = make_rng(cfg.seed, 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t per_epoch = n / cfg.batch_size;
  std::size_t cursor = per_epoch;  // forces a shuffle on the first step

  SgdResult out;
  Vec theta = init;
  if (cfg.record_trajectory) out.trajectory.push_back(theta);
  Mat batch(static_cast<Eigen::Index>(cfg.batch_size), data.cols());
  std::vector<GroupElement> elems(cfg.batch_size);
  const GroupElement identity = [&] {
    GroupElement e;
    e.action = [](const Vec& x) { return x; };
    return e;
  }();

  std::size_t step = 0;
  for (; step < cfg.max_steps; ++step) {
    if (cursor == per_epoch) {
      if (cfg.grad_tol > 0.0 && step > 0 &&
          augmented_gradient(loss, group, data, theta).norm() <= cfg.grad_tol) {
        out.fit.converged = true;
        break;
      }
      std::shuffle(order.begin(), order.end(), batch_rng);
      cursor = 0;
    }
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      batch.row(static_cast<Eigen::Index>(b)) =
          data.row(static_cast<Eigen::Index>(order[cursor * cfg.batch_size + b]));
      elems[b] = group == nullptr ? identity : group->haar_sample(aug_rng);
    }
    ++cursor;
    const double eta = cfg.schedule == LearningRate::constant
                           ? cfg.eta0
                           : cfg.eta0 / static_cast<double>(step + 1);
    theta -= eta * sgd_direction(loss, batch, elems, theta);
    if (!theta.allFinite() || theta.norm() > kDivergenceNorm) {
      out.diverged = true;
      ++step;
      break;
    }
    if (cfg.record_trajectory) out.trajectory.push_back(theta);
    if (cfg.record_objective) out.objective.push_back(augmented_risk(loss, group, data, theta));
  }
  out.fit.theta_hat = theta;
  out.fit.iterations = step;
  if (!out.diverged && (group == nullptr || group->enumerated())) {
    out.fit.objective = augmented_risk(loss, group, data, theta);
    if (cfg.grad_tol > 0.0 && !out.fit.converged) {
      out.fit.converged = augmented_gradient(loss, group, data, theta).norm() <= cfg.grad_tol;
    }
  } else if (out.diverged) {
    out.fit.objective = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace

Vec sgd_direction(const LossModel& loss, const Mat& batch, const std::vector<GroupElement>& elems,
                  const Vec& theta) {
  if (static_cast<std::size_t>(batch.rows()) != elems.size()) {
    throw ConfigError("need one group element per batch row");
  }
  Vec sum = Vec::Zero(theta.size());
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    sum += loss.grad(theta, elems[static_cast<std::size_t>(i)].apply(batch.row(i).transpose()));
  }
  return sum / static_cast<double>(batch.rows());
}

SgdResult augmented_sgd(const LossModel& loss, const FiniteGroup& group, const Mat& data,
                        const Vec& init, const SgdConfig& cfg) {
  return run_sgd(loss, &group, data, init, cfg);
}

SgdResult plain_sgd(const LossModel& loss, const Mat& data, const Vec& init, const SgdConfig& cfg) {
  return run_sgd(loss, nullptr, data, init, cfg);
}

}  // namespace auglab
