#pragma once

#include <cstdint>
#include <vector>

#include "auglab/estimators.hpp"
#include "auglab/group_actions.hpp"

namespace auglab {

enum class LearningRate { constant, inverse_t };

struct SgdConfig {
  LearningRate schedule = LearningRate::constant;
  double eta0 = 0.1;  // eta_t = eta0, or eta0 / t with t counted from 1
  std::size_t batch_size = 1;
  std::size_t max_steps = 1000;
  double grad_tol = 0.0;  // checked on the full augmented gradient each epoch; 0 disables
  std::uint64_t seed = 0;
  bool record_trajectory = false;
  bool record_objective = false;
};

struct SgdResult {
  EstimatorResult fit;
  bool diverged = false;
  std::vector<Vec> trajectory;   // theta_0, ..., theta_T when recorded
  std::vector<double> objective;  // augmented empirical risk after each step when recorded
};

/// Mean of grad L(theta, g_j x_j) over a batch, one element per row.
Vec sgd_direction(const LossModel& loss, const Mat& batch, const std::vector<GroupElement>& elems,
                  const Vec& theta);

/// Minibatch SGD on the augmented empirical risk. Batches are drawn without
/// replacement within an epoch (reshuffled each epoch, remainder dropped),
/// and every batch element gets a fresh g each step. Batch order and group
/// draws use separate derived streams, so a trivial group reproduces plain
/// SGD exactly.
SgdResult augmented_sgd(const LossModel& loss, const FiniteGroup& group, const Mat& data,
                        const Vec& init, const SgdConfig& cfg);

/// The same iteration without augmentation.
SgdResult plain_sgd(const LossModel& loss, const Mat& data, const Vec& init, const SgdConfig& cfg);

}  // namespace auglab
