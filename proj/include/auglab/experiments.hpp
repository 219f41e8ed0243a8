#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "auglab/augmented_sgd.hpp"
#include "auglab/group_actions.hpp"
#include "auglab/report.hpp"

namespace auglab {

/// Gaussian mean under the flip group: one observation X ~ N(mu, I_d) per
/// replicate with mu a symmetrized N(0, I) draw fixed for the run. d must be even.
ExperimentReport run_flip_experiment(std::size_t d, std::size_t reps, std::uint64_t seed);

/// Poisson counts with a constant rate across coordinates. The aMLE averages
/// the sufficient statistic over `group` (flip on R^d when not given).
ExperimentReport run_poisson_experiment(const std::vector<double>& lambdas, std::size_t d,
                                        std::size_t reps, std::uint64_t seed,
                                        std::optional<FiniteGroup> group = std::nullopt);

/// p tr(XX')^2 against p tr(C_X C_X')^2 / d^2 for X ~ N(0, I_d).
ExperimentReport run_circular_experiment(const std::vector<std::size_t>& d_grid, std::size_t p,
                                         std::size_t reps, std::uint64_t seed);

enum class Design { identity, random };

/// ERM, aDIST and cERM under the permutation group with beta = 1. Identity
/// design uses n = p; random design uses a fixed Gaussian n = 3p design.
ExperimentReport run_linreg_experiment(std::size_t p, Design design, double gamma,
                                       std::size_t reps, std::uint64_t seed);

struct ReluGdConfig {
  std::size_t n = 512;
  std::size_t m = 1024;
  std::size_t d = 8;
  double gamma = 0.25;     // margin of the generated data
  double eta = 1.0;
  double epsilon = 0.1;
  double delta = 0.1;
  std::size_t steps = 0;   // 0 selects ceil(2 lambda^2 / (n epsilon))
  std::string group = "shift";  // shift | trivial
  bool expand_plain = false;    // train plainly on the |G|-expanded data instead
  std::size_t n_test = 2000;
  std::uint64_t seed = 0;
};

struct ReluSchedule {
  double lambda = 0.0;
  double rho = 0.0;
  std::size_t steps = 0;
};

ReluSchedule relu_schedule(const ReluGdConfig& cfg, std::size_t group_order);

/// Two-layer ReLU net f = m^-1/2 a' relu(Wx) with fixed a in {+-1}, trained
/// by full-batch GD on the augmented logistic risk. Data lie on two caps
/// around u = 1/sqrt(d), so labels are invariant under cyclic shifts.
ExperimentReport run_relu_gd_experiment(const ReluGdConfig& cfg);

struct SphereConfig {
  std::size_t n = 500;
  std::size_t p = 10;
  double bandwidth = 0.0;     // 0 selects 1.06 sd n^-1/5
  std::size_t rotations = 64; // Z draws per run, used in antithetic pairs
  double grid_lo = -4.0;
  double grid_hi = 4.0;
  std::size_t grid_points = 161;
  std::size_t reps = 1;
  std::uint64_t seed = 0;
};

/// First-coordinate density of a spherically symmetric N(0, I_p) sample:
/// plain KDE against the augmented KDE that spreads each norm over random
/// directions. Reports integrated squared errors against N(0, 1).
ExperimentReport run_spherical_density(const SphereConfig& cfg);

/// Augmented SGD on a Gaussian location model; compares the final iterate to
/// the exact augmented ERM solution.
ExperimentReport run_sgd_experiment(const std::string& group_spec, std::size_t n,
                                    const SgdConfig& cfg, std::size_t reps);

}  // namespace auglab
