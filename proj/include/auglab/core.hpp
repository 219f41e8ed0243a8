#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace auglab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Rng = std::mt19937_64;

// Error taxonomy. The CLI maps ConfigError to exit code 2 and
// NumericalError to exit code 3.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CapabilityError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seed for the i-th independent stream derived from a base seed.
/// Streams are keyed as `seed ^ index` and then scrambled, so nearby
/// indices do not produce correlated mt19937 states.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

inline Rng make_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(derive_seed(seed, index));
}

Vec standard_normal(Eigen::Index n, Rng& rng);

/// Population (1/n) covariance of the rows of `rows`.
Mat population_covariance(const Mat& rows);

double min_eigenvalue(const Mat& symmetric);
double max_eigenvalue(const Mat& symmetric);

/// Mean and standard error (sample sd / sqrt(n)) of a sample.
struct MeanStderr {
  double mean = 0.0;
  double se = 0.0;
};
MeanStderr mean_stderr(const std::vector<double>& values);

}  // namespace auglab
