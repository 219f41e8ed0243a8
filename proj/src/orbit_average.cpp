#include "auglab/orbit_average.hpp"

#include <algorithm>
#include <numeric>

namespace auglab {

namespace {

Mat stack_values(const std::vector<Vec>& values) {
  Mat out(static_cast<Eigen::Index>(values.size()), values.front().size());
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (values[r].size() != out.cols()) throw ConfigError("f returned vectors of varying length");
    out.row(static_cast<Eigen::Index>(r)) = values[r].transpose();
  }
  return out;
}

// orbit[i] holds f(g x_i) for the elements used at row i, one row per element.
// Every row must use the same number of elements so the joint measure is
// uniform over (i, j).
VarianceDecomposition decompose(const std::vector<Mat>& orbit) {
  const auto n = static_cast<Eigen::Index>(orbit.size());
  const Eigen::Index k = orbit.front().rows();
  const Eigen::Index p = orbit.front().cols();
  Mat joint(n * k, p);
  Mat means(n, p);
  Mat within = Mat::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Mat& vals = orbit[static_cast<std::size_t>(i)];
    if (vals.rows() != k) throw ConfigError("rows use different numbers of group elements");
    joint.middleRows(i * k, k) = vals;
    means.row(i) = vals.colwise().mean();
    within += population_covariance(vals);
  }
  VarianceDecomposition out;
  out.cov_f = population_covariance(joint);
  out.cov_fbar = population_covariance(means);
  out.mean_within_orbit_cov = within / static_cast<double>(n);
  out.residual =
      (out.cov_f - out.cov_fbar - out.mean_within_orbit_cov).cwiseAbs().maxCoeff();
  return out;
}

void require_exact(const OrbitAverager& avg, const char* what) {
  if (avg.mode != AverageMode::exact) {
    throw ConfigError(std::string(what) + " requires exact averaging");
  }
  if (!avg.group.enumerated()) {
    throw CapabilityError(std::string(what) + " requires an enumerated group");
  }
}

}  // namespace

Mat orbit_values(const OrbitAverager& avg, const VecFn& f, const Vec& x,
                 std::size_t point_index) {
  std::vector<Vec> values;
  if (avg.mode == AverageMode::exact) {
    for (const auto& g : avg.group.elements()) values.push_back(f(g.apply(x)));
  } else {
    if (avg.k == 0) throw ConfigError("Monte Carlo averaging needs k >= 1");
    Rng rng = make_rng(avg.seed, point_index);
    for (std::size_t j = 0; j < avg.k; ++j) values.push_back(f(avg.group.haar_sample(rng).apply(x)));
  }
  return stack_values(values);
}

Vec orbit_average(const OrbitAverager& avg, const VecFn& f, const Vec& x,
                  std::size_t point_index) {
  return orbit_values(avg, f, x, point_index).colwise().mean().transpose();
}

double invariance_defect(const OrbitAverager& avg, const VecFn& f, const Mat& points) {
  require_exact(avg, "invariance_defect");
  const auto dim = static_cast<Eigen::Index>(avg.group.dim());
  double defect = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vec x = points.row(i).transpose();
    const Vec fbar = orbit_average(avg, f, x);
    for (const auto& g : avg.group.elements()) {
      const Vec gx = g.apply(x);
      const Vec fbar_gx = gx.size() == dim ? orbit_average(avg, f, gx) : f(gx);
      if (fbar_gx.size() != fbar.size()) throw ConfigError("f output length depends on input");
      defect = std::max(defect, (fbar_gx - fbar).norm());
    }
  }
  return defect;
}

VarianceDecomposition total_variance_decomposition(const OrbitAverager& avg, const VecFn& f,
                                                   const Mat& data) {
  require_exact(avg, "total_variance_decomposition");
  if (data.rows() < 2) throw ConfigError("variance decomposition needs n >= 2 rows");
  std::vector<Mat> orbit;
  orbit.reserve(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    orbit.push_back(orbit_values(avg, f, data.row(i).transpose()));
  }
  return decompose(orbit);
}

JensenCheck jensen_contraction_check(const OrbitAverager& avg, const VecFn& f,
                                     const std::function<double(const Vec&)>& phi,
                                     const Mat& data) {
  require_exact(avg, "jensen_contraction_check");
  if (data.rows() == 0) throw ConfigError("jensen_contraction_check needs data");
  JensenCheck out;
  double rhs_count = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Mat vals = orbit_values(avg, f, data.row(i).transpose());
    out.lhs += phi(vals.colwise().mean().transpose());
    for (Eigen::Index j = 0; j < vals.rows(); ++j) {
      out.rhs += phi(vals.row(j).transpose());
      rhs_count += 1.0;
    }
  }
  out.lhs /= static_cast<double>(data.rows());
  out.rhs /= rhs_count;
  return out;
}

VarianceDecomposition finite_aug_decomposition(const VecFn& f, const FiniteGroup& group,
                                               std::size_t k, const Mat& data, Rng& rng,
                                               bool without_replacement) {
  if (k == 0) throw ConfigError("finite augmentation needs k >= 1");
  if (data.rows() < 2) throw ConfigError("variance decomposition needs n >= 2 rows");
  if (without_replacement && (!group.enumerated() || k > group.order())) {
    throw ConfigError("sampling without replacement needs an enumerated group with k <= |G|");
  }
  std::vector<Mat> orbit;
  orbit.reserve(static_cast<std::size_t>(data.rows()));
  std::vector<std::size_t> idx;
  if (without_replacement) {
    idx.resize(group.order());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Vec x = data.row(i).transpose();
    std::vector<Vec> values;
    if (without_replacement) {
      for (std::size_t j = 0; j < k; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, idx.size() - 1);
        std::swap(idx[j], idx[pick(rng)]);
        values.push_back(f(group.element(idx[j]).apply(x)));
      }
    } else {
      for (std::size_t j = 0; j < k; ++j) values.push_back(f(group.haar_sample(rng).apply(x)));
    }
    orbit.push_back(stack_values(values));
  }
  return decompose(orbit);
}

}  // namespace auglab
