#include "auglab/group_actions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace auglab {

std::string to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::trivial: return "trivial";
    case GroupKind::cyclic_shift: return "cyclic_shift";
    case GroupKind::flip: return "flip";
    case GroupKind::sign: return "sign";
    case GroupKind::permutation: return "permutation";
    case GroupKind::subsample_semigroup: return "subsample_semigroup";
    case GroupKind::orthogonal_sampled: return "orthogonal_sampled";
    case GroupKind::custom: return "custom";
  }
  return "unknown";
}

Vec GroupElement::apply(const Vec& x) const {
  if (matrix) {
    if (x.size() != matrix->cols()) {
      throw ConfigError("group element applied to vector of length " +
                        std::to_string(x.size()) + ", expected " +
                        std::to_string(matrix->cols()));
    }
    return (*matrix) * x;
  }
  if (!action) throw ConfigError("group element has neither matrix nor action");
  return action(x);
}

Mat GroupElement::apply_rows(const Mat& data) const {
  if (!rows.empty()) {
    Mat out(static_cast<Eigen::Index>(rows.size()), data.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (static_cast<Eigen::Index>(rows[k]) >= data.rows()) {
        throw ConfigError("subsample element selects row beyond dataset size");
      }
      out.row(static_cast<Eigen::Index>(k)) = data.row(static_cast<Eigen::Index>(rows[k]));
    }
    return out;
  }
  if (matrix) {
    if (data.cols() != matrix->cols()) {
      throw ConfigError("dataset has " + std::to_string(data.cols()) +
                        " columns, group acts on " + std::to_string(matrix->cols()));
    }
    return data * matrix->transpose();
  }
  Mat out(data.rows(), data.cols());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Vec y = apply(data.row(i).transpose());
    if (y.size() != data.cols()) throw ConfigError("action changes point dimension");
    out.row(i) = y.transpose();
  }
  return out;
}

FiniteGroup::FiniteGroup(GroupKind kind, std::size_t dim, std::vector<GroupElement> elements,
                         bool semigroup)
    : kind_(kind),
      dim_(dim),
      enumerated_(true),
      semigroup_(semigroup),
      nominal_order_(static_cast<double>(elements.size())),
      elements_(std::move(elements)) {
  if (elements_.empty()) throw ConfigError("group must have at least one element");
  for (std::size_t i = 0; i < elements_.size(); ++i) elements_[i].index = i;
}

FiniteGroup::FiniteGroup(GroupKind kind, std::size_t dim, Sampler sampler,
                         std::optional<Mat> closed_form_mean, double nominal_order)
    : kind_(kind),
      dim_(dim),
      enumerated_(false),
      semigroup_(kind == GroupKind::subsample_semigroup),
      nominal_order_(nominal_order),
      sampler_(std::move(sampler)),
      closed_form_mean_(std::move(closed_form_mean)) {}

bool FiniteGroup::is_linear() const {
  switch (kind_) {
    case GroupKind::custom:
      return enumerated_ && std::all_of(elements_.begin(), elements_.end(),
                                        [](const GroupElement& g) { return g.is_linear(); });
    default:
      return true;
  }
}

std::size_t FiniteGroup::order() const {
  if (!enumerated_) {
    throw CapabilityError(name() + " is not enumerated (order above cutoff " +
                          std::to_string(kEnumerationCutoff) + ")");
  }
  return elements_.size();
}

const std::vector<GroupElement>& FiniteGroup::elements() const {
  if (!enumerated_) throw CapabilityError(name() + " cannot be enumerated");
  return elements_;
}

const GroupElement& FiniteGroup::element(std::size_t i) const {
  return elements().at(i);
}

GroupElement FiniteGroup::haar_sample(Rng& rng) const {
  if (enumerated_) {
    std::uniform_int_distribution<std::size_t> pick(0, elements_.size() - 1);
    return elements_[pick(rng)];
  }
  return sampler_(rng);
}

Mat FiniteGroup::mean_matrix() const {
  if (!is_linear()) throw CapabilityError("mean_matrix requires a linear action");
  if (enumerated_) {
    Mat sum = Mat::Zero(elements_[0].matrix->rows(), elements_[0].matrix->cols());
    for (const auto& g : elements_) sum += *g.matrix;
    return sum / static_cast<double>(elements_.size());
  }
  if (closed_form_mean_) return *closed_form_mean_;
  throw CapabilityError("no closed-form mean matrix for " + name());
}

std::optional<std::size_t> FiniteGroup::compose(std::size_t i, std::size_t j) const {
  if (!is_linear()) throw CapabilityError("compose requires a linear action");
  const auto& elems = elements();
  const Mat& a = *elems.at(i).matrix;
  const Mat& b = *elems.at(j).matrix;
  if (a.cols() != b.rows()) return std::nullopt;
  const Mat product = a * b;
  for (const auto& g : elems) {
    if (g.matrix->rows() == product.rows() && g.matrix->cols() == product.cols() &&
        (*g.matrix - product).cwiseAbs().maxCoeff() < 1e-12) {
      return g.index;
    }
  }
  return std::nullopt;
}

std::string FiniteGroup::name() const {
  return to_string(kind_) + "(" + std::to_string(dim_) + ")";
}

namespace {

GroupElement linear_element(Mat m) {
  GroupElement g;
  g.matrix = std::move(m);
  return g;
}

void require_dim(std::size_t d) {
  if (d == 0) throw ConfigError("group dimension must be positive");
}

double factorial(std::size_t p) {
  double f = 1.0;
  for (std::size_t k = 2; k <= p; ++k) f *= static_cast<double>(k);
  return f;
}

double binomial(std::size_t n, std::size_t r) {
  double c = 1.0;
  for (std::size_t k = 1; k <= r; ++k) {
    c *= static_cast<double>(n - r + k) / static_cast<double>(k);
  }
  return std::round(c);
}

Mat permutation_matrix(const std::vector<std::size_t>& perm) {
  const auto p = static_cast<Eigen::Index>(perm.size());
  Mat m = Mat::Zero(p, p);
  // (Px)_i = x_{perm[i]}
  for (Eigen::Index i = 0; i < p; ++i) m(i, static_cast<Eigen::Index>(perm[i])) = 1.0;
  return m;
}

GroupElement subsample_element(const std::vector<std::size_t>& rows, std::size_t n) {
  Mat sel = Mat::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    sel(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(rows[k])) = 1.0;
  }
  GroupElement g = linear_element(std::move(sel));
  g.rows = rows;
  return g;
}

}  // namespace

FiniteGroup make_trivial_group(std::size_t d) {
  require_dim(d);
  const auto n = static_cast<Eigen::Index>(d);
  return FiniteGroup(GroupKind::trivial, d, {linear_element(Mat::Identity(n, n))});
}

FiniteGroup make_cyclic_shift_group(std::size_t d) {
  require_dim(d);
  const auto n = static_cast<Eigen::Index>(d);
  std::vector<GroupElement> elems;
  elems.reserve(d);
  for (Eigen::Index shift = 0; shift < n; ++shift) {
    // (g_shift x)_{(j + shift) mod d} = x_j
    Mat m = Mat::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) m((j + shift) % n, j) = 1.0;
    elems.push_back(linear_element(std::move(m)));
  }
  return FiniteGroup(GroupKind::cyclic_shift, d, std::move(elems));
}

FiniteGroup make_flip_group(std::size_t d) {
  require_dim(d);
  const auto n = static_cast<Eigen::Index>(d);
  Mat exchange = Mat::Identity(n, n).rowwise().reverse();
  std::vector<GroupElement> elems;
  elems.push_back(linear_element(Mat::Identity(n, n)));
  elems.push_back(linear_element(std::move(exchange)));
  return FiniteGroup(GroupKind::flip, d, std::move(elems));
}

FiniteGroup make_sign_group(std::size_t d) {
  require_dim(d);
  const auto n = static_cast<Eigen::Index>(d);
  std::vector<GroupElement> elems;
  elems.push_back(linear_element(Mat::Identity(n, n)));
  elems.push_back(linear_element(-Mat::Identity(n, n)));
  return FiniteGroup(GroupKind::sign, d, std::move(elems));
}

FiniteGroup make_permutation_group(std::size_t p, bool require_enumeration) {
  require_dim(p);
  const double order = factorial(p);
  const auto n = static_cast<Eigen::Index>(p);
  const Mat closed_mean = Mat::Constant(n, n, 1.0 / static_cast<double>(p));
  if (order > static_cast<double>(FiniteGroup::kEnumerationCutoff)) {
    if (require_enumeration) {
      throw CapabilityError("S_" + std::to_string(p) + " has order above the enumeration cutoff");
    }
    auto sampler = [p](Rng& rng) {
      std::vector<std::size_t> perm(p);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      return linear_element(permutation_matrix(perm));
    };
    return FiniteGroup(GroupKind::permutation, p, sampler, closed_mean, order);
  }
  std::vector<std::size_t> perm(p);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<GroupElement> elems;
  do {
    elems.push_back(linear_element(permutation_matrix(perm)));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return FiniteGroup(GroupKind::permutation, p, std::move(elems));
}

FiniteGroup make_subsample_semigroup(std::size_t n, std::size_t r, bool require_enumeration) {
  require_dim(n);
  if (r == 0 || r > n) {
    throw ConfigError("subsample size r=" + std::to_string(r) + " must satisfy 1 <= r <= n=" +
                      std::to_string(n));
  }
  const double count = binomial(n, r);
  if (count > static_cast<double>(FiniteGroup::kEnumerationCutoff)) {
    if (require_enumeration) {
      throw CapabilityError("C(" + std::to_string(n) + "," + std::to_string(r) +
                            ") exceeds the enumeration cutoff");
    }
    auto sampler = [n, r](Rng& rng) {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      // partial Fisher-Yates, then sort for a canonical subset
      for (std::size_t k = 0; k < r; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, n - 1);
        std::swap(idx[k], idx[pick(rng)]);
      }
      std::vector<std::size_t> rows(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(r));
      std::sort(rows.begin(), rows.end());
      return subsample_element(rows, n);
    };
    return FiniteGroup(GroupKind::subsample_semigroup, n, sampler, std::nullopt, count);
  }
  // Lexicographic r-subsets via a selection mask.
  std::vector<GroupElement> elems;
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(r), true);
  do {
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask[j]) rows.push_back(j);
    }
    elems.push_back(subsample_element(rows, n));
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return FiniteGroup(GroupKind::subsample_semigroup, n, std::move(elems), /*semigroup=*/true);
}

FiniteGroup make_orthogonal_group(std::size_t d) {
  require_dim(d);
  const auto n = static_cast<Eigen::Index>(d);
  auto sampler = [d](Rng& rng) { return sample_orthogonal_haar(d, rng); };
  return FiniteGroup(GroupKind::orthogonal_sampled, d, sampler, Mat::Zero(n, n),
                     std::numeric_limits<double>::infinity());
}

FiniteGroup make_matrix_group(std::vector<Mat> matrices, GroupKind kind) {
  if (matrices.empty()) throw ConfigError("matrix group needs at least the identity");
  const Mat& first = matrices.front();
  if (first.rows() != first.cols() ||
      (first - Mat::Identity(first.rows(), first.cols())).cwiseAbs().maxCoeff() > 1e-12) {
    throw ConfigError("element 0 of a matrix group must be the identity");
  }
  const auto d = static_cast<std::size_t>(first.rows());
  std::vector<GroupElement> elems;
  for (auto& m : matrices) {
    if (m.rows() != first.rows() || m.cols() != first.cols()) {
      throw ConfigError("matrix group elements must share one shape");
    }
    elems.push_back(linear_element(std::move(m)));
  }
  return FiniteGroup(kind, d, std::move(elems));
}

FiniteGroup make_transform_set(std::size_t dim,
                               std::vector<std::function<Vec(const Vec&)>> maps) {
  require_dim(dim);
  std::vector<GroupElement> elems;
  for (auto& f : maps) {
    GroupElement g;
    g.action = std::move(f);
    elems.push_back(std::move(g));
  }
  return FiniteGroup(GroupKind::custom, dim, std::move(elems), /*semigroup=*/true);
}

FiniteGroup lift_group(const FiniteGroup& group, std::size_t extra) {
  if (!group.is_linear()) throw CapabilityError("lift_group requires a linear action");
  const auto d = static_cast<Eigen::Index>(group.dim());
  const auto e = static_cast<Eigen::Index>(extra);
  auto lift = [d, e](const Mat& m) {
    Mat out = Mat::Identity(d + e, d + e);
    out.topLeftCorner(d, d) = m;
    return out;
  };
  if (group.enumerated()) {
    std::vector<GroupElement> elems;
    for (const auto& g : group.elements()) elems.push_back(linear_element(lift(*g.matrix)));
    return FiniteGroup(group.kind(), group.dim() + extra, std::move(elems), group.is_semigroup());
  }
  auto sampler = [group, lift](Rng& rng) {
    return linear_element(lift(*group.haar_sample(rng).matrix));
  };
  return FiniteGroup(group.kind(), group.dim() + extra, sampler, lift(group.mean_matrix()),
                     group.nominal_order());
}

GroupElement sample_orthogonal_haar(std::size_t d, Rng& rng) {
  require_dim(d);
  const auto n = static_cast<Eigen::Index>(d);
  Mat z(n, n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Mat> qr(z);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return linear_element(std::move(q));
}

Vec apply(const GroupElement& g, const Vec& x) { return g.apply(x); }

GroupElement haar_sample(const FiniteGroup& group, Rng& rng) { return group.haar_sample(rng); }

Mat mean_matrix(const FiniteGroup& group) { return group.mean_matrix(); }

FiniteGroup parse_group_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("group spec must look like kind:dim, got '" + spec + "'");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  auto parse_size = [&spec](const std::string& text) {
    std::size_t used = 0;
    unsigned long value = 0;
    try {
      value = std::stoul(text, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad dimension in group spec '" + spec + "'");
    }
    if (used != text.size()) throw ConfigError("bad dimension in group spec '" + spec + "'");
    return static_cast<std::size_t>(value);
  };
  if (kind == "subsample") {
    const auto comma = rest.find(',');
    const std::size_t n = parse_size(rest.substr(0, comma));
    const std::size_t r = comma == std::string::npos ? (n > 1 ? n - 1 : 1)
                                                     : parse_size(rest.substr(comma + 1));
    return make_subsample_semigroup(n, r);
  }
  const std::size_t d = parse_size(rest);
  if (kind == "shift") return make_cyclic_shift_group(d);
  if (kind == "flip") return make_flip_group(d);
  if (kind == "sign") return make_sign_group(d);
  if (kind == "perm") return make_permutation_group(d);
  if (kind == "trivial") return make_trivial_group(d);
  throw ConfigError("unknown group kind '" + kind + "'");
}

}  // namespace auglab
