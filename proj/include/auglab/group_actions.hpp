#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "auglab/core.hpp"

namespace auglab {

enum class GroupKind {
  trivial,
  cyclic_shift,
  flip,
  sign,
  permutation,
  subsample_semigroup,
  orthogonal_sampled,
  custom,
};

std::string to_string(GroupKind kind);

/// One transform x -> gx. Linear actions carry their matrix; other actions
/// carry an opaque map. Subsample elements also record the selected rows.
struct GroupElement {
  std::size_t index = 0;
  std::optional<Mat> matrix;
  std::function<Vec(const Vec&)> action;
  std::vector<std::size_t> rows;

  bool is_linear() const { return matrix.has_value(); }
  Vec apply(const Vec& x) const;
  /// Applies the element to a stacked dataset. Subsample elements select
  /// rows; every other element acts on each row independently.
  Mat apply_rows(const Mat& data) const;
};

/// A finite group (or semigroup) of transforms with the uniform measure.
///
/// Small groups are fully enumerated with element 0 the identity and a
/// deterministic lexicographic order. Groups above the enumeration cutoff
/// are sampler-backed: `haar_sample` still works, and mean_matrix() falls
/// back to the documented closed form.
class FiniteGroup {
 public:
  static constexpr std::size_t kEnumerationCutoff = 10000;

  using Sampler = std::function<GroupElement(Rng&)>;

  FiniteGroup(GroupKind kind, std::size_t dim, std::vector<GroupElement> elements,
              bool semigroup = false);
  FiniteGroup(GroupKind kind, std::size_t dim, Sampler sampler,
              std::optional<Mat> closed_form_mean, double nominal_order);

  GroupKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  bool enumerated() const { return enumerated_; }
  bool is_semigroup() const { return semigroup_; }
  bool is_linear() const;
  /// Number of enumerated elements; throws CapabilityError when sampler-backed.
  std::size_t order() const;
  /// Group order as a real number; may exceed any integer type (e.g. 20!).
  double nominal_order() const { return nominal_order_; }

  const std::vector<GroupElement>& elements() const;
  const GroupElement& element(std::size_t i) const;

  GroupElement haar_sample(Rng& rng) const;

  /// E_g[g] for linear actions.
  Mat mean_matrix() const;

  /// Index of g_i o g_j (apply j first), or nullopt when the product is not
  /// an element. Only defined for enumerated linear actions.
  std::optional<std::size_t> compose(std::size_t i, std::size_t j) const;

  std::string name() const;

 private:
  GroupKind kind_;
  std::size_t dim_;
  bool enumerated_;
  bool semigroup_;
  double nominal_order_;
  std::vector<GroupElement> elements_;
  Sampler sampler_;
  std::optional<Mat> closed_form_mean_;
};

FiniteGroup make_trivial_group(std::size_t d);
FiniteGroup make_cyclic_shift_group(std::size_t d);
FiniteGroup make_flip_group(std::size_t d);
FiniteGroup make_sign_group(std::size_t d = 1);
/// Symmetric group S_p. Enumerated when p! <= cutoff; otherwise sampler-backed
/// unless `require_enumeration`, which then raises CapabilityError.
FiniteGroup make_permutation_group(std::size_t p, bool require_enumeration = false);
/// All r-subsets of n rows, acting on stacked datasets by row selection.
FiniteGroup make_subsample_semigroup(std::size_t n, std::size_t r,
                                     bool require_enumeration = false);
/// O(d) with Haar measure, available only by sampling.
FiniteGroup make_orthogonal_group(std::size_t d);

/// Finite group from explicit matrices; matrices[0] must be the identity.
FiniteGroup make_matrix_group(std::vector<Mat> matrices, GroupKind kind = GroupKind::custom);
/// Finite set of arbitrary transforms with uniform weights (flagged semigroup:
/// no closure or inverse is assumed).
FiniteGroup make_transform_set(std::size_t dim,
                               std::vector<std::function<Vec(const Vec&)>> maps);

/// Extends a linear group on R^d to R^(d+extra), acting as the identity on
/// the trailing `extra` coordinates (e.g. regression labels).
FiniteGroup lift_group(const FiniteGroup& group, std::size_t extra);

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// sign of R's diagonal folded into Q.
GroupElement sample_orthogonal_haar(std::size_t d, Rng& rng);

Vec apply(const GroupElement& g, const Vec& x);
GroupElement haar_sample(const FiniteGroup& group, Rng& rng);
Mat mean_matrix(const FiniteGroup& group);

/// Parses `{shift|flip|sign|perm|subsample|trivial}:<dim>`; subsample also
/// accepts `subsample:<n>,<r>` (default r = n - 1).
FiniteGroup parse_group_spec(const std::string& spec);

}  // namespace auglab
