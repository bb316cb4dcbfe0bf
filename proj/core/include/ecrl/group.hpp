#pragma once

// Finite symmetry groups (cyclic C_N, dihedral D_N), their real orthogonal
// representations, and group actions on factored feature vectors and square
// grid images.

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecrl {

using Element = std::size_t;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class GroupKind { cyclic, dihedral };

enum class RepKind { trivial, standard, regular, direct_sum };

std::string to_string(RepKind kind);

/// Immutable multiplication table of a finite planar symmetry group.
///
/// Elements are the integers 0..order()-1 with 0 the identity. For C_N,
/// element k is the rotation by 2*pi*k/N. For D_N, elements 0..N-1 are the
/// rotations and N+k is the reflection r^k * f, where f mirrors the y axis
/// (diag(1, -1)). All representation matrices are computed once at
/// construction.
class FiniteGroup {
 public:
  FiniteGroup(GroupKind kind, std::size_t rotations);

  GroupKind kind() const noexcept { return kind_; }
  std::size_t order() const noexcept { return order_; }
  /// Number of rotations N (the order for cyclic groups, half of it for dihedral).
  std::size_t rotations() const noexcept { return rotations_; }
  static constexpr Element identity() noexcept { return 0; }

  /// a∘b (apply b first, then a).
  Element compose(Element a, Element b) const;
  Element inverse(Element g) const;
  bool is_reflection(Element g) const noexcept { return g >= rotations_; }

  /// Canonical config name, e.g. "c8" or "d4".
  std::string name() const;

  std::size_t dim(RepKind kind) const;
  const Matrix& matrix(RepKind kind, Element g) const;

  /// Regular representation as a permutation: regular(g) e_h = e_{perm[h]}.
  std::span<const std::size_t> regular_permutation(Element g) const;

 private:
  void check(Element g) const;

  GroupKind kind_;
  std::size_t rotations_;
  std::size_t order_;
  std::vector<Element> table_;
  std::vector<Element> inverse_;
  std::vector<Matrix> trivial_;
  std::vector<Matrix> standard_;
  std::vector<Matrix> regular_;
  std::vector<std::size_t> regular_perm_;
};

using GroupPtr = std::shared_ptr<const FiniteGroup>;

GroupPtr make_cyclic_group(std::size_t n);
GroupPtr make_dihedral_group(std::size_t n);
/// Parses "cN" or "dN" (case-insensitive).
GroupPtr parse_group(std::string_view name);

/// A homomorphism from a finite group into orthogonal matrices.
class Representation {
 public:
  Representation(GroupPtr group, RepKind kind, std::vector<Matrix> matrices);

  const FiniteGroup& group() const noexcept { return *group_; }
  const GroupPtr& group_ptr() const noexcept { return group_; }
  RepKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  const Matrix& operator()(Element g) const { return matrices_.at(g); }

 private:
  GroupPtr group_;
  RepKind kind_;
  std::size_t dim_;
  std::vector<Matrix> matrices_;
};

/// Builds the trivial, standard or regular representation.
Representation make_representation(const GroupPtr& group, RepKind kind);

struct ReprBlock {
  RepKind kind;
  std::size_t multiplicity;

  bool operator==(const ReprBlock&) const = default;
};

/// Ordered direct sum of irreducible/regular blocks bound to a group; tells
/// group actions which coordinates to rotate, permute, or leave alone.
class ReprLayout {
 public:
  /// One copy of a representation inside the flattened vector.
  struct Field {
    RepKind kind;
    std::size_t offset;
    std::size_t dim;
  };

  ReprLayout(GroupPtr group, std::vector<ReprBlock> blocks);

  const GroupPtr& group() const noexcept { return group_; }
  const std::vector<ReprBlock>& blocks() const noexcept { return blocks_; }
  const std::vector<Field>& fields() const noexcept { return fields_; }
  std::size_t total_dim() const noexcept { return total_dim_; }

  std::size_t count(RepKind kind) const;
  bool contains(RepKind kind) const { return count(kind) > 0; }

  /// Direct sum `*this ⊕ other`; both must be over the same group.
  ReprLayout concat(const ReprLayout& other) const;
  /// Same blocks on another group (e.g. flatten to the trivial group for plain networks).
  ReprLayout rebind(GroupPtr group) const;

  Representation representation() const;
  std::string describe() const;

 private:
  GroupPtr group_;
  std::vector<ReprBlock> blocks_;
  std::vector<Field> fields_;
  std::size_t total_dim_ = 0;
};

/// Applies rho(g) block by block. Throws LayoutError on length mismatch.
Vector act_on_vector(const ReprLayout& layout, Element g, std::span<const double> v);
/// Applies rho(g) to every row of a batch (rows x total_dim).
RowMatrix act_on_rows(const ReprLayout& layout, Element g, const RowMatrix& rows);

/// Channel-major square image: values[c * size * size + row * size + col].
struct GridImage {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  GridImage() = default;
  GridImage(std::size_t channels, std::size_t height, std::size_t width);
  GridImage(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> values);

  double& at(std::size_t c, std::size_t row, std::size_t col) {
    return values[(c * height + row) * width + col];
  }
  double at(std::size_t c, std::size_t row, std::size_t col) const {
    return values[(c * height + row) * width + col];
  }
};

/// Exact quarter-turn image rotation: out(x, y) = in(rho1(g)^{-1} (x, y)).
///
/// Pixel coordinates are taken about the grid center with x to the right
/// (column) and y up (decreasing row), so g = 1 rotates content
/// counterclockwise. Only C_4 is supported.
GridImage rotate_grid_image(const FiniteGroup& group, Element g, const GridImage& img);

}  // namespace ecrl
