#include "ecrl/group.hpp"

#include "ecrl/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ecrl {

namespace {

// cos/sin of 2*pi*k/n, exact at multiples of a quarter turn.
std::pair<double, double> unit_angle(std::size_t k, std::size_t n) {
  k %= n;
  if ((4 * k) % n == 0) {
    switch ((4 * k) / n) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
  return {std::cos(theta), std::sin(theta)};
}

Matrix rotation_matrix(std::size_t k, std::size_t n) {
  const auto [c, s] = unit_angle(k, n);
  Matrix m(2, 2);
  m << c, -s, s, c;
  return m;
}

}  // namespace

std::string to_string(RepKind kind) {
  switch (kind) {
    case RepKind::trivial: return "trivial";
    case RepKind::standard: return "standard";
    case RepKind::regular: return "regular";
    case RepKind::direct_sum: return "direct-sum";
  }
  return "?";
}

FiniteGroup::FiniteGroup(GroupKind kind, std::size_t rotations)
    : kind_(kind), rotations_(rotations) {
  if (rotations == 0) throw InvalidOrderError("group order must be at least 1");
  const std::size_t n = rotations;
  order_ = kind == GroupKind::cyclic ? n : 2 * n;

  // r^a r^b = r^{a+b};  r^a (r^b f) = r^{a+b} f;  (r^a f) r^b = r^{a-b} f;
  // (r^a f)(r^b f) = r^{a-b}.
  table_.resize(order_ * order_);
  for (Element a = 0; a < order_; ++a) {
    for (Element b = 0; b < order_; ++b) {
      const std::size_t ra = a % n, rb = b % n;
      const bool fa = a >= n, fb = b >= n;
      const std::size_t rot = fa ? (ra + n - rb) % n : (ra + rb) % n;
      table_[a * order_ + b] = (fa != fb) ? n + rot : rot;
    }
  }
  inverse_.resize(order_);
  for (Element a = 0; a < order_; ++a) {
    for (Element b = 0; b < order_; ++b) {
      if (table_[a * order_ + b] == identity()) {
        inverse_[a] = b;
        break;
      }
    }
  }

  Matrix flip(2, 2);
  flip << 1, 0, 0, -1;
  trivial_.assign(order_, Matrix::Identity(1, 1));
  standard_.reserve(order_);
  regular_.reserve(order_);
  regular_perm_.resize(order_ * order_);
  for (Element g = 0; g < order_; ++g) {
    Matrix rot = rotation_matrix(g % n, n);
    standard_.push_back(g >= n ? Matrix(rot * flip) : rot);
    Matrix perm = Matrix::Zero(order_, order_);
    for (Element h = 0; h < order_; ++h) {
      const Element gh = table_[g * order_ + h];
      regular_perm_[g * order_ + h] = gh;
      perm(gh, h) = 1.0;
    }
    regular_.push_back(std::move(perm));
  }
}

void FiniteGroup::check(Element g) const {
  if (g >= order_) {
    throw ContractError("group element " + std::to_string(g) + " out of range for " + name());
  }
}

Element FiniteGroup::compose(Element a, Element b) const {
  check(a);
  check(b);
  return table_[a * order_ + b];
}

Element FiniteGroup::inverse(Element g) const {
  check(g);
  return inverse_[g];
}

std::string FiniteGroup::name() const {
  return (kind_ == GroupKind::cyclic ? "c" : "d") + std::to_string(rotations_);
}

std::size_t FiniteGroup::dim(RepKind kind) const {
  switch (kind) {
    case RepKind::trivial: return 1;
    case RepKind::standard: return 2;
    case RepKind::regular: return order_;
    case RepKind::direct_sum: break;
  }
  throw UnsupportedRepresentationError("direct-sum representations have no fixed dimension");
}

const Matrix& FiniteGroup::matrix(RepKind kind, Element g) const {
  check(g);
  switch (kind) {
    case RepKind::trivial: return trivial_[g];
    case RepKind::standard: return standard_[g];
    case RepKind::regular: return regular_[g];
    case RepKind::direct_sum: break;
  }
  throw UnsupportedRepresentationError("direct-sum matrices must be built from a ReprLayout");
}

std::span<const std::size_t> FiniteGroup::regular_permutation(Element g) const {
  check(g);
  return {regular_perm_.data() + g * order_, order_};
}

GroupPtr make_cyclic_group(std::size_t n) {
  return std::make_shared<const FiniteGroup>(GroupKind::cyclic, n);
}

GroupPtr make_dihedral_group(std::size_t n) {
  return std::make_shared<const FiniteGroup>(GroupKind::dihedral, n);
}

GroupPtr parse_group(std::string_view name) {
  if (name.size() < 2) throw ConfigError("invalid group name '" + std::string(name) + "'");
  const char kind = static_cast<char>(std::tolower(static_cast<unsigned char>(name.front())));
  std::size_t n = 0;
  const auto* first = name.data() + 1;
  const auto* last = name.data() + name.size();
  const auto [ptr, ec] = std::from_chars(first, last, n);
  if (ec != std::errc{} || ptr != last) {
    throw ConfigError("invalid group name '" + std::string(name) + "'");
  }
  if (kind == 'c') return make_cyclic_group(n);
  if (kind == 'd') return make_dihedral_group(n);
  throw ConfigError("invalid group name '" + std::string(name) + "' (expected cN or dN)");
}

Representation::Representation(GroupPtr group, RepKind kind, std::vector<Matrix> matrices)
    : group_(std::move(group)), kind_(kind), matrices_(std::move(matrices)) {
  if (!group_) throw ContractError("representation requires a group");
  if (matrices_.size() != group_->order()) {
    throw ConstructionError("representation needs one matrix per group element");
  }
  dim_ = static_cast<std::size_t>(matrices_.front().rows());
}

Representation make_representation(const GroupPtr& group, RepKind kind) {
  if (kind == RepKind::direct_sum) {
    throw UnsupportedRepresentationError(
        "direct-sum representations are built with ReprLayout::representation()");
  }
  std::vector<Matrix> mats;
  mats.reserve(group->order());
  for (Element g = 0; g < group->order(); ++g) mats.push_back(group->matrix(kind, g));
  return Representation(group, kind, std::move(mats));
}

ReprLayout::ReprLayout(GroupPtr group, std::vector<ReprBlock> blocks)
    : group_(std::move(group)), blocks_(std::move(blocks)) {
  if (!group_) throw LayoutError("layout requires a group");
  for (const auto& block : blocks_) {
    if (block.kind == RepKind::direct_sum) throw LayoutError("layout blocks must be trivial, standard or regular");
    const std::size_t d = group_->dim(block.kind);
    for (std::size_t m = 0; m < block.multiplicity; ++m) {
      fields_.push_back({block.kind, total_dim_, d});
      total_dim_ += d;
    }
  }
}

std::size_t ReprLayout::count(RepKind kind) const {
  std::size_t c = 0;
  for (const auto& block : blocks_) {
    if (block.kind == kind) c += block.multiplicity;
  }
  return c;
}

ReprLayout ReprLayout::concat(const ReprLayout& other) const {
  if (group_ != other.group_ && group_->name() != other.group_->name()) {
    throw LayoutError("cannot concatenate layouts over different groups");
  }
  auto blocks = blocks_;
  for (const auto& block : other.blocks_) {
    if (!blocks.empty() && blocks.back().kind == block.kind) {
      blocks.back().multiplicity += block.multiplicity;
    } else {
      blocks.push_back(block);
    }
  }
  return ReprLayout(group_, std::move(blocks));
}

ReprLayout ReprLayout::rebind(GroupPtr group) const {
  return ReprLayout(std::move(group), blocks_);
}

Representation ReprLayout::representation() const {
  std::vector<Matrix> mats;
  mats.reserve(group_->order());
  for (Element g = 0; g < group_->order(); ++g) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(total_dim_), static_cast<Eigen::Index>(total_dim_));
    for (const auto& f : fields_) {
      const auto off = static_cast<Eigen::Index>(f.offset);
      const auto d = static_cast<Eigen::Index>(f.dim);
      m.block(off, off, d, d) = group_->matrix(f.kind, g);
    }
    mats.push_back(std::move(m));
  }
  return Representation(group_, RepKind::direct_sum, std::move(mats));
}

std::string ReprLayout::describe() const {
  std::ostringstream os;
  os << group_->name() << "[";
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (i) os << ", ";
    os << to_string(blocks_[i].kind) << "x" << blocks_[i].multiplicity;
  }
  os << "]";
  return os.str();
}

Vector act_on_vector(const ReprLayout& layout, Element g, std::span<const double> v) {
  if (v.size() != layout.total_dim()) {
    throw LayoutError("vector of length " + std::to_string(v.size()) + " does not match layout " +
                      layout.describe() + " of dimension " + std::to_string(layout.total_dim()));
  }
  RowMatrix row = Eigen::Map<const RowMatrix>(v.data(), 1, static_cast<Eigen::Index>(v.size()));
  RowMatrix out = act_on_rows(layout, g, row);
  return out.row(0).transpose();
}

RowMatrix act_on_rows(const ReprLayout& layout, Element g, const RowMatrix& rows) {
  if (static_cast<std::size_t>(rows.cols()) != layout.total_dim()) {
    throw LayoutError("batch width " + std::to_string(rows.cols()) + " does not match layout " +
                      layout.describe());
  }
  const FiniteGroup& group = *layout.group();
  RowMatrix out(rows.rows(), rows.cols());
  for (const auto& f : layout.fields()) {
    const auto off = static_cast<Eigen::Index>(f.offset);
    switch (f.kind) {
      case RepKind::trivial:
        out.col(off) = rows.col(off);
        break;
      case RepKind::standard: {
        const Matrix& r = group.matrix(RepKind::standard, g);
        out.middleCols(off, 2) = rows.middleCols(off, 2) * r.transpose();
        break;
      }
      case RepKind::regular: {
        const auto perm = group.regular_permutation(g);
        for (std::size_t h = 0; h < f.dim; ++h) {
          out.col(off + static_cast<Eigen::Index>(perm[h])) = rows.col(off + static_cast<Eigen::Index>(h));
        }
        break;
      }
      case RepKind::direct_sum:
        throw LayoutError("nested direct sums are not supported");
    }
  }
  return out;
}

GridImage::GridImage(std::size_t channels, std::size_t height, std::size_t width)
    : GridImage(channels, height, width, std::vector<double>(channels * height * width, 0.0)) {}

GridImage::GridImage(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> values)
    : channels(channels), height(height), width(width), values(std::move(values)) {
  if (this->values.size() != channels * height * width) {
    throw ShapeError("image buffer size does not match channels x height x width");
  }
}

GridImage rotate_grid_image(const FiniteGroup& group, Element g, const GridImage& img) {
  if (group.kind() != GroupKind::cyclic || group.order() != 4) {
    throw UnsupportedRotationError("exact image rotation is only defined for c4, got " + group.name());
  }
  if (img.height != img.width) throw ShapeError("image rotation requires a square image");
  const Matrix& rot = group.matrix(RepKind::standard, group.inverse(g));
  const auto n = static_cast<long>(img.width);
  GridImage out(img.channels, img.height, img.width);
  // Doubled coordinates keep the center on the integer lattice: X = 2col - (n-1), Y = (n-1) - 2row.
  const auto ri = [&](int r, int c) { return static_cast<long>(std::lround(rot(r, c))); };
  for (long row = 0; row < n; ++row) {
    for (long col = 0; col < n; ++col) {
      const long x = 2 * col - (n - 1);
      const long y = (n - 1) - 2 * row;
      const long sx = ri(0, 0) * x + ri(0, 1) * y;
      const long sy = ri(1, 0) * x + ri(1, 1) * y;
      const auto src_col = static_cast<std::size_t>((sx + (n - 1)) / 2);
      const auto src_row = static_cast<std::size_t>(((n - 1) - sy) / 2);
      for (std::size_t c = 0; c < img.channels; ++c) {
        out.at(c, static_cast<std::size_t>(row), static_cast<std::size_t>(col)) = img.at(c, src_row, src_col);
      }
    }
  }
  return out;
}

}  // namespace ecrl
