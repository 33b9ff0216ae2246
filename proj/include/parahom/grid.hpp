#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "parahom/coefficients.hpp"

namespace parahom {

/// Axis-aligned box; only the first d entries of lo/hi are meaningful.
struct Box {
  int d = 1;
  Point lo{0.0, 0.0};
  Point hi{1.0, 1.0};

  bool operator==(const Box&) const = default;
};

/// Uniform tensor grid on a box times a time interval. Periodic grids drop the
/// duplicated upper node on every space axis (used for the unit cell).
class SpaceTimeGrid {
 public:
  int d() const { return box_.d; }
  const Box& box() const { return box_; }
  double h(int axis) const { return h_[axis]; }
  int nodes(int axis) const { return n_[axis]; }
  int nspace() const { return n_[0] * n_[1]; }
  double tau() const { return tau_; }
  double t_start() const { return t_start_; }
  double t_end() const { return t_start_ + (levels_ - 1) * tau_; }
  int levels() const { return levels_; }
  bool periodic() const { return periodic_; }

  double coord(int axis, int i) const { return box_.lo[axis] + i * h_[axis]; }
  double time(int level) const { return t_start_ + level * tau_; }
  int node(int i0, int i1) const { return i1 * n_[0] + i0; }
  std::array<int, 2> index(int node) const { return {node % n_[0], node / n_[0]}; }
  Point point(int node) const {
    const auto [i0, i1] = index(node);
    return {coord(0, i0), d() == 2 ? coord(1, i1) : 0.0};
  }
  bool on_boundary(int node) const;

  /// Same space grid, time axis restricted to levels first, first+stride, ..., first+(count-1)*stride.
  SpaceTimeGrid subsample(int first, int stride, int count) const;

  bool operator==(const SpaceTimeGrid&) const = default;

 private:
  friend SpaceTimeGrid build_grid(const Box&, Point, double, std::pair<double, double>, bool);

  Box box_;
  Point h_{1.0, 1.0};
  std::array<int, 2> n_{1, 1};
  double tau_ = 1.0;
  double t_start_ = 0.0;
  int levels_ = 1;
  bool periodic_ = false;
};

/// Throws DomainError naming the axis when an extent is not an integer multiple of its
/// spacing (relative tolerance 1e-12).
SpaceTimeGrid build_grid(const Box& box, Point h, double tau, std::pair<double, double> t_range,
                         bool periodic = false);
SpaceTimeGrid build_grid(const Box& box, double h, double tau, std::pair<double, double> t_range,
                         bool periodic = false);

/// Node values with storage index (level * nspace + node) * m + alpha.
class Field {
 public:
  Field() = default;
  Field(SpaceTimeGrid grid, int m, double fill = 0.0);

  const SpaceTimeGrid& grid() const { return grid_; }
  int m() const { return m_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int level, int node, int alpha) { return values_[offset(level, node, alpha)]; }
  double operator()(int level, int node, int alpha) const {
    return values_[offset(level, node, alpha)];
  }

  std::span<double> level(int l) { return {values_.data() + offset(l, 0, 0), stride()}; }
  std::span<const double> level(int l) const {
    return {values_.data() + offset(l, 0, 0), stride()};
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t stride() const { return std::size_t(grid_.nspace()) * m_; }
  std::size_t offset(int level, int node, int alpha) const {
    return (std::size_t(level) * grid_.nspace() + node) * m_ + alpha;
  }

  SpaceTimeGrid grid_;
  int m_ = 1;
  std::vector<double> values_;
};

enum class CylinderKind { interior, boundary, flat };

/// Q_r = B(x0,r) x (t0 - r^2, t0]; boundary kind is the same set intersected with the box;
/// flat kind is D_r = {|x' - x0'| < r, 0 < x_n - x0_n < height * r} x (t0 - r^2, t0] where
/// n is `normal_axis` (the last space axis when negative).
struct Cylinder {
  CylinderKind kind = CylinderKind::interior;
  Point center{0.0, 0.0};
  double t0 = 0.0;
  double r = 1.0;
  int normal_axis = -1;
  double height = 10.0;

  bool contains(int d, const Point& x, double t) const;
  Cylinder scaled(double factor) const;
};

/// A cylinder containing every node of the grid.
Cylinder enclosing_cylinder(const SpaceTimeGrid& grid);

struct NodeRef {
  int level;
  int node;
  bool operator==(const NodeRef&) const = default;
};

/// Nodes inside the cylinder, ordered by level then node index.
std::vector<NodeRef> cylinder_nodes(const SpaceTimeGrid& grid, const Cylinder& cyl);

/// Forward differences at half-points, per axis: values[axis] is laid out as
/// ((level * faces + face) * m + alpha), where faces enumerate half-points along `axis`
/// (wrapping around on periodic grids).
struct StaggeredGradient {
  SpaceTimeGrid grid;
  int m = 1;
  std::array<std::array<int, 2>, 2> shape{};
  std::array<std::vector<double>, 2> values;

  int faces(int axis) const { return shape[axis][0] * shape[axis][1]; }
  double operator()(int axis, int level, int i0, int i1, int alpha) const {
    const int face = i1 * shape[axis][0] + i0;
    return values[axis][(std::size_t(level) * faces(axis) + face) * m + alpha];
  }
};

StaggeredGradient discrete_gradient(const Field& field);

/// Staggered gradient averaged back to nodes (one-sided at box faces); component
/// axis * m + alpha.
Field nodal_gradient(const Field& field);

/// Arithmetic mean per component over cylinder_nodes. Throws DomainError when empty.
std::vector<double> region_mean(const Field& field, const Cylinder& cyl);

}  // namespace parahom
