#include "parahom/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parahom/error.hpp"

namespace parahom {

namespace {

int commensurate_count(double extent, double spacing, const std::string& axis) {
  if (!(spacing > 0.0) || !(extent > 0.0)) {
    throw DomainError(axis + ": spacing and extent must be positive");
  }
  const double ratio = extent / spacing;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-12 * ratio || rounded < 1.0) {
    throw DomainError(axis + ": extent " + std::to_string(extent) +
                      " is not an integer multiple of spacing " + std::to_string(spacing));
  }
  return int(rounded);
}

}  // namespace

bool SpaceTimeGrid::on_boundary(int node) const {
  if (periodic_) return false;
  const auto [i0, i1] = index(node);
  if (i0 == 0 || i0 == n_[0] - 1) return true;
  return d() == 2 && (i1 == 0 || i1 == n_[1] - 1);
}

SpaceTimeGrid SpaceTimeGrid::subsample(int first, int stride, int count) const {
  if (first < 0 || stride < 1 || count < 1 || first + (count - 1) * stride >= levels_) {
    throw DomainError("subsample: level range outside the grid");
  }
  SpaceTimeGrid g = *this;
  g.t_start_ = time(first);
  g.tau_ = tau_ * stride;
  g.levels_ = count;
  return g;
}

SpaceTimeGrid build_grid(const Box& box, Point h, double tau, std::pair<double, double> t_range,
                         bool periodic) {
  if (box.d != 1 && box.d != 2) throw DomainError("grid dimension must be 1 or 2");
  SpaceTimeGrid g;
  g.box_ = box;
  g.periodic_ = periodic;
  for (int a = 0; a < box.d; ++a) {
    const std::string name = "axis " + std::to_string(a);
    const int cells = commensurate_count(box.hi[a] - box.lo[a], h[a], name);
    g.h_[a] = h[a];
    g.n_[a] = periodic ? cells : cells + 1;
  }
  if (box.d == 1) {
    g.box_.lo[1] = 0.0;
    g.box_.hi[1] = 0.0;
    g.h_[1] = 1.0;
    g.n_[1] = 1;
  }
  g.tau_ = tau;
  g.t_start_ = t_range.first;
  g.levels_ = commensurate_count(t_range.second - t_range.first, tau, "time") + 1;
  return g;
}

SpaceTimeGrid build_grid(const Box& box, double h, double tau, std::pair<double, double> t_range,
                         bool periodic) {
  return build_grid(box, Point{h, h}, tau, t_range, periodic);
}

Field::Field(SpaceTimeGrid grid, int m, double fill)
    : grid_(std::move(grid)), m_(m), values_(std::size_t(grid_.levels()) * grid_.nspace() * m, fill) {
  if (m < 1) throw DomainError("field needs at least one component");
}

bool Cylinder::contains(int d, const Point& x, double t) const {
  const double rr = r * r;
  const double t_tol = 1e-12 * (1.0 + std::abs(t0));
  if (!(t > t0 - rr + t_tol + 1e-10 * rr && t <= t0 + t_tol)) return false;
  const double shrink = 1.0 - 1e-10;
  if (kind == CylinderKind::flat) {
    const int n = normal_axis < 0 ? d - 1 : normal_axis;
    double tangential = 0.0;
    for (int a = 0; a < d; ++a) {
      if (a == n) continue;
      tangential += (x[a] - center[a]) * (x[a] - center[a]);
    }
    if (d > 1 && !(tangential < rr * shrink)) return false;
    const double height_above = x[n] - center[n];
    return height_above > 1e-10 * r && height_above < height * r * shrink;
  }
  double dist = 0.0;
  for (int a = 0; a < d; ++a) dist += (x[a] - center[a]) * (x[a] - center[a]);
  return dist < rr * shrink;
}

Cylinder Cylinder::scaled(double factor) const {
  Cylinder c = *this;
  c.r *= factor;
  return c;
}

Cylinder enclosing_cylinder(const SpaceTimeGrid& grid) {
  Cylinder c;
  c.kind = CylinderKind::boundary;
  double diam = 0.0;
  for (int a = 0; a < grid.d(); ++a) {
    c.center[a] = 0.5 * (grid.box().lo[a] + grid.box().hi[a]);
    diam += std::pow(grid.box().hi[a] - grid.box().lo[a], 2);
  }
  c.t0 = grid.t_end();
  c.r = 1.0 + std::max(std::sqrt(diam), std::sqrt(grid.t_end() - grid.t_start()));
  return c;
}

std::vector<NodeRef> cylinder_nodes(const SpaceTimeGrid& grid, const Cylinder& cyl) {
  std::vector<NodeRef> out;
  const int d = grid.d();
  std::vector<int> space;
  for (int node = 0; node < grid.nspace(); ++node) {
    // Space membership is tested at t0 so that the time window does not interfere.
    if (cyl.contains(d, grid.point(node), cyl.t0)) space.push_back(node);
  }
  if (space.empty()) return out;
  for (int level = 0; level < grid.levels(); ++level) {
    const double t = grid.time(level);
    if (!cyl.contains(d, grid.point(space.front()), t)) continue;
    for (int node : space) out.push_back({level, node});
  }
  return out;
}

StaggeredGradient discrete_gradient(const Field& field) {
  const SpaceTimeGrid& g = field.grid();
  StaggeredGradient grad;
  grad.grid = g;
  grad.m = field.m();
  const int m = field.m();
  for (int a = 0; a < g.d(); ++a) {
    const bool per = g.periodic();
    if (!per && g.nodes(a) < 2) throw DomainError("gradient needs at least two nodes per axis");
    std::array<int, 2> shape{g.nodes(0), g.nodes(1)};
    if (!per) shape[a] -= 1;
    grad.shape[a] = shape;
    const int faces = shape[0] * shape[1];
    auto& vals = grad.values[a];
    vals.resize(std::size_t(g.levels()) * faces * m);
    const double inv_h = 1.0 / g.h(a);
    for (int level = 0; level < g.levels(); ++level) {
      for (int i1 = 0; i1 < shape[1]; ++i1) {
        for (int i0 = 0; i0 < shape[0]; ++i0) {
          std::array<int, 2> nb{i0, i1};
          nb[a] = (nb[a] + 1) % g.nodes(a);
          const int lo = g.node(i0, i1);
          const int hi = g.node(nb[0], nb[1]);
          const int face = i1 * shape[0] + i0;
          for (int alpha = 0; alpha < m; ++alpha) {
            vals[(std::size_t(level) * faces + face) * m + alpha] =
                (field(level, hi, alpha) - field(level, lo, alpha)) * inv_h;
          }
        }
      }
    }
  }
  return grad;
}

Field nodal_gradient(const Field& field) {
  const SpaceTimeGrid& g = field.grid();
  const int m = field.m();
  const StaggeredGradient grad = discrete_gradient(field);
  Field out(g, g.d() * m);
  for (int level = 0; level < g.levels(); ++level) {
    for (int node = 0; node < g.nspace(); ++node) {
      const auto [i0, i1] = g.index(node);
      for (int a = 0; a < g.d(); ++a) {
        const int i = a == 0 ? i0 : i1;
        const int n = g.nodes(a);
        std::array<int, 2> prev{i0, i1};
        prev[a] = (i - 1 + n) % n;
        const bool has_prev = g.periodic() || i > 0;
        const bool has_next = g.periodic() || i < n - 1;
        for (int alpha = 0; alpha < m; ++alpha) {
          double sum = 0.0;
          int count = 0;
          if (has_next) {
            sum += grad(a, level, i0, i1, alpha);
            ++count;
          }
          if (has_prev) {
            sum += grad(a, level, prev[0], prev[1], alpha);
            ++count;
          }
          out(level, node, a * m + alpha) = sum / count;
        }
      }
    }
  }
  return out;
}

std::vector<double> region_mean(const Field& field, const Cylinder& cyl) {
  const auto nodes = cylinder_nodes(field.grid(), cyl);
  if (nodes.empty()) throw DomainError("region_mean: empty region");
  std::vector<double> mean(field.m(), 0.0);
  for (const auto& n : nodes) {
    for (int alpha = 0; alpha < field.m(); ++alpha) mean[alpha] += field(n.level, n.node, alpha);
  }
  for (double& v : mean) v /= double(nodes.size());
  return mean;
}

}  // namespace parahom
