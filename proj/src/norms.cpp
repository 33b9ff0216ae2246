#include "parahom/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "parahom/error.hpp"

namespace parahom {

namespace {

double magnitude(const Field& u, int level, int node) {
  double s = 0.0;
  for (int a = 0; a < u.m(); ++a) s += u(level, node, a) * u(level, node, a);
  return std::sqrt(s);
}

double distance(const Field& u, const NodeRef& p, const NodeRef& q) {
  if (u.m() == 1) return std::abs(u(p.level, p.node, 0) - u(q.level, q.node, 0));
  double s = 0.0;
  for (int a = 0; a < u.m(); ++a) {
    const double d = u(p.level, p.node, a) - u(q.level, q.node, a);
    s += d * d;
  }
  return std::sqrt(s);
}

double power(double base, double alpha) {
  if (alpha == 1.0) return base;
  if (alpha == 0.5) return std::sqrt(base);
  return std::pow(base, alpha);
}

struct PairKernel {
  const Field& u;
  double alpha;

  double operator()(const NodeRef& p, const NodeRef& q) const {
    const SpaceTimeGrid& g = u.grid();
    const Point x = g.point(p.node), y = g.point(q.node);
    double dx = 0.0;
    for (int a = 0; a < g.d(); ++a) dx += (x[a] - y[a]) * (x[a] - y[a]);
    const double base = std::sqrt(dx) + std::sqrt(std::abs(g.time(p.level) - g.time(q.level)));
    if (base == 0.0) return 0.0;
    return distance(u, p, q) / power(base, alpha);
  }
};

std::vector<NodeRef> nonempty_nodes(const Field& u, const Cylinder& region) {
  auto nodes = cylinder_nodes(u.grid(), region);
  if (nodes.empty()) throw DomainError("empty region");
  return nodes;
}

double cell_volume(const SpaceTimeGrid& g) {
  double v = g.tau();
  for (int a = 0; a < g.d(); ++a) v *= g.h(a);
  return v;
}

double space_volume(const SpaceTimeGrid& g) {
  double v = 1.0;
  for (int a = 0; a < g.d(); ++a) v *= g.h(a);
  return v;
}

double sum_squares(const Field& u, const std::vector<NodeRef>& nodes) {
  double s = 0.0;
  for (const auto& n : nodes)
    for (int a = 0; a < u.m(); ++a) s += u(n.level, n.node, a) * u(n.level, n.node, a);
  return s;
}

double ratio(double lhs, double rhs) {
  if (rhs > 0.0) return lhs / rhs;
  if (lhs == 0.0) return 0.0;
  throw CheckFailure("energy ratio has a vanishing right-hand side but a positive left-hand side");
}

void check_same_grid(const Field& u, const Field* other) {
  if (other && !(other->grid() == u.grid())) throw DomainError("data fields must share the solution grid");
}

}  // namespace

double lp_norm(const Field& u, const Cylinder& region, double p) {
  if (!(p >= 1.0)) throw DomainError("lp_norm needs p >= 1");
  const auto nodes = nonempty_nodes(u, region);
  if (std::isinf(p)) {
    double mx = 0.0;
    for (const auto& n : nodes) mx = std::max(mx, magnitude(u, n.level, n.node));
    return mx;
  }
  double s = 0.0;
  for (const auto& n : nodes) {
    const double v = magnitude(u, n.level, n.node);
    s += p == 2.0 ? v * v : std::pow(v, p);
  }
  s /= double(nodes.size());
  return p == 2.0 ? std::sqrt(s) : std::pow(s, 1.0 / p);
}

SeminormReport holder_seminorm(const Field& u, const Cylinder& region, double alpha,
                               const PairSampling& sampling) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("Holder exponent must lie in (0, 1]");
  const auto nodes = nonempty_nodes(u, region);
  SeminormReport rep;
  rep.name = "holder";
  rep.region = region;
  rep.exponent = alpha;
  const PairKernel kernel{u, alpha};
  const long n = long(nodes.size());
  if (n <= sampling.exhaustive_limit) {
    rep.mode = PairMode::exhaustive;
    for (long i = 0; i < n; ++i)
      for (long j = i + 1; j < n; ++j) rep.value = std::max(rep.value, kernel(nodes[i], nodes[j]));
    rep.pairs = n * (n - 1) / 2;
  } else {
    rep.mode = PairMode::sampled;
    rep.seed = sampling.seed;
    std::mt19937_64 rng(sampling.seed);
    for (long k = 0; k < sampling.samples; ++k) {
      const auto i = std::size_t(rng() % std::uint64_t(n));
      const auto j = std::size_t(rng() % std::uint64_t(n));
      if (i != j) rep.value = std::max(rep.value, kernel(nodes[i], nodes[j]));
    }
    rep.pairs = sampling.samples;
  }
  return rep;
}

double campanato_seminorm(const Field& u, const Cylinder& region, double alpha,
                          const std::vector<double>& rho_set, int max_centers) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("Campanato exponent must lie in (0, 1]");
  for (double rho : rho_set) {
    if (!(rho > 0.0 && rho < region.r / 2)) throw DomainError("rho must lie in (0, r/2)");
  }
  const SpaceTimeGrid& g = u.grid();
  const auto nodes = nonempty_nodes(u, region);
  std::vector<char> mask(std::size_t(g.levels()) * g.nspace(), 0);
  for (const auto& n : nodes) mask[std::size_t(n.level) * g.nspace() + n.node] = 1;

  const std::size_t stride = std::max<std::size_t>(1, (nodes.size() + max_centers - 1) / max_centers);
  const int d = g.d();
  const int m = u.m();
  double best = 0.0;
  std::vector<double> mean(m), sq(m);
  for (std::size_t c = 0; c < nodes.size(); c += stride) {
    const NodeRef center = nodes[c];
    const Point xc = g.point(center.node);
    const double tc = g.time(center.level);
    for (double rho : rho_set) {
      Cylinder q;
      q.center = xc;
      q.t0 = tc;
      q.r = rho;
      std::array<int, 2> lo{0, 0}, hi{0, 0};
      for (int a = 0; a < d; ++a) {
        lo[a] = std::max(0, int(std::floor((xc[a] - rho - g.box().lo[a]) / g.h(a))));
        hi[a] = std::min(g.nodes(a) - 1, int(std::ceil((xc[a] + rho - g.box().lo[a]) / g.h(a))));
      }
      const int lmin = std::max(0, int(std::floor((tc - rho * rho - g.t_start()) / g.tau())));
      std::fill(mean.begin(), mean.end(), 0.0);
      std::fill(sq.begin(), sq.end(), 0.0);
      long count = 0;
      for (int level = lmin; level <= center.level; ++level) {
        const double t = g.time(level);
        for (int i1 = lo[1]; i1 <= hi[1]; ++i1) {
          for (int i0 = lo[0]; i0 <= hi[0]; ++i0) {
            const int node = g.node(i0, i1);
            if (!mask[std::size_t(level) * g.nspace() + node]) continue;
            if (!q.contains(d, g.point(node), t)) continue;
            for (int a = 0; a < m; ++a) {
              // Shifted by the center value for a stable variance.
              const double v = u(level, node, a) - u(center.level, center.node, a);
              mean[a] += v;
              sq[a] += v * v;
            }
            ++count;
          }
        }
      }
      if (count < 2) continue;
      double var = 0.0;
      for (int a = 0; a < m; ++a) {
        const double mu = mean[a] / count;
        var += std::max(0.0, sq[a] / count - mu * mu);
      }
      best = std::max(best, std::sqrt(var) / power(rho, alpha));
    }
  }
  return best;
}

C1Components parabolic_c1_components(const Field& u, const Cylinder& region,
                                     const PairSampling& sampling) {
  const SpaceTimeGrid& g = u.grid();
  const auto nodes = nonempty_nodes(u, region);
  C1Components c;
  const Field grad = nodal_gradient(u);
  for (const auto& n : nodes) c.gradient = std::max(c.gradient, magnitude(grad, n.level, n.node));
  c.lipschitz = holder_seminorm(u, region, 1.0, sampling).value;

  std::vector<std::vector<int>> levels_at(g.nspace());
  for (const auto& n : nodes) levels_at[n.node].push_back(n.level);
  for (int node = 0; node < g.nspace(); ++node) {
    const auto& ls = levels_at[node];
    for (std::size_t i = 0; i < ls.size(); ++i) {
      for (std::size_t j = i + 1; j < ls.size(); ++j) {
        const NodeRef p{ls[i], node}, q{ls[j], node};
        const double dt = std::sqrt(std::abs(g.time(ls[i]) - g.time(ls[j])));
        c.time_half = std::max(c.time_half, distance(u, p, q) / dt);
      }
    }
  }
  return c;
}

double parabolic_c1_norm(const Field& u, const Cylinder& region, const PairSampling& sampling) {
  return parabolic_c1_components(u, region, sampling).total();
}

double caccioppoli_ratio(const Field& u, const Field* f, const Field* F, const Cylinder& q,
                         const Cylinder& q2) {
  check_same_grid(u, f);
  check_same_grid(u, F);
  const SpaceTimeGrid& g = u.grid();
  const auto inner = nonempty_nodes(u, q);
  const auto outer = nonempty_nodes(u, q2);
  const double dv = cell_volume(g);
  const double r = q.r;

  double sup_slice = 0.0;
  for (std::size_t k = 0; k < inner.size();) {
    const int level = inner[k].level;
    double s = 0.0;
    for (; k < inner.size() && inner[k].level == level; ++k)
      for (int a = 0; a < u.m(); ++a) s += u(level, inner[k].node, a) * u(level, inner[k].node, a);
    sup_slice = std::max(sup_slice, s * space_volume(g));
  }
  const Field grad = nodal_gradient(u);
  const double lhs = sup_slice + sum_squares(grad, inner) * dv;
  double rhs = sum_squares(u, outer) * dv / (r * r);
  if (f) rhs += sum_squares(*f, outer) * dv;
  if (F) rhs += r * r * sum_squares(*F, outer) * dv;
  return ratio(lhs, rhs);
}

double poincare_ratio(const Field& u, const Field* f, const Cylinder& q, const Cylinder& q2) {
  check_same_grid(u, f);
  const auto inner = nonempty_nodes(u, q);
  const auto outer = nonempty_nodes(u, q2);
  const double dv = cell_volume(u.grid());
  const auto mean = region_mean(u, q);
  double lhs = 0.0;
  for (const auto& n : inner) {
    for (int a = 0; a < u.m(); ++a) {
      const double d = u(n.level, n.node, a) - mean[a];
      lhs += d * d;
    }
  }
  lhs *= dv;
  const Field grad = nodal_gradient(u);
  double rhs = sum_squares(grad, outer);
  if (f) rhs += sum_squares(*f, outer);
  rhs *= q.r * q.r * dv;
  return ratio(lhs, rhs);
}

}  // namespace parahom
