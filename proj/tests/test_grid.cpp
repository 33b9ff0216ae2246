#include <doctest.h>

#include "approx.hpp"

#include <random>

#include "parahom/error.hpp"
#include "parahom/grid.hpp"

using namespace parahom;

namespace {

Field sample(const SpaceTimeGrid& g, double (*fn)(double, double, double)) {
  Field u(g, 1);
  for (int l = 0; l < g.levels(); ++l) {
    for (int node = 0; node < g.nspace(); ++node) {
      const Point x = g.point(node);
      u(l, node, 0) = fn(x[0], x[1], g.time(l));
    }
  }
  return u;
}

}  // namespace

TEST_CASE("build_grid counts and exact coordinates") {
  const auto g = build_grid(Box{}, 0.25, 1.0 / 16, {0.0, 1.0});
  CHECK(g.nspace() == 5);
  CHECK(g.levels() == 17);
  for (int i = 0; i < 5; ++i) CHECK(g.coord(0, i) == i * 0.25);
  CHECK(g.time(16) == 1.0);

  const auto g2 = build_grid(Box{2, {0, 0}, {1, 1}}, 0.125, 0.5, {0.0, 1.0});
  CHECK(g2.nspace() == 81);

  try {
    build_grid(Box{}, 0.3, 0.1, {0.0, 1.0});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("axis 0") != std::string::npos);
  }
  CHECK_THROWS_AS(build_grid(Box{}, 0.25, 0.3, {0.0, 1.0}), DomainError);

  const auto cell = build_grid(Box{}, 1.0 / 8, 1.0 / 8, {0.0, 1.0}, true);
  CHECK(cell.nspace() == 8);
  CHECK_FALSE(cell.on_boundary(0));
}

TEST_CASE("cylinder_nodes") {
  const auto g = build_grid(Box{}, 0.25, 1.0 / 16, {0.0, 1.0});
  Cylinder all;
  all.center = {0.5, 0};
  all.t0 = 1.0;
  all.r = 2.0;
  // r^2 = 4 reaches below the start time.
  CHECK(cylinder_nodes(g, all).size() == 5 * 17);

  Cylinder q;
  q.center = {0.5, 0};
  q.t0 = 1.0;
  q.r = 0.25;
  std::vector<NodeRef> oracle;
  for (int l = 0; l < g.levels(); ++l) {
    for (int i = 0; i < g.nspace(); ++i) {
      const double x = g.coord(0, i), t = g.time(l);
      if (std::abs(x - 0.5) < 0.25 && t > 15.0 / 16 && t <= 1.0) oracle.push_back({l, i});
    }
  }
  CHECK(cylinder_nodes(g, q) == oracle);
  CHECK(oracle.size() == 1);

  Cylinder b;
  b.kind = CylinderKind::boundary;
  b.center = {0.0, 0};
  b.t0 = 1.0;
  b.r = 0.6;
  for (const auto& n : cylinder_nodes(g, b)) {
    CHECK(g.coord(0, n.node) >= 0.0);
    CHECK(g.coord(0, n.node) < 0.6);
  }

  Cylinder flat;
  flat.kind = CylinderKind::flat;
  flat.center = {0.0, 0};
  flat.t0 = 1.0;
  flat.r = 0.05;
  for (const auto& n : cylinder_nodes(g, flat)) {
    CHECK(g.coord(0, n.node) > 0.0);
    CHECK(g.coord(0, n.node) < 0.5);
  }
  CHECK_FALSE(cylinder_nodes(g, flat).empty());

  Cylinder far;
  far.center = {5.0, 0};
  far.t0 = 1.0;
  far.r = 0.1;
  CHECK(cylinder_nodes(g, far).empty());
}

TEST_CASE("cylinder_nodes monotone in r") {
  const auto g = build_grid(Box{2, {0, 0}, {1, 1}}, 1.0 / 16, 1.0 / 64, {0.0, 0.5});
  Cylinder q;
  q.center = {0.4, 0.55};
  q.t0 = 0.4;
  std::vector<NodeRef> prev;
  for (double r : {0.05, 0.1, 0.17, 0.3, 0.5}) {
    q.r = r;
    const auto cur = cylinder_nodes(g, q);
    for (const auto& n : prev) CHECK(std::find(cur.begin(), cur.end(), n) != cur.end());
    prev = cur;
  }
}

TEST_CASE("discrete_gradient") {
  const auto g = build_grid(Box{}, 0.25, 0.5, {0.0, 1.0});
  const auto zero = discrete_gradient(sample(g, [](double, double, double) { return 3.0; }));
  for (double v : zero.values[0]) CHECK(v == 0.0);
  const auto lin = discrete_gradient(sample(g, [](double x, double, double) { return x; }));
  for (double v : lin.values[0]) CHECK(v == 1.0);
  const auto quad = discrete_gradient(sample(g, [](double x, double, double) { return x * x; }));
  CHECK(quad(0, 0, 0, 0, 0) == 0.25);

  const auto g2 = build_grid(Box{2, {0, 0}, {1, 1}}, 0.125, 0.5, {0.0, 1.0});
  auto u = sample(g2, [](double x, double y, double t) { return std::sin(3 * x) * y + t; });
  auto v = sample(g2, [](double x, double y, double) { return x * x - y; });
  Field w(g2, 1);
  for (std::size_t k = 0; k < w.size(); ++k) w.values()[k] = 2.0 * u.values()[k] - 0.5 * v.values()[k];
  const auto gu = discrete_gradient(u), gv = discrete_gradient(v), gw = discrete_gradient(w);
  for (int a = 0; a < 2; ++a) {
    for (std::size_t k = 0; k < gw.values[a].size(); ++k) {
      CHECK(gw.values[a][k] == approx(2.0 * gu.values[a][k] - 0.5 * gv.values[a][k]));
    }
  }
  const auto ng = nodal_gradient(sample(g2, [](double x, double y, double) { return 2 * x - y; }));
  for (std::size_t k = 0; k < ng.size(); k += 2) {
    CHECK(ng.values()[k] == approx(2.0));
    CHECK(ng.values()[k + 1] == approx(-1.0));
  }
}

TEST_CASE("region_mean") {
  const auto g = build_grid(Box{}, 1.0 / 64, 0.25, {0.0, 1.0});
  const Cylinder all = enclosing_cylinder(g);
  CHECK(region_mean(sample(g, [](double, double, double) { return 4.0; }), all)[0] == 4.0);
  const double mean = region_mean(sample(g, [](double x, double, double) { return x; }), all)[0];
  CHECK(std::abs(mean - 0.5) <= g.h(0) / 2);

  const auto sym = build_grid(Box{1, {-1, 0}, {1, 0}}, 1.0 / 32, 0.25, {0.0, 1.0});
  Cylinder c;
  c.center = {0, 0};
  c.t0 = 1.0;
  c.r = 0.5;
  CHECK(std::abs(region_mean(sample(sym, [](double x, double, double t) { return x * x * x * t; }), c)[0]) < 1e-15);

  Cylinder far;
  far.center = {9, 0};
  far.r = 0.1;
  CHECK_THROWS_AS(region_mean(sample(g, [](double, double, double) { return 1.0; }), far), DomainError);

  // Translation covariance: same field shape on a shifted box and cylinder.
  const auto shifted = build_grid(Box{1, {0.5, 0}, {1.5, 0}}, 1.0 / 64, 0.25, {0.0, 1.0});
  Field a(g, 1), b(shifted, 1);
  for (int l = 0; l < g.levels(); ++l)
    for (int i = 0; i < g.nspace(); ++i) a(l, i, 0) = b(l, i, 0) = std::cos(7.0 * i / 64) * l;
  Cylinder ca;
  ca.center = {0.25, 0};
  ca.t0 = 1.0;
  ca.r = 0.2;
  Cylinder cb = ca;
  cb.center = {0.75, 0};
  CHECK(region_mean(a, ca)[0] == approx(region_mean(b, cb)[0]).epsilon(1e-14));
}
