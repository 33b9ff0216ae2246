#include "parahom/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "parahom/error.hpp"
#include "parahom/norms.hpp"

namespace parahom {

namespace {

constexpr double kPi = std::numbers::pi;

double frac(double x) { return x - std::floor(x); }

double wave(Wave w, double z) {
  const double arg = 2.0 * kPi * frac(z);
  return w == Wave::sine ? std::sin(arg) : std::cos(arg);
}

double normalized(const Box& box, const Point& x, int axis) {
  return (x[axis] - box.lo[axis]) / (box.hi[axis] - box.lo[axis]);
}

double safe_ratio(double lhs, double rhs) {
  if (rhs > 0.0) return lhs / rhs;
  return lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

std::string label(const std::string& base, double value) {
  std::ostringstream os;
  os << base << value;
  return os.str();
}

double bump(double s) {
  if (s < 0.25 || s > 0.75) return 0.0;
  const double v = std::sin(2.0 * kPi * (s - 0.25));
  return v * v;
}

ParabolicProblem make_problem(const SweepConfig& config, Coefficient coeff) {
  const Box box = config.box;
  const int d = box.d;
  ParabolicProblem p;
  p.coeff = std::move(coeff);
  switch (config.data.initial) {
    case InitialData::zero:
      break;
    case InitialData::sine:
      p.h0 = [box, d](const Point& x, double, int) {
        double v = 1.0;
        for (int a = 0; a < d; ++a) v *= std::sin(kPi * normalized(box, x, a));
        return v;
      };
      break;
    case InitialData::bump:
      p.h0 = [box, d](const Point& x, double, int) {
        double v = 1.0;
        for (int a = 0; a < d; ++a) v *= bump(normalized(box, x, a));
        return v;
      };
      break;
  }
  if (config.data.source != 0.0) {
    const double s = config.data.source;
    p.F = [s](const Point&, double, int) { return s; };
  }
  if (config.data.flux == FluxData::sine) {
    p.f = [box](const Point& x, double, int axis, int) {
      return std::sin(2.0 * kPi * normalized(box, x, axis));
    };
  }
  return p;
}

Tensor constant_tensor(const CoefficientField& field) { return field.evaluate({0.0, 0.0}, 0.0); }

Tensor effective_tensor(const SweepConfig& config, const CoefficientField& field) {
  if (field.is_constant()) return constant_tensor(field);
  return homogenized_tensor(solve_cell_problem(field, config.cell)).entries;
}

double space_cell(const SpaceTimeGrid& g) {
  double v = 1.0;
  for (int a = 0; a < g.d(); ++a) v *= g.h(a);
  return v;
}

int level_of(const SpaceTimeGrid& g, double t, const std::string& key) {
  const double x = (t - g.t_start()) / g.tau();
  const int n = int(std::lround(x));
  if (std::abs(x - n) > 1e-9 * std::max(1.0, std::abs(x)) || n < 0 || n >= g.levels()) {
    throw ConfigError(key, "time is not a level of the sweep grid");
  }
  return n;
}

/// Grid truncated at t_stop together with a solver config storing levels from t_from on
/// (aligned so the final level is stored) at the given stride.
struct Window {
  SpaceTimeGrid grid;
  SolverConfig solver;
};

Window window(const SweepConfig& config, double t_from, double t_stop, int stride) {
  const SpaceTimeGrid full = sweep_grid(config);
  const int last = level_of(full, t_stop, "geometry.t0");
  Window w;
  w.grid = build_grid(full.box(), {full.h(0), full.h(1)}, full.tau(), {full.t_start(), full.time(last)});
  const int span = int(std::ceil((t_stop - t_from) / (stride * full.tau()) - 1e-9));
  int first = last - span * stride;
  if (first < 0) first = last % stride;
  w.solver = config.solver;
  w.solver.store_stride = stride;
  w.solver.store_start = first > 0 ? w.grid.time(first) : -1e300;
  return w;
}

Field run(const SweepConfig& config, const CoefficientField& field, double eps, const Window& w) {
  return solve_ivp(make_problem(config, make_coefficient(field, eps)), w.grid, w.solver);
}

SweepRecord record(double eps, const SpaceTimeGrid& g, const std::string& metric, double lhs, double rhs) {
  return {eps, g.h(0), g.tau(), metric, lhs, rhs, safe_ratio(lhs, rhs)};
}

/// max/min per metric, verdict against ratio_max and the epsilon span.
void uniform_summary(SweepReport& rep, const SweepConfig& config) {
  SweepSummary& s = rep.summary;
  s.span = config.epsilons.front() / config.epsilons.back();
  std::map<std::string, std::pair<double, double>> range;
  s.min_ratio = std::numeric_limits<double>::infinity();
  s.max_ratio = 0.0;
  for (const auto& r : rep.records) {
    s.min_ratio = std::min(s.min_ratio, r.ratio);
    s.max_ratio = std::max(s.max_ratio, r.ratio);
    auto [it, fresh] = range.try_emplace(r.metric, r.ratio, r.ratio);
    if (!fresh) {
      it->second.first = std::min(it->second.first, r.ratio);
      it->second.second = std::max(it->second.second, r.ratio);
    }
  }
  if (rep.records.empty()) s.min_ratio = 0.0;
  s.spread = 1.0;
  for (const auto& [metric, mm] : range) {
    double spread = 1.0;
    if (mm.first > 0.0) spread = mm.second / mm.first;
    else if (mm.second > 0.0) spread = std::numeric_limits<double>::infinity();
    s.spread = std::max(s.spread, spread);
  }
  s.pass = std::isfinite(s.max_ratio) && s.spread <= config.thresholds.ratio_max;
  if (!s.pass) s.note = "ratio spread above threshold";
  if (s.span < config.thresholds.min_span * (1 - 1e-12)) {
    s.pass = false;
    s.note = "epsilon span below the required factor";
  }
}

void require_inside(const SweepConfig& config, const Cylinder& outer) {
  const Box& b = config.box;
  for (int a = 0; a < b.d; ++a) {
    if (outer.center[a] - outer.r < b.lo[a] - 1e-12 || outer.center[a] + outer.r > b.hi[a] + 1e-12) {
      throw ConfigError("geometry.r", "2Q must lie inside the box");
    }
  }
  if (outer.t0 - outer.r * outer.r < -1e-12 || outer.t0 > config.t_end + 1e-12) {
    throw ConfigError("geometry.t0", "2Q must lie inside the time interval");
  }
}

int lower_face_axis(const SweepConfig& config) {
  const Box& b = config.box;
  for (int a = b.d - 1; a >= 0; --a) {
    if (std::abs(config.geometry.center[a] - b.lo[a]) <= 1e-12) return a;
  }
  throw ConfigError("geometry.center", "boundary cylinder must be centered on a lower face of the box");
}

double source_sup(const SweepConfig& config, int m) {
  return std::abs(config.data.source) * std::sqrt(double(m));
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::interior_holder: return "interior_holder";
    case ExperimentKind::interior_lipschitz: return "interior_lipschitz";
    case ExperimentKind::interior_w1p: return "interior_w1p";
    case ExperimentKind::boundary_holder: return "boundary_holder";
    case ExperimentKind::boundary_w1p: return "boundary_w1p";
    case ExperimentKind::global_w1p: return "global_w1p";
    case ExperimentKind::fundamental: return "fundamental";
    case ExperimentKind::weak_limit: return "weak_limit";
  }
  return "?";
}

ExperimentKind experiment_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::convergence, ExperimentKind::interior_holder, ExperimentKind::interior_lipschitz,
                 ExperimentKind::interior_w1p, ExperimentKind::boundary_holder, ExperimentKind::boundary_w1p,
                 ExperimentKind::global_w1p, ExperimentKind::fundamental, ExperimentKind::weak_limit}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("sweep.kind", "unknown experiment kind '" + name + "'");
}

std::string to_string(InitialData v) {
  switch (v) {
    case InitialData::zero: return "zero";
    case InitialData::sine: return "sine";
    case InitialData::bump: return "bump";
  }
  return "?";
}

InitialData initial_from_string(const std::string& name) {
  if (name == "zero") return InitialData::zero;
  if (name == "sine") return InitialData::sine;
  if (name == "bump") return InitialData::bump;
  throw ConfigError("data.initial", "expected zero, sine or bump, got '" + name + "'");
}

std::string to_string(FluxData v) { return v == FluxData::none ? "none" : "sine"; }

FluxData flux_from_string(const std::string& name) {
  if (name == "none") return FluxData::none;
  if (name == "sine") return FluxData::sine;
  throw ConfigError("data.flux", "expected none or sine, got '" + name + "'");
}

double OscillatingFunction::operator()(const Point& y, double s, int d) const {
  double v = mean;
  for (const auto& mode : modes) {
    double z = mode.k[0] * y[0] + mode.l * s;
    if (d == 2) z += mode.k[1] * y[1];
    v += mode.amplitude * wave(mode.wave, z);
  }
  return v;
}

SweepConfig default_config(ExperimentKind kind) {
  SweepConfig c;
  c.kind = kind;
  c.t_end = 0.125;
  c.geometry.t0 = 0.125;
  c.epsilons = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  switch (kind) {
    case ExperimentKind::convergence:
      c.epsilons = {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32};
      break;
    case ExperimentKind::interior_holder:
    case ExperimentKind::interior_lipschitz:
    case ExperimentKind::interior_w1p:
      c.geometry.center = {0.5, 0.5};
      c.geometry.r = 0.125;
      break;
    case ExperimentKind::boundary_holder:
      c.data.initial = InitialData::bump;
      c.geometry.center = {0.0, 0.0};
      c.geometry.r = 0.1;
      break;
    case ExperimentKind::boundary_w1p:
      c.data.initial = InitialData::bump;
      c.geometry.center = {0.0, 0.0};
      c.geometry.r = 0.05;
      break;
    case ExperimentKind::global_w1p:
      c.data.initial = InitialData::zero;
      c.data.flux = FluxData::sine;
      break;
    case ExperimentKind::fundamental:
      c.epsilons = {1.0 / 2, 1.0 / 4, 1.0 / 8};
      c.box = Box{1, {-16.0, 0.0}, {16.0, 1.0}};
      c.t_end = 1.0;
      c.geometry.t0 = 1.0;
      c.data.initial = InitialData::zero;
      break;
    case ExperimentKind::weak_limit:
      c.epsilons = {1.0 / 2, 1.0 / 4, 1.0 / 8, 1.0 / 16};
      c.t_end = 1.0;
      c.geometry.t0 = 1.0;
      c.oscillation.modes = {FourierMode{0, 0, {1, 0}, 0, 1.0, Wave::sine}};
      break;
  }
  return c;
}

void validate(const SweepConfig& c) {
  if (c.epsilons.empty()) throw ConfigError("sweep.epsilons", "at least one epsilon is required");
  for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
    if (!(c.epsilons[i] > 0.0)) throw ConfigError("sweep.epsilons", "epsilons must be positive");
    if (i > 0 && !(c.epsilons[i] < c.epsilons[i - 1])) {
      throw ConfigError("sweep.epsilons", "epsilons must be strictly decreasing");
    }
  }
  if (c.box.d != c.coefficient.d) throw ConfigError("domain.lo", "box dimension differs from coefficient.d");
  for (int a = 0; a < c.box.d; ++a) {
    if (!(c.box.hi[a] > c.box.lo[a])) throw ConfigError("domain.hi", "box must have positive extent");
  }
  if (!(c.t_end > 0.0)) throw ConfigError("domain.t_end", "must be positive");
  if (c.h_divisor < 1) throw ConfigError("grid.h_divisor", "must be at least 1");
  if (c.tau_divisor < 1) throw ConfigError("grid.tau_divisor", "must be at least 1");
  if (c.h && !(*c.h > 0.0)) throw ConfigError("grid.h", "must be positive");
  if (c.tau && !(*c.tau > 0.0)) throw ConfigError("grid.tau", "must be positive");
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ConfigError("estimate.alpha", "must lie in (0, 1]");
  if (!(c.p >= 1.0)) throw ConfigError("estimate.p", "must be at least 1");
  for (double p : c.ps) {
    if (!(p >= 1.0)) throw ConfigError("estimate.ps", "exponents must be at least 1");
  }
  if (!(c.geometry.r > 0.0)) throw ConfigError("geometry.r", "must be positive");
  for (double f : c.geometry.rho_fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("geometry.rho_fractions", "fractions must lie in (0, 1)");
  }
  if (!(c.holder_lambda > 0.0 && c.holder_lambda <= 1.0)) throw ConfigError("holder.lambda", "must lie in (0, 1]");
  if (c.holder_resolution < 2) throw ConfigError("holder.resolution", "must be at least 2");
  const Thresholds& t = c.thresholds;
  for (auto [key, v] : {std::pair{"thresholds.ratio_max", t.ratio_max}, {"thresholds.min_span", t.min_span},
                        {"thresholds.convergence_factor", t.convergence_factor},
                        {"thresholds.energy_slack", t.energy_slack}, {"thresholds.r2_min", t.r2_min},
                        {"thresholds.kappa_min", t.kappa_min}}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be finite and nonnegative");
  }
  validate(c.solver);
}

SpaceTimeGrid sweep_grid(const SweepConfig& config) {
  validate(config);
  const double eps = config.epsilons.back();
  const double h = config.h.value_or(eps / config.h_divisor);
  const double tau = config.tau.value_or(eps * eps / config.tau_divisor);
  try {
    return build_grid(config.box, h, tau, {0.0, config.t_end});
  } catch (const DomainError& e) {
    throw ConfigError(config.h || config.tau ? "grid.h" : "grid.h_divisor", e.what());
  }
}

ParabolicProblem sweep_problem(const SweepConfig& config, const CoefficientField& field, double epsilon) {
  return make_problem(config, make_coefficient(field, epsilon));
}

SweepReport run_sweep(const SweepConfig& config) {
  switch (config.kind) {
    case ExperimentKind::convergence: return run_convergence(config);
    case ExperimentKind::interior_holder:
    case ExperimentKind::interior_lipschitz:
    case ExperimentKind::interior_w1p: return run_interior_estimates(config);
    case ExperimentKind::boundary_holder:
    case ExperimentKind::boundary_w1p: return run_boundary_estimates(config);
    case ExperimentKind::global_w1p: return run_global_w1p(config);
    case ExperimentKind::fundamental: return fundamental_report(config, run_fundamental_solution(config));
    case ExperimentKind::weak_limit: return run_weak_limit(config);
  }
  throw ConfigError("sweep.kind", "unsupported experiment kind");
}

SweepReport run_convergence(const SweepConfig& config) {
  const SpaceTimeGrid grid = sweep_grid(config);
  const CoefficientField field = make_field(config.coefficient);
  const int d = field.d(), m = field.m();
  const ParabolicProblem limit = make_problem(config, constant_coefficient(effective_tensor(config, field), d, m));
  const double weight = space_cell(grid) * grid.tau();

  SweepReport rep;
  rep.kind = ExperimentKind::convergence;
  for (double eps : config.epsilons) {
    const ParabolicProblem osc = make_problem(config, make_coefficient(field, eps));
    if (config.solver.enforce_resolution) check_resolution(osc.coeff, grid);
    ThetaStepper s_eps(osc, grid, config.solver), s_0(limit, grid, config.solver);
    Vector u = initial_values(osc, grid), u0 = initial_values(limit, grid);
    double err = (u - u0).squaredNorm(), norm = u0.squaredNorm();
    for (int n = 0; n + 1 < grid.levels(); ++n) {
      s_eps.step(u, n);
      s_0.step(u0, n);
      err += (u - u0).squaredNorm();
      norm += u0.squaredNorm();
    }
    rep.records.push_back(record(eps, grid, "l2_error", std::sqrt(err * weight), std::sqrt(norm * weight)));
  }

  SweepSummary& s = rep.summary;
  s.span = config.epsilons.front() / config.epsilons.back();
  s.min_ratio = s.max_ratio = rep.records.front().ratio;
  double largest = 0.0;
  for (const auto& r : rep.records) {
    s.min_ratio = std::min(s.min_ratio, r.ratio);
    s.max_ratio = std::max(s.max_ratio, r.ratio);
    largest = std::max(largest, r.lhs);
  }
  s.rate = 0.0;
  for (std::size_t i = 1; i < rep.records.size(); ++i) {
    const double prev = rep.records[i - 1].lhs, cur = rep.records[i].lhs;
    if (!(cur < prev)) s.monotone = false;
    s.rate = std::max(s.rate, safe_ratio(cur, prev));
  }
  if (largest <= 1e-14 * std::max(1.0, rep.records.front().rhs)) {
    s.pass = true;
    s.monotone = true;
    s.rate = 0.0;
    s.note = "no oscillation: errors vanish";
  } else {
    s.pass = s.monotone && s.rate <= config.thresholds.convergence_factor;
    if (!s.monotone) s.note = "errors not strictly decreasing";
    else if (!s.pass) s.note = "error reduction factor above threshold";
  }
  return rep;
}

SweepReport run_interior_estimates(const SweepConfig& config) {
  const auto kind = config.kind;
  if (kind != ExperimentKind::interior_holder && kind != ExperimentKind::interior_lipschitz &&
      kind != ExperimentKind::interior_w1p) {
    throw ConfigError("sweep.kind", "not an interior experiment");
  }
  validate(config);
  if (kind == ExperimentKind::interior_w1p && !(config.p > 2.0)) {
    throw ConfigError("estimate.p", "interior W1p runs need p > 2");
  }
  const CoefficientField field = make_field(config.coefficient);
  if (kind == ExperimentKind::interior_lipschitz && !field.is_constant()) {
    const auto coarse = holder_modulus(field, config.holder_lambda, config.holder_resolution);
    const auto fine = holder_modulus(field, config.holder_lambda, 2 * config.holder_resolution);
    if (fine.tau > 1.5 * coarse.tau) {
      throw ConfigError("coefficient", "Lipschitz runs need a Holder continuous field (modulus grows under refinement)");
    }
  }

  Cylinder q;
  q.center = config.geometry.center;
  q.t0 = config.geometry.t0;
  q.r = config.geometry.r;
  const Cylinder q2 = q.scaled(2.0);
  require_inside(config, q2);

  // Time stride keeping Q within the exhaustive pair budget.
  const SpaceTimeGrid full = sweep_grid(config);
  long space_nodes = 0;
  for (int node = 0; node < full.nspace(); ++node) {
    const Point x = full.point(node);
    double dist = 0.0;
    for (int a = 0; a < full.d(); ++a) dist += (x[a] - q.center[a]) * (x[a] - q.center[a]);
    if (dist < q.r * q.r) ++space_nodes;
  }
  const long q_levels = long(std::floor(q.r * q.r / full.tau())) + 1;
  const PairSampling sampling{20000, 100000, config.seed};
  const int stride = std::max(1, int(std::ceil(double(space_nodes) * q_levels / sampling.exhaustive_limit)));
  const Window w = window(config, q2.t0 - q2.r * q2.r, q.t0, stride);

  SweepReport rep;
  rep.kind = kind;
  for (double eps : config.epsilons) {
    const Field u = run(config, field, eps, w);
    const double mean2 = lp_norm(u, q2, 2.0);
    const double r = q.r;
    switch (kind) {
      case ExperimentKind::interior_holder: {
        const double lhs = holder_seminorm(u, q, config.alpha, sampling).value * std::pow(r, config.alpha);
        rep.records.push_back(record(eps, w.grid, "holder", lhs, mean2));
        break;
      }
      case ExperimentKind::interior_lipschitz: {
        const double lhs = r * parabolic_c1_norm(u, q, sampling);
        rep.records.push_back(record(eps, w.grid, "lipschitz", lhs, mean2 + r * r * source_sup(config, field.m())));
        break;
      }
      default: {
        const double lhs = r * lp_norm(nodal_gradient(u), q, config.p);
        rep.records.push_back(record(eps, w.grid, "w1p", lhs, mean2));
        break;
      }
    }
  }
  uniform_summary(rep, config);
  return rep;
}

SweepReport run_boundary_estimates(const SweepConfig& config) {
  const auto kind = config.kind;
  if (kind != ExperimentKind::boundary_holder && kind != ExperimentKind::boundary_w1p) {
    throw ConfigError("sweep.kind", "not a boundary experiment");
  }
  validate(config);
  const int normal = lower_face_axis(config);
  const CoefficientField field = make_field(config.coefficient);

  Cylinder dr;
  dr.kind = CylinderKind::flat;
  dr.center = config.geometry.center;
  dr.t0 = config.geometry.t0;
  dr.r = config.geometry.r;
  dr.normal_axis = normal;
  const double reach = kind == ExperimentKind::boundary_w1p ? 2.0 * dr.r : dr.r;
  if (dr.t0 - reach * reach < -1e-12 || dr.t0 > config.t_end + 1e-12) {
    throw ConfigError("geometry.t0", "boundary cylinder must lie inside the time interval");
  }
  const Window w = window(config, dr.t0 - reach * reach, dr.t0, 1);

  SweepReport rep;
  rep.kind = kind;
  for (double eps : config.epsilons) {
    const Field u = run(config, field, eps, w);
    if (kind == ExperimentKind::boundary_holder) {
      const double outer = lp_norm(u, dr, 2.0);
      for (double f : config.geometry.rho_fractions) {
        const double inner = lp_norm(u, dr.scaled(f), 2.0);
        rep.records.push_back(record(eps, w.grid, label("decay_", f), inner, std::pow(f, config.alpha) * outer));
      }
    } else {
      const double lhs = dr.r * lp_norm(nodal_gradient(u), dr, config.p);
      rep.records.push_back(record(eps, w.grid, "boundary_w1p", lhs, lp_norm(u, dr.scaled(2.0), 2.0)));
    }
  }
  uniform_summary(rep, config);
  return rep;
}

SweepReport run_global_w1p(const SweepConfig& config) {
  validate(config);
  if (config.data.initial != InitialData::zero) {
    throw ConfigError("data.initial", "global W1p runs need zero initial data");
  }
  if (config.data.source != 0.0) throw ConfigError("data.source", "global W1p runs use F = div f only");
  for (double p : config.ps) {
    if (p != 2.0 && p != 4.0 && p != 8.0) throw ConfigError("estimate.ps", "exponents must be 2, 4 or 8");
  }
  const SpaceTimeGrid grid = sweep_grid(config);
  const CoefficientField field = make_field(config.coefficient);
  const int d = grid.d(), m = field.m();

  SweepReport rep;
  rep.kind = ExperimentKind::global_w1p;
  for (double eps : config.epsilons) {
    const ParabolicProblem problem = make_problem(config, make_coefficient(field, eps));
    if (config.solver.enforce_resolution) check_resolution(problem.coeff, grid);
    ThetaStepper stepper(problem, grid, config.solver);
    Vector u = initial_values(problem, grid);
    std::vector<double> grad_sum(config.ps.size(), 0.0), flux_sum(config.ps.size(), 0.0);
    Field slice(grid.subsample(0, 1, 1), m);
    for (int n = 0; n < grid.levels(); ++n) {
      if (n > 0) stepper.step(u, n - 1);
      std::copy(u.data(), u.data() + u.size(), slice.values().begin());
      const Field grad = nodal_gradient(slice);
      const double t = grid.time(n);
      for (int node = 0; node < grid.nspace(); ++node) {
        double g2 = 0.0, f2 = 0.0;
        for (int c = 0; c < d * m; ++c) g2 += grad(0, node, c) * grad(0, node, c);
        if (problem.f) {
          for (int a = 0; a < d; ++a)
            for (int alpha = 0; alpha < m; ++alpha) {
              const double v = problem.f(grid.point(node), t, a, alpha);
              f2 += v * v;
            }
        }
        for (std::size_t k = 0; k < config.ps.size(); ++k) {
          grad_sum[k] += std::pow(g2, config.ps[k] / 2.0);
          flux_sum[k] += std::pow(f2, config.ps[k] / 2.0);
        }
      }
    }
    for (std::size_t k = 0; k < config.ps.size(); ++k) {
      const double p = config.ps[k];
      rep.records.push_back(record(eps, grid, label("w1p_p=", p), std::pow(grad_sum[k], 1.0 / p),
                                   std::pow(flux_sum[k], 1.0 / p)));
    }
  }
  uniform_summary(rep, config);
  const double bound = (1.0 / field.mu()) * (1.0 + config.thresholds.energy_slack);
  for (const auto& r : rep.records) {
    if (r.metric == "w1p_p=2" && r.ratio > bound) {
      rep.summary.pass = false;
      rep.summary.note = "p = 2 ratio above the energy bound";
    }
  }
  return rep;
}

std::vector<GaussianFit> run_fundamental_solution(const SweepConfig& config) {
  validate(config);
  if (config.coefficient.d != 1) throw ConfigError("coefficient.d", "fundamental solutions are run in d = 1");
  const SpaceTimeGrid grid = sweep_grid(config);
  const double h = grid.h(0);
  const double origin = -grid.box().lo[0] / h;
  const int centre = int(std::lround(origin));
  if (std::abs(origin - centre) > 1e-9 || centre <= 0 || centre >= grid.nodes(0) - 1) {
    throw ConfigError("domain.lo", "the box must contain x = 0 as an interior node");
  }
  const CoefficientField field = make_field(config.coefficient);
  const int m = field.m();
  const double T = grid.t_end();
  std::vector<int> fit_levels;
  for (double t : {T / 4, T / 2, T}) fit_levels.push_back(level_of(grid, t, "domain.t_end"));

  std::vector<GaussianFit> fits;
  for (double eps : config.epsilons) {
    ParabolicProblem problem;
    problem.coeff = make_coefficient(field, eps);
    if (config.solver.enforce_resolution) check_resolution(problem.coeff, grid);
    ThetaStepper stepper(problem, grid, config.solver);
    Vector u = Vector::Zero(Eigen::Index(grid.nspace()) * m);
    u[Eigen::Index(centre) * m] = 1.0 / h;

    GaussianFit fit;
    fit.epsilon = eps;
    double sz = 0, sy = 0, szz = 0, szy = 0;
    long count = 0;
    std::vector<std::pair<double, double>> samples;
    std::vector<double> grad_log_t, grad_log_sup;
    Field slice(grid.subsample(0, 1, 1), m);
    for (int n = 0; n < grid.levels(); ++n) {
      if (n > 0) stepper.step(u, n - 1);
      double mass = 0.0;
      for (int i = 0; i < grid.nspace(); ++i) mass += u[Eigen::Index(i) * m] * h;
      fit.mass_defect = std::max(fit.mass_defect, std::abs(mass - 1.0));
      if (std::find(fit_levels.begin(), fit_levels.end(), n) == fit_levels.end()) continue;

      const double t = grid.time(n);
      double peak = 0.0;
      for (int i = 0; i < grid.nspace(); ++i) peak = std::max(peak, std::abs(u[Eigen::Index(i) * m]));
      for (int i = 0; i < grid.nspace(); ++i) {
        const double v = std::abs(u[Eigen::Index(i) * m]);
        if (!(v > 1e-8 * peak)) continue;
        const double x = grid.coord(0, i);
        const double z = x * x / t, y = std::log(v * std::sqrt(t));
        sz += z;
        sy += y;
        szz += z * z;
        szy += z * y;
        ++count;
        samples.emplace_back(z, y);
      }
      std::copy(u.data(), u.data() + u.size(), slice.values().begin());
      const Field grad = nodal_gradient(slice);
      double sup = 0.0;
      for (int i = 0; i < grid.nspace(); ++i) sup = std::max(sup, std::abs(grad(0, i, 0)));
      grad_log_t.push_back(std::log(t));
      grad_log_sup.push_back(std::log(sup));
      if (n == grid.levels() - 1) {
        fit.value_at_origin = u[Eigen::Index(centre) * m];
        for (int i = 0; i < grid.nspace(); ++i) {
          const double x = grid.coord(0, i);
          if (x - grid.box().lo[0] < 1.0 || grid.box().hi[0] - x < 1.0)
            fit.boundary_mass += std::abs(u[Eigen::Index(i) * m]) * h;
        }
      }
    }
    if (fit.boundary_mass > 1e-6) {
      throw DomainError("fundamental solution reaches the box boundary (mass " +
                        std::to_string(fit.boundary_mass) + "); enlarge the box");
    }
    const double denom = count * szz - sz * sz;
    const double slope = denom != 0.0 ? (count * szy - sz * sy) / denom : 0.0;
    const double intercept = (sy - slope * sz) / std::max<long>(count, 1);
    fit.kappa = -slope;
    fit.C = std::exp(intercept);
    double res = 0.0;
    for (const auto& [z, y] : samples) res += std::pow(y - intercept - slope * z, 2);
    fit.residual = std::sqrt(res / std::max<std::size_t>(samples.size(), 1));
    const std::size_t k = grad_log_t.size();
    double mt = 0, ms = 0;
    for (std::size_t i = 0; i < k; ++i) {
      mt += grad_log_t[i] / k;
      ms += grad_log_sup[i] / k;
    }
    double num = 0, den = 0;
    for (std::size_t i = 0; i < k; ++i) {
      num += (grad_log_t[i] - mt) * (grad_log_sup[i] - ms);
      den += (grad_log_t[i] - mt) * (grad_log_t[i] - mt);
    }
    fit.gradient_exponent = den > 0 ? num / den : 0.0;
    fits.push_back(fit);
  }
  return fits;
}

SweepReport fundamental_report(const SweepConfig& config, const std::vector<GaussianFit>& fits) {
  const SpaceTimeGrid grid = sweep_grid(config);
  SweepReport rep;
  rep.kind = ExperimentKind::fundamental;
  for (const auto& f : fits) {
    rep.records.push_back({f.epsilon, grid.h(0), grid.tau(), "kappa", f.kappa, f.C, f.kappa});
    rep.records.push_back({f.epsilon, grid.h(0), grid.tau(), "origin_value", f.value_at_origin,
                           1.0 / std::sqrt(4.0 * kPi * grid.t_end()),
                           f.value_at_origin * std::sqrt(4.0 * kPi * grid.t_end())});
    rep.records.push_back({f.epsilon, grid.h(0), grid.tau(), "mass_defect", f.mass_defect, 1.0, f.mass_defect});
  }
  SweepSummary& s = rep.summary;
  s.span = config.epsilons.front() / config.epsilons.back();
  s.pass = !fits.empty();
  s.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& f : fits) {
    s.min_ratio = std::min(s.min_ratio, f.kappa);
    s.max_ratio = std::max(s.max_ratio, f.kappa);
    if (!(f.kappa >= config.thresholds.kappa_min) || !(f.C > 0.0)) {
      s.pass = false;
      s.note = "fitted kappa below threshold";
    }
    if (config.coefficient.m == 1 && f.mass_defect > 1e-8) {
      s.pass = false;
      s.note = "discrete mass not conserved";
    }
  }
  if (fits.empty()) s.min_ratio = 0.0;
  s.spread = s.min_ratio > 0 ? s.max_ratio / s.min_ratio : 1.0;
  return rep;
}

TestFunction default_test_function(const Box& box, std::pair<double, double> t_range) {
  return [box, t_range](const Point& x, double t) {
    double v = 1.0;
    for (int a = 0; a < box.d; ++a) {
      const double s = normalized(box, x, a);
      v *= (1.0 + s) * (1.0 + s);
    }
    const double sigma = (t - t_range.first) / (t_range.second - t_range.first);
    return v * (1.0 + sigma) * (1.0 + sigma) * (1.0 + sigma);
  };
}

WeakLimitResult run_weak_limit(const OscillatingFunction& h, const TestFunction& phi,
                               const std::vector<double>& epsilons, const Box& box,
                               std::pair<double, double> t_range, int h_divisor, int tau_divisor) {
  if (epsilons.empty()) throw ConfigError("sweep.epsilons", "at least one epsilon is required");
  for (const auto& mode : h.modes) {
    if (mode.k[0] == 0 && mode.k[1] == 0 && mode.l == 0) {
      throw ConfigError("weak_limit.modes", "modes need a nonzero frequency (the mean is separate)");
    }
  }
  const double eps_min = *std::min_element(epsilons.begin(), epsilons.end());
  SpaceTimeGrid grid;
  try {
    grid = build_grid(box, eps_min / h_divisor, eps_min * eps_min / tau_divisor, t_range);
  } catch (const DomainError& e) {
    throw ConfigError("grid.h_divisor", e.what());
  }
  const int d = grid.d();
  // Trapezoidal weights per node and per level.
  std::vector<double> wx(grid.nspace()), phi_nodes;
  for (int node = 0; node < grid.nspace(); ++node) {
    const auto idx = grid.index(node);
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      w *= grid.h(a);
      if (idx[a] == 0 || idx[a] == grid.nodes(a) - 1) w *= 0.5;
    }
    wx[node] = w;
  }
  phi_nodes.resize(std::size_t(grid.levels()) * grid.nspace());
  double integral_phi = 0.0;
  for (int level = 0; level < grid.levels(); ++level) {
    const double wt = grid.tau() * (level == 0 || level == grid.levels() - 1 ? 0.5 : 1.0);
    for (int node = 0; node < grid.nspace(); ++node) {
      const double w = wx[node] * wt;
      const double v = phi(grid.point(node), grid.time(level));
      phi_nodes[std::size_t(level) * grid.nspace() + node] = w * v;
      integral_phi += w * v;
    }
  }

  WeakLimitResult out;
  for (double eps : epsilons) {
    double sum = 0.0;
    for (int level = 0; level < grid.levels(); ++level) {
      const double s = grid.time(level) / (eps * eps);
      for (int node = 0; node < grid.nspace(); ++node) {
        const Point x = grid.point(node);
        sum += h({x[0] / eps, x[1] / eps}, s, d) * phi_nodes[std::size_t(level) * grid.nspace() + node];
      }
    }
    const double limit = h.mean * integral_phi;
    out.records.push_back({eps, sum, limit, sum - limit});
  }

  std::vector<double> lx, ly;
  for (const auto& r : out.records) {
    if (std::abs(r.defect) > 1e-13 * std::abs(integral_phi)) {
      lx.push_back(std::log(r.epsilon));
      ly.push_back(std::log(std::abs(r.defect)));
    }
  }
  if (lx.size() >= 2) {
    const double n = double(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i] / n;
      my += ly[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
      syy += (ly[i] - my) * (ly[i] - my);
    }
    out.slope = sxx > 0 ? sxy / sxx : 0.0;
    out.r2 = sxx > 0 && syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  }
  return out;
}

SweepReport run_weak_limit(const SweepConfig& config) {
  validate(config);
  const std::pair<double, double> range{0.0, config.t_end};
  const auto result = run_weak_limit(config.oscillation, default_test_function(config.box, range),
                                     config.epsilons, config.box, range, config.h_divisor, config.tau_divisor);
  const double eps_min = config.epsilons.back();
  SweepReport rep;
  rep.kind = ExperimentKind::weak_limit;
  double largest = 0.0, scale = 0.0;
  for (const auto& r : result.records) {
    rep.records.push_back({r.epsilon, eps_min / config.h_divisor, eps_min * eps_min / config.tau_divisor,
                           "weak_defect", std::abs(r.defect), r.epsilon, std::abs(r.defect) / r.epsilon});
    largest = std::max(largest, std::abs(r.defect));
    scale = std::max(scale, std::abs(r.integral));
  }
  SweepSummary& s = rep.summary;
  s.span = config.epsilons.front() / config.epsilons.back();
  s.rate = result.slope;
  s.r2 = result.r2;
  s.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& r : rep.records) {
    s.min_ratio = std::min(s.min_ratio, r.ratio);
    s.max_ratio = std::max(s.max_ratio, r.ratio);
  }
  s.spread = s.min_ratio > 0 ? s.max_ratio / s.min_ratio : 1.0;
  if (largest <= 1e-12 * std::max(1.0, scale)) {
    s.pass = true;
    s.note = "defect vanishes for every epsilon";
  } else {
    s.pass = result.r2 >= config.thresholds.r2_min && result.slope >= 1.0;
    if (!s.pass) s.note = "defect does not decay like C eps";
  }
  return rep;
}

double rescaling_check(const RescalingProblem& problem, const SpaceTimeGrid& grid, double delta,
                       const SolverConfig& solver) {
  int exponent = 0;
  if (!(delta > 0.0) || std::frexp(delta, &exponent) != 0.5) {
    throw ConfigError("delta", "rescaling factor must be a power of two");
  }
  ParabolicProblem original{make_coefficient(problem.field, problem.epsilon), problem.g, problem.h0, problem.F,
                            problem.f};
  const Field u = solve_ivp(original, grid, solver);

  Box box = grid.box();
  for (int a = 0; a < box.d; ++a) {
    box.lo[a] /= delta;
    box.hi[a] /= delta;
  }
  const double d2 = delta * delta;
  const SpaceTimeGrid scaled = build_grid(box, {grid.h(0) / delta, grid.h(1) / delta}, grid.tau() / d2,
                                          {grid.t_start() / d2, grid.t_end() / d2});
  auto up = [delta](const Point& x) { return Point{delta * x[0], delta * x[1]}; };
  ParabolicProblem rescaled;
  rescaled.coeff = make_coefficient(problem.field, problem.epsilon / delta);
  if (problem.g) rescaled.g = [g = problem.g, up, d2](const Point& x, double t, int a) { return g(up(x), d2 * t, a); };
  if (problem.h0)
    rescaled.h0 = [h0 = problem.h0, up, d2](const Point& x, double t, int a) { return h0(up(x), d2 * t, a); };
  if (problem.F)
    rescaled.F = [F = problem.F, up, d2](const Point& x, double t, int a) { return d2 * F(up(x), d2 * t, a); };
  if (problem.f)
    rescaled.f = [f = problem.f, up, delta, d2](const Point& x, double t, int i, int a) {
      return delta * f(up(x), d2 * t, i, a);
    };
  const Field v = solve_ivp(rescaled, scaled, solver);

  double worst = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) worst = std::max(worst, std::abs(u.values()[k] - v.values()[k]));
  return worst;
}

}  // namespace parahom
