#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "parahom/cell.hpp"
#include "parahom/coefficients.hpp"
#include "parahom/grid.hpp"
#include "parahom/solver.hpp"

namespace parahom {

enum class ExperimentKind {
  convergence,
  interior_holder,
  interior_lipschitz,
  interior_w1p,
  boundary_holder,
  boundary_w1p,
  global_w1p,
  fundamental,
  weak_limit,
};

std::string to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& name);

enum class InitialData { zero, sine, bump };
enum class FluxData { none, sine };

std::string to_string(InitialData v);
InitialData initial_from_string(const std::string& name);
std::string to_string(FluxData v);
FluxData flux_from_string(const std::string& name);

/// Named problem data on the sweep box. sine: prod sin(pi s_a); bump: prod of
/// sin^2(2 pi (s_a - 1/4)) on [1/4, 3/4]; flux sine: f_i^alpha = sin(2 pi s_i); s_a is the
/// coordinate normalized to [0, 1]. Boundary data is always zero and F is the constant `source`.
struct ProblemData {
  InitialData initial = InitialData::sine;
  double source = 0.0;
  FluxData flux = FluxData::none;

  bool operator==(const ProblemData&) const = default;
};

/// Q = Q_r(center, t0) and 2Q for interior runs; D_r(center) with rho = fraction * r for
/// boundary runs (center on a lower face of the box, normal along that axis).
struct Geometry {
  Point center{0.5, 0.5};
  double t0 = 0.1;
  double r = 0.125;
  std::vector<double> rho_fractions{0.5, 0.25, 0.125};

  bool operator==(const Geometry&) const = default;
};

struct Thresholds {
  double ratio_max = 3.0;            // max/min of a ratio sequence
  double min_span = 8.0;             // eps_max / eps_min needed for a uniformity verdict
  double convergence_factor = 0.7;   // e(eps/2) / e(eps)
  double energy_slack = 0.1;         // p = 2 global bound 1/mu * (1 + slack)
  double r2_min = 0.95;              // weak-limit log-log fit
  double kappa_min = 0.05;           // fundamental-solution exponent

  bool operator==(const Thresholds&) const = default;
};

/// Mean-M periodic function M + sum amplitude * wave(2 pi (k . y + l s)) for weak limits.
struct OscillatingFunction {
  double mean = 0.0;
  std::vector<FourierMode> modes;  // row/col ignored

  double operator()(const Point& y, double s, int d) const;
  bool operator==(const OscillatingFunction&) const = default;
};

struct SweepConfig {
  ExperimentKind kind = ExperimentKind::convergence;
  CoefficientSpec coefficient;
  std::vector<double> epsilons;
  Box box;
  double t_end = 0.1;
  int h_divisor = 16;    // h = eps_min / h_divisor
  int tau_divisor = 16;  // tau = eps_min^2 / tau_divisor
  std::optional<double> h;
  std::optional<double> tau;
  ProblemData data;
  double alpha = 0.5;
  double p = 4.0;
  std::vector<double> ps{2.0, 4.0};
  Geometry geometry;
  double holder_lambda = 1.0;
  int holder_resolution = 64;
  OscillatingFunction oscillation;
  std::uint64_t seed = 0x5eed5eedULL;
  SolverConfig solver;
  CellOptions cell;
  Thresholds thresholds;

  bool operator==(const SweepConfig&) const = default;
};

/// Recommended defaults for each kind (box, horizon, data and geometry).
SweepConfig default_config(ExperimentKind kind);

/// Throws ConfigError naming the offending key.
void validate(const SweepConfig& config);

/// Grid shared by every epsilon of the sweep.
SpaceTimeGrid sweep_grid(const SweepConfig& config);

struct SweepRecord {
  double epsilon = 0.0;
  double h = 0.0;
  double tau = 0.0;
  std::string metric;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;

  bool operator==(const SweepRecord&) const = default;
};

struct SweepSummary {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double spread = 1.0;  // worst max/min ratio over the metrics
  double span = 1.0;    // eps_max / eps_min
  double rate = 0.0;    // convergence: worst e(eps/2)/e(eps); weak limit: fitted slope
  double r2 = 0.0;
  bool monotone = true;
  bool pass = false;
  std::string note;

  bool operator==(const SweepSummary&) const = default;
};

struct SweepReport {
  ExperimentKind kind = ExperimentKind::convergence;
  std::vector<SweepRecord> records;
  SweepSummary summary;
};

/// Initial data, source and flux of the sweep applied to the field rescaled at epsilon.
ParabolicProblem sweep_problem(const SweepConfig& config, const CoefficientField& field, double epsilon);

/// Dispatches on config.kind (fundamental runs are summarized as sweep records).
SweepReport run_sweep(const SweepConfig& config);

SweepReport run_convergence(const SweepConfig& config);
SweepReport run_interior_estimates(const SweepConfig& config);
SweepReport run_boundary_estimates(const SweepConfig& config);
SweepReport run_global_w1p(const SweepConfig& config);

struct GaussianFit {
  double epsilon = 0.0;
  double C = 0.0;
  double kappa = 0.0;
  double residual = 0.0;            // RMS of the log-fit residual
  double value_at_origin = 0.0;     // Gamma(0, T)
  double mass_defect = 0.0;         // max over levels of |sum Gamma h^d - 1|
  double boundary_mass = 0.0;       // mass within one length unit of the box faces at T
  double gradient_exponent = 0.0;   // slope of log sup|grad Gamma| against log t
};

/// Throws ConfigError for d != 1 or a box without a node at x = 0, and DomainError when the
/// boundary mass exceeds 1e-6 (refusal to fit).
std::vector<GaussianFit> run_fundamental_solution(const SweepConfig& config);
SweepReport fundamental_report(const SweepConfig& config, const std::vector<GaussianFit>& fits);

struct WeakLimitRecord {
  double epsilon = 0.0;
  double integral = 0.0;
  double limit = 0.0;  // M times the integral of phi
  double defect = 0.0;
};

struct WeakLimitResult {
  std::vector<WeakLimitRecord> records;
  double slope = 0.0;  // of log |defect| against log eps
  double r2 = 0.0;
};

using TestFunction = std::function<double(const Point& x, double t)>;

/// Default test function: prod_a (1 + s_a)^2 * (1 + sigma)^3 in normalized coordinates.
TestFunction default_test_function(const Box& box, std::pair<double, double> t_range);

/// Trapezoidal node quadrature of h(x/eps, t/eps^2) phi(x, t) on the grid tied to the
/// smallest epsilon.
WeakLimitResult run_weak_limit(const OscillatingFunction& h, const TestFunction& phi,
                               const std::vector<double>& epsilons, const Box& box,
                               std::pair<double, double> t_range, int h_divisor = 16,
                               int tau_divisor = 16);
SweepReport run_weak_limit(const SweepConfig& config);

struct RescalingProblem {
  CoefficientField field;
  double epsilon = 0.25;
  DataFn h0;
  DataFn F;
  FluxFn f;
  DataFn g;
};

/// Solves the problem on `grid` and the rescaled problem v(x, t) = u(delta x, delta^2 t) on
/// the scaled grid; returns the max nodal discrepancy. Throws ConfigError when delta is not
/// a power of two.
double rescaling_check(const RescalingProblem& problem, const SpaceTimeGrid& grid, double delta,
                       const SolverConfig& solver = {});

}  // namespace parahom
