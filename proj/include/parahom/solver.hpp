#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "parahom/coefficients.hpp"
#include "parahom/grid.hpp"
#include "parahom/linear.hpp"

namespace parahom {

/// Coefficient evaluator over physical (x, t). `epsilon` is the oscillation scale
/// (zero for a non-oscillating constant tensor) and drives the resolution rule.
struct Coefficient {
  std::function<Tensor(const Point&, double)> eval;
  int d = 1;
  int m = 1;
  double mu = 1.0;
  double epsilon = 0.0;
  bool time_independent = true;
  bool constant = true;
};

Coefficient make_coefficient(const ScaledCoefficient& scaled);
Coefficient make_coefficient(const CoefficientField& field, double epsilon, bool time_reversed = false);
Coefficient constant_coefficient(const Tensor& a, int d, int m);

/// Scalar data of component alpha at (x, t); an empty function means zero.
using DataFn = std::function<double(const Point& x, double t, int alpha)>;
/// Flux data f_i^alpha(x, t) entering the equation as div(f); empty means zero.
using FluxFn = std::function<double(const Point& x, double t, int axis, int alpha)>;

/// du/dt - div(A grad u) = F + div(f) in the box, u = g on the lateral boundary,
/// u = h0 at t_start.
struct ParabolicProblem {
  Coefficient coeff;
  DataFn g;
  DataFn h0;
  DataFn F;
  FluxFn f;
};

enum class Averaging { midpoint, harmonic };
std::string to_string(Averaging a);
Averaging averaging_from_string(const std::string& name);

struct SolverConfig {
  double theta = 1.0;
  double tolerance = 1e-10;
  int max_iterations = 20;
  Averaging averaging = Averaging::midpoint;
  int store_stride = 1;
  double store_start = -1e300;
  bool enforce_resolution = true;

  bool operator==(const SolverConfig&) const = default;
};

/// Throws ConfigError on theta outside [1/2, 1], tolerance outside (0, 1e-6], etc.
void validate(const SolverConfig& config);

/// Throws ResolutionError when the grid is coarser than h <= eps/16, tau <= eps^2/16.
void check_resolution(const Coefficient& coeff, const SpaceTimeGrid& grid);

/// Flux-form operator L = -div(A grad .) on the grid at time t. `matrix` holds the
/// interior-interior block with identity rows at Dirichlet nodes; `coupling` holds the
/// interior-row entries in boundary columns. Unknown index node * m + alpha.
struct AssembledOperator {
  SparseMatrix matrix;
  SparseMatrix coupling;
  std::vector<char> boundary;
};

AssembledOperator assemble_operator(const Coefficient& coeff, const SpaceTimeGrid& grid, double t,
                                    Averaging averaging = Averaging::midpoint);

/// Coefficient used on the half-point face between node (i0, i1) and its +e_axis neighbour.
Tensor face_coefficient(const Coefficient& coeff, const SpaceTimeGrid& grid, Averaging averaging,
                        int axis, int i0, int i1, double t);

/// Reusable assembler: fixed sparsity, values refilled per call to `assemble`. Dirichlet
/// rows of `stiffness()` are zero apart from an explicit zero diagonal.
class OperatorAssembler {
 public:
  OperatorAssembler(const Coefficient& coeff, const SpaceTimeGrid& grid, Averaging averaging);

  void assemble(double t);
  const SparseMatrix& stiffness() const { return stiffness_.matrix(); }
  const SparseMatrix& coupling() const { return coupling_.matrix(); }
  const std::vector<char>& boundary() const { return boundary_; }
  int unknowns() const { return n_; }

  /// out = L u including the boundary columns; zero on Dirichlet rows.
  void apply(const Vector& u, Vector& out) const;

 private:
  Coefficient coeff_;
  SpaceTimeGrid grid_;
  Averaging averaging_;
  int n_;
  std::vector<char> boundary_;
  std::vector<Tensor> face_[2];
  PatternAssembly stiffness_;
  PatternAssembly coupling_;
};

/// Discrete div(f) at the nodes from half-point values of f; zero on Dirichlet nodes.
void flux_divergence(const FluxFn& f, const SpaceTimeGrid& grid, int m, double t, Vector& out);

/// Adds F(., t) + div f(., t) on interior nodes into `out`.
void add_sources(const ParabolicProblem& problem, const SpaceTimeGrid& grid, double t, Vector& out);

struct StepStats {
  int steps = 0;
  int max_iterations = 0;
  double max_residual = 0.0;
};

/// Theta scheme (I + theta tau L_{n+1}) u_{n+1} = (I - (1-theta) tau L_n) u_n + tau sources,
/// Dirichlet rows pinned to g(t_{n+1}).
class ThetaStepper {
 public:
  ThetaStepper(const ParabolicProblem& problem, const SpaceTimeGrid& grid, const SolverConfig& config);

  /// Advances u from level n to n + 1 in place.
  void step(Vector& u, int n);
  const StepStats& stats() const { return stats_; }

 private:
  ParabolicProblem problem_;
  SpaceTimeGrid grid_;
  SolverConfig config_;
  OperatorAssembler assembler_;
  LinearSolver solver_;
  SparseMatrix system_;
  std::vector<int> diagonal_slots_;
  bool factor_once_;
  bool factored_ = false;
  StepStats stats_;
  Vector scratch_, rhs_;
};

/// One step from level n for tests and small drivers.
Vector theta_step(const ParabolicProblem& problem, const SpaceTimeGrid& grid,
                  const SolverConfig& config, const Vector& u_n, int n);

/// Nodal values of h0 (or g on boundary nodes) at t_start.
Vector initial_values(const ParabolicProblem& problem, const SpaceTimeGrid& grid);

/// Full trajectory on the levels selected by store_start / store_stride. The returned
/// field's grid describes exactly the stored levels.
Field solve_ivp(const ParabolicProblem& problem, const SpaceTimeGrid& grid,
                const SolverConfig& config, StepStats* stats = nullptr);

/// Implicit-Euler residual (u^n - u^{n-1}) / tau + L(t_n) u^n - F - div f on interior
/// nodes of levels >= 1; zero elsewhere. `field` must live on `grid`'s levels.
Field residual(const ParabolicProblem& problem, const Field& field,
               Averaging averaging = Averaging::midpoint);

}  // namespace parahom
