#include "parahom/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "parahom/error.hpp"

namespace parahom {

Coefficient make_coefficient(const ScaledCoefficient& scaled) {
  Coefficient c;
  c.eval = [scaled](const Point& x, double t) { return scaled(x, t); };
  c.d = scaled.field().d();
  c.m = scaled.field().m();
  c.mu = scaled.field().mu();
  c.epsilon = scaled.epsilon();
  c.time_independent = scaled.time_independent();
  c.constant = scaled.field().is_constant();
  return c;
}

Coefficient make_coefficient(const CoefficientField& field, double epsilon, bool time_reversed) {
  return make_coefficient(ScaledCoefficient(field, epsilon, time_reversed));
}

Coefficient constant_coefficient(const Tensor& a, int d, int m) {
  if (a.rows() != d * m || a.cols() != d * m) throw DomainError("constant tensor has wrong shape");
  Coefficient c;
  c.eval = [a](const Point&, double) { return a; };
  c.d = d;
  c.m = m;
  const Tensor sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Tensor> eig(sym, Eigen::EigenvaluesOnly);
  c.mu = std::min(eig.eigenvalues().minCoeff(), 1.0 / eig.eigenvalues().maxCoeff());
  return c;
}

std::string to_string(Averaging a) { return a == Averaging::midpoint ? "midpoint" : "harmonic"; }

Averaging averaging_from_string(const std::string& name) {
  if (name == "midpoint") return Averaging::midpoint;
  if (name == "harmonic") return Averaging::harmonic;
  throw ConfigError("solver.averaging", "expected 'midpoint' or 'harmonic', got '" + name + "'");
}

void validate(const SolverConfig& config) {
  if (!(config.theta >= 0.5 && config.theta <= 1.0)) {
    throw ConfigError("solver.theta", "must lie in [1/2, 1]");
  }
  if (!(config.tolerance > 0.0 && config.tolerance <= 1e-6)) {
    throw ConfigError("solver.tolerance", "must lie in (0, 1e-6]");
  }
  if (config.max_iterations < 1) throw ConfigError("solver.max_iterations", "must be >= 1");
  if (config.store_stride < 1) throw ConfigError("solver.store_stride", "must be >= 1");
}

void check_resolution(const Coefficient& coeff, const SpaceTimeGrid& grid) {
  if (coeff.constant || coeff.epsilon <= 0.0) return;
  const double eps = coeff.epsilon;
  const double need_h = eps / 16.0;
  const double need_tau = eps * eps / 16.0;
  const double slack = 1.0 + 1e-12;
  double h = 0.0;
  for (int a = 0; a < grid.d(); ++a) h = std::max(h, grid.h(a));
  if (h > need_h * slack || grid.tau() > need_tau * slack) {
    std::ostringstream os;
    os << "grid (h=" << h << ", tau=" << grid.tau() << ") does not resolve epsilon=" << eps
       << ": need h <= " << need_h << " and tau <= " << need_tau;
    throw ResolutionError(os.str(), need_h, need_tau);
  }
}

Tensor face_coefficient(const Coefficient& coeff, const SpaceTimeGrid& g, Averaging averaging,
                        int axis, int i0, int i1, double t) {
  Point x{g.coord(0, i0), g.d() == 2 ? g.coord(1, i1) : 0.0};
  if (averaging == Averaging::midpoint) {
    x[axis] += 0.5 * g.h(axis);
    return coeff.eval(x, t);
  }
  Point y = x;
  y[axis] += g.h(axis);
  const Tensor a = coeff.eval(x, t);
  const Tensor b = coeff.eval(y, t);
  return Tensor(2.0 * (a.inverse() + b.inverse()).inverse());
}

namespace {

std::array<int, 2> face_shape(const SpaceTimeGrid& g, int axis) {
  std::array<int, 2> shape{g.nodes(0), g.nodes(1)};
  if (!g.periodic()) shape[axis] -= 1;
  return shape;
}

int wrap(int i, int n) { return i < 0 ? i + n : (i >= n ? i - n : i); }

}  // namespace

OperatorAssembler::OperatorAssembler(const Coefficient& coeff, const SpaceTimeGrid& grid,
                                     Averaging averaging)
    : coeff_(coeff),
      grid_(grid),
      averaging_(averaging),
      n_(grid.nspace() * coeff.m),
      stiffness_(grid.nspace() * coeff.m),
      coupling_(grid.nspace() * coeff.m) {
  if (coeff.d != grid.d()) throw DomainError("coefficient and grid dimensions differ");
  boundary_.resize(grid.nspace());
  for (int node = 0; node < grid.nspace(); ++node) boundary_[node] = grid.on_boundary(node);
  for (int a = 0; a < grid.d(); ++a) {
    const auto shape = face_shape(grid, a);
    face_[a].resize(std::size_t(shape[0]) * shape[1]);
  }
}

void OperatorAssembler::assemble(double t) {
  const SpaceTimeGrid& g = grid_;
  const int d = g.d();
  const int m = coeff_.m;
  for (int a = 0; a < d; ++a) {
    const auto shape = face_shape(g, a);
    for (int i1 = 0; i1 < shape[1]; ++i1)
      for (int i0 = 0; i0 < shape[0]; ++i0)
        face_[a][std::size_t(i1) * shape[0] + i0] = face_coefficient(coeff_, g, averaging_, a, i0, i1, t);
  }

  stiffness_.begin();
  coupling_.begin();
  auto emit = [&](int row, int node, int beta, double v) {
    const int col = node * m + beta;
    if (boundary_[node]) {
      coupling_.add(row, col, v);
    } else {
      stiffness_.add(row, col, v);
    }
  };

  for (int node = 0; node < g.nspace(); ++node) {
    for (int alpha = 0; alpha < m; ++alpha) stiffness_.add(node * m + alpha, node * m + alpha, 0.0);
    if (boundary_[node]) continue;
    const auto idx = g.index(node);
    for (int a = 0; a < d; ++a) {
      const auto shape = face_shape(g, a);
      const double inv_ha = 1.0 / g.h(a);
      for (int side : {+1, -1}) {
        // The face between lower node L and upper node U = L + e_a.
        std::array<int, 2> lo = idx;
        if (side < 0) lo[a] = wrap(lo[a] - 1, g.nodes(a));
        std::array<int, 2> up = lo;
        up[a] = wrap(up[a] + 1, g.nodes(a));
        const Tensor& A = face_[a][std::size_t(lo[1]) * shape[0] + lo[0]];
        const int nl = g.node(lo[0], lo[1]);
        const int nu = g.node(up[0], up[1]);
        // Row contribution is -side * flux / h_a.
        const double sgn = -side * inv_ha;
        for (int alpha = 0; alpha < m; ++alpha) {
          const int row = node * m + alpha;
          for (int beta = 0; beta < m; ++beta) {
            const double normal = A(a * m + alpha, a * m + beta) * inv_ha;
            emit(row, nu, beta, sgn * normal);
            emit(row, nl, beta, -sgn * normal);
            for (int b = 0; b < d; ++b) {
              if (b == a) continue;
              const double w = A(a * m + alpha, b * m + beta) / (4.0 * g.h(b)) * sgn;
              for (const auto& base : {lo, up}) {
                std::array<int, 2> plus = base;
                std::array<int, 2> minus = base;
                plus[b] = wrap(plus[b] + 1, g.nodes(b));
                minus[b] = wrap(minus[b] - 1, g.nodes(b));
                emit(row, g.node(plus[0], plus[1]), beta, w);
                emit(row, g.node(minus[0], minus[1]), beta, -w);
              }
            }
          }
        }
      }
    }
  }
  stiffness_.finish();
  coupling_.finish();
}

void OperatorAssembler::apply(const Vector& u, Vector& out) const {
  out = stiffness() * u;
  out += coupling() * u;
}

AssembledOperator assemble_operator(const Coefficient& coeff, const SpaceTimeGrid& grid, double t,
                                    Averaging averaging) {
  OperatorAssembler assembler(coeff, grid, averaging);
  assembler.assemble(t);
  AssembledOperator op;
  op.matrix = assembler.stiffness();
  op.coupling = assembler.coupling();
  op.boundary = assembler.boundary();
  for (int node = 0; node < grid.nspace(); ++node) {
    if (!op.boundary[node]) continue;
    for (int alpha = 0; alpha < coeff.m; ++alpha) {
      const int r = node * coeff.m + alpha;
      op.matrix.coeffRef(r, r) = 1.0;
    }
  }
  return op;
}

void flux_divergence(const FluxFn& f, const SpaceTimeGrid& g, int m, double t, Vector& out) {
  out = Vector::Zero(Eigen::Index(g.nspace()) * m);
  if (!f) return;
  for (int node = 0; node < g.nspace(); ++node) {
    if (g.on_boundary(node)) continue;
    const Point x = g.point(node);
    for (int a = 0; a < g.d(); ++a) {
      Point xp = x;
      Point xm = x;
      xp[a] += 0.5 * g.h(a);
      xm[a] -= 0.5 * g.h(a);
      for (int alpha = 0; alpha < m; ++alpha) {
        out[node * m + alpha] += (f(xp, t, a, alpha) - f(xm, t, a, alpha)) / g.h(a);
      }
    }
  }
}

void add_sources(const ParabolicProblem& problem, const SpaceTimeGrid& g, double t, Vector& out) {
  const int m = problem.coeff.m;
  if (problem.f) {
    Vector div;
    flux_divergence(problem.f, g, m, t, div);
    out += div;
  }
  if (problem.F) {
    for (int node = 0; node < g.nspace(); ++node) {
      if (g.on_boundary(node)) continue;
      const Point x = g.point(node);
      for (int alpha = 0; alpha < m; ++alpha) out[node * m + alpha] += problem.F(x, t, alpha);
    }
  }
}

ThetaStepper::ThetaStepper(const ParabolicProblem& problem, const SpaceTimeGrid& grid,
                           const SolverConfig& config)
    : problem_(problem),
      grid_(grid),
      config_(config),
      assembler_(problem.coeff, grid, config.averaging),
      solver_(config.tolerance, config.max_iterations),
      factor_once_(problem.coeff.time_independent) {
  validate(config);
  if (!problem.coeff.eval) throw DomainError("problem has no coefficient");
  assembler_.assemble(grid.time(std::min(1, grid.levels() - 1)));
  system_ = assembler_.stiffness();
  diagonal_slots_.resize(system_.rows());
  for (int r = 0; r < system_.rows(); ++r) {
    const int* first = system_.innerIndexPtr() + system_.outerIndexPtr()[r];
    const int* last = system_.innerIndexPtr() + system_.outerIndexPtr()[r + 1];
    diagonal_slots_[r] = int(std::lower_bound(first, last, r) - system_.innerIndexPtr());
  }
}

void ThetaStepper::step(Vector& u, int n) {
  const SpaceTimeGrid& g = grid_;
  const int m = problem_.coeff.m;
  const double tau = g.tau();
  const double theta = config_.theta;
  const double t0 = g.time(n);
  const double t1 = g.time(n + 1);

  rhs_ = u;
  if (theta < 1.0) {
    if (!(factor_once_ && factored_)) assembler_.assemble(t0);
    assembler_.apply(u, scratch_);
    rhs_ -= (1.0 - theta) * tau * scratch_;
    scratch_.setZero();
    add_sources(problem_, g, t0, scratch_);
    rhs_ += (1.0 - theta) * tau * scratch_;
  }
  scratch_ = Vector::Zero(u.size());
  add_sources(problem_, g, t1, scratch_);
  rhs_ += theta * tau * scratch_;

  if (!(factor_once_ && factored_)) {
    assembler_.assemble(t1);
    const SparseMatrix& k = assembler_.stiffness();
    const double* kv = k.valuePtr();
    double* sv = system_.valuePtr();
    for (Eigen::Index i = 0; i < k.nonZeros(); ++i) sv[i] = theta * tau * kv[i];
    for (int slot : diagonal_slots_) sv[slot] += 1.0;
    solver_.factorize(system_);
    factored_ = true;
  }

  // Dirichlet data at t_{n+1} enters through the boundary columns.
  scratch_.setZero();
  bool any_boundary = false;
  for (int node = 0; node < g.nspace(); ++node) {
    if (!assembler_.boundary()[node]) continue;
    any_boundary = true;
    const Point x = g.point(node);
    for (int alpha = 0; alpha < m; ++alpha) {
      scratch_[node * m + alpha] = problem_.g ? problem_.g(x, t1, alpha) : 0.0;
    }
  }
  if (any_boundary) {
    rhs_ -= theta * tau * (assembler_.coupling() * scratch_);
    for (int node = 0; node < g.nspace(); ++node) {
      if (!assembler_.boundary()[node]) continue;
      for (int alpha = 0; alpha < m; ++alpha) rhs_[node * m + alpha] = scratch_[node * m + alpha];
    }
  }

  const SolveStats s = solver_.solve(rhs_, u);
  ++stats_.steps;
  stats_.max_iterations = std::max(stats_.max_iterations, s.iterations);
  stats_.max_residual = std::max(stats_.max_residual, s.residual);
}

Vector theta_step(const ParabolicProblem& problem, const SpaceTimeGrid& grid,
                  const SolverConfig& config, const Vector& u_n, int n) {
  ThetaStepper stepper(problem, grid, config);
  Vector u = u_n;
  stepper.step(u, n);
  return u;
}

Vector initial_values(const ParabolicProblem& problem, const SpaceTimeGrid& g) {
  const int m = problem.coeff.m;
  const double t = g.t_start();
  Vector u = Vector::Zero(Eigen::Index(g.nspace()) * m);
  for (int node = 0; node < g.nspace(); ++node) {
    const Point x = g.point(node);
    for (int alpha = 0; alpha < m; ++alpha) {
      const double h = problem.h0 ? problem.h0(x, t, alpha) : 0.0;
      if (g.on_boundary(node)) {
        const double b = problem.g ? problem.g(x, t, alpha) : 0.0;
        if (std::abs(b - h) > 1e-10) {
          std::ostringstream os;
          os << "initial data and boundary data disagree at x=(" << x[0] << ", " << x[1]
             << "): " << h << " vs " << b;
          throw DomainError(os.str());
        }
        u[node * m + alpha] = b;
      } else {
        u[node * m + alpha] = h;
      }
    }
  }
  return u;
}

Field solve_ivp(const ParabolicProblem& problem, const SpaceTimeGrid& grid,
                const SolverConfig& config, StepStats* stats) {
  validate(config);
  if (config.enforce_resolution) check_resolution(problem.coeff, grid);
  const int levels = grid.levels();
  int first = 0;
  if (config.store_start > grid.t_start()) {
    first = int(std::ceil((config.store_start - grid.t_start()) / grid.tau() - 1e-9));
    first = std::min(first, levels - 1);
  }
  const int stride = config.store_stride;
  const int count = (levels - 1 - first) / stride + 1;
  Field out(grid.subsample(first, stride, count), problem.coeff.m);

  ThetaStepper stepper(problem, grid, config);
  Vector u = initial_values(problem, grid);
  auto store = [&](int level) {
    if (level < first || (level - first) % stride != 0) return;
    const int k = (level - first) / stride;
    if (k >= count) return;
    std::copy(u.data(), u.data() + u.size(), out.level(k).begin());
  };
  store(0);
  for (int n = 0; n + 1 < levels; ++n) {
    stepper.step(u, n);
    store(n + 1);
  }
  if (stats) *stats = stepper.stats();
  return out;
}

Field residual(const ParabolicProblem& problem, const Field& field, Averaging averaging) {
  const SpaceTimeGrid& g = field.grid();
  const int m = field.m();
  if (m != problem.coeff.m) throw DomainError("field and problem component counts differ");
  Field out(g, m);
  OperatorAssembler assembler(problem.coeff, g, averaging);
  const Eigen::Index n = Eigen::Index(g.nspace()) * m;
  Vector u(n), prev(n), lu, src;
  for (int level = 1; level < g.levels(); ++level) {
    const double t = g.time(level);
    for (Eigen::Index k = 0; k < n; ++k) {
      u[k] = field.values()[std::size_t(level) * n + k];
      prev[k] = field.values()[std::size_t(level - 1) * n + k];
    }
    if (level == 1 || !problem.coeff.time_independent) assembler.assemble(t);
    assembler.apply(u, lu);
    src = Vector::Zero(n);
    add_sources(problem, g, t, src);
    auto dst = out.level(level);
    for (int node = 0; node < g.nspace(); ++node) {
      if (g.on_boundary(node)) continue;
      for (int alpha = 0; alpha < m; ++alpha) {
        const int k = node * m + alpha;
        dst[k] = (u[k] - prev[k]) / g.tau() + lu[k] - src[k];
      }
    }
  }
  return out;
}

}  // namespace parahom
