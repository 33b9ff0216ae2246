#include "parahom/cell.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "parahom/error.hpp"

namespace parahom {

namespace {

struct FaceTable {
  std::array<std::vector<Tensor>, 2> faces;
};

// Face coefficients on the periodic cell grid at time s: faces[axis][node of lower end].
FaceTable face_table(const Coefficient& coeff, const SpaceTimeGrid& g, Averaging averaging, double s) {
  FaceTable table;
  for (int a = 0; a < g.d(); ++a) {
    auto& f = table.faces[a];
    f.resize(g.nspace());
    for (int node = 0; node < g.nspace(); ++node) {
      const auto [i0, i1] = g.index(node);
      f[node] = face_coefficient(coeff, g, averaging, a, i0, i1, s);
    }
  }
  return table;
}

int shift(const SpaceTimeGrid& g, int node, int axis, int delta) {
  auto idx = g.index(node);
  const int n = g.nodes(axis);
  idx[axis] = ((idx[axis] + delta) % n + n) % n;
  return g.node(idx[0], idx[1]);
}

// Discrete div of the coefficient column a_{.j}^{.beta} at face midpoints.
void column_divergence(const FaceTable& table, const SpaceTimeGrid& g, int m, int j, int beta,
                       Vector& out) {
  out = Vector::Zero(Eigen::Index(g.nspace()) * m);
  for (int node = 0; node < g.nspace(); ++node) {
    for (int a = 0; a < g.d(); ++a) {
      const Tensor& up = table.faces[a][node];
      const Tensor& down = table.faces[a][shift(g, node, a, -1)];
      for (int alpha = 0; alpha < m; ++alpha) {
        out[node * m + alpha] += (up(a * m + alpha, j * m + beta) - down(a * m + alpha, j * m + beta)) / g.h(a);
      }
    }
  }
}

CorrectorSet solve_periodic(const CoefficientField& field, Coefficient coeff, CorrectorKind kind,
                            const CellOptions& opt) {
  const int d = field.d();
  const int m = field.m();
  const int ns = opt.space > 0 ? opt.space : (d == 1 ? 256 : 128);
  const int nt = opt.time > 0 ? opt.time : (d == 1 ? 256 : 128);
  if (ns < 4 || nt < 1) throw DomainError("cell grid needs at least 4 space nodes and 1 time step");
  if (!(opt.tolerance > 0.0) || opt.max_sweeps < 1) throw DomainError("invalid fixed-point settings");

  CorrectorSet set;
  set.kind = kind;
  set.d = d;
  set.m = m;
  set.grid = build_grid(Box{d, {0.0, 0.0}, {1.0, 1.0}}, 1.0 / ns, 1.0 / nt, {0.0, 1.0}, true);
  set.coeff = coeff;
  set.averaging = opt.averaging;
  const SpaceTimeGrid& g = set.grid;
  const int cols = d * m;
  const Eigen::Index n = Eigen::Index(g.nspace()) * m;
  set.chi.assign(cols, Field(g, m));

  OperatorAssembler assembler(coeff, g, opt.averaging);
  assembler.assemble(g.time(1));
  SparseMatrix system = assembler.stiffness();
  std::vector<int> diag(system.rows());
  for (int r = 0; r < system.rows(); ++r) {
    const int* first = system.innerIndexPtr() + system.outerIndexPtr()[r];
    const int* last = system.innerIndexPtr() + system.outerIndexPtr()[r + 1];
    diag[r] = int(std::lower_bound(first, last, r) - system.innerIndexPtr());
  }
  LinearSolver solver(opt.linear_tolerance, 20);
  const bool frozen = coeff.time_independent;
  bool factored = false;
  std::vector<Vector> rhs_cache(cols);

  std::vector<Vector> u(cols, Vector::Zero(n));
  std::vector<Vector> start(cols);
  Vector rhs;
  double prev_diff = -1.0;
  bool converged = false;
  for (int sweep = 1; sweep <= opt.max_sweeps && !converged; ++sweep) {
    for (int c = 0; c < cols; ++c) {
      start[c] = u[c];
      std::copy(u[c].data(), u[c].data() + n, set.chi[c].level(0).begin());
    }
    for (int step = 0; step < nt; ++step) {
      const double s = g.time(step + 1);
      if (!(frozen && factored)) {
        assembler.assemble(s);
        const double* kv = assembler.stiffness().valuePtr();
        double* sv = system.valuePtr();
        for (Eigen::Index i = 0; i < system.nonZeros(); ++i) sv[i] = g.tau() * kv[i];
        for (int slot : diag) sv[slot] += 1.0;
        solver.factorize(system);
        const FaceTable table = face_table(coeff, g, opt.averaging, s);
        for (int c = 0; c < cols; ++c) column_divergence(table, g, m, c / m, c % m, rhs_cache[c]);
        factored = true;
      }
      for (int c = 0; c < cols; ++c) {
        rhs = u[c] + g.tau() * rhs_cache[c];
        solver.solve(rhs, u[c]);
        std::copy(u[c].data(), u[c].data() + n, set.chi[c].level(step + 1).begin());
      }
    }
    double diff = 0.0;
    for (int c = 0; c < cols; ++c) diff = std::max(diff, (u[c] - start[c]).lpNorm<Eigen::Infinity>());
    set.sweeps = sweep;
    set.contraction = prev_diff > 0.0 ? diff / prev_diff : 0.0;
    prev_diff = diff;
    converged = diff <= opt.tolerance;
  }
  if (!converged) {
    std::ostringstream os;
    os << "corrector period map did not converge (contraction factor " << set.contraction << ")";
    throw SolverError(os.str(), set.sweeps, prev_diff);
  }

  for (auto& chi : set.chi) {
    for (int alpha = 0; alpha < m; ++alpha) {
      double mean = 0.0;
      for (int level = 0; level < nt; ++level)
        for (int node = 0; node < g.nspace(); ++node) mean += chi(level, node, alpha);
      mean /= double(nt) * g.nspace();
      for (int level = 0; level <= nt; ++level)
        for (int node = 0; node < g.nspace(); ++node) chi(level, node, alpha) -= mean;
    }
    for (int k = 0; k < g.nspace() * m; ++k) {
      set.periodicity_defect = std::max(set.periodicity_defect, std::abs(chi.level(0)[k] - chi.level(nt)[k]));
    }
  }
  return set;
}

double frac(double x) {
  const double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

}  // namespace

CorrectorSet solve_cell_problem(const CoefficientField& field, const CellOptions& options) {
  return solve_periodic(field, make_coefficient(field, 1.0), CorrectorKind::forward, options);
}

CorrectorSet solve_adjoint_cell_problem(const CoefficientField& field, const CellOptions& options) {
  return solve_periodic(field, make_coefficient(adjoint_field(field), 1.0, true),
                        CorrectorKind::adjoint, options);
}

Tensor coefficient_average(const CorrectorSet& set) {
  const SpaceTimeGrid& g = set.grid;
  if (set.coeff.constant) return set.coeff.eval({0.0, 0.0}, 0.0);
  const int m = set.m;
  const int dim = set.d * m;
  Tensor avg = Tensor::Zero(dim, dim);
  for (int level = 1; level < g.levels(); ++level) {
    const FaceTable table = face_table(set.coeff, g, set.averaging, g.time(level));
    for (int i = 0; i < set.d; ++i)
      for (const Tensor& a : table.faces[i]) avg.middleRows(i * m, m) += a.middleRows(i * m, m);
  }
  return avg / (double(g.levels() - 1) * g.nspace());
}

Tensor corrector_flux_average(const CorrectorSet& set) {
  const SpaceTimeGrid& g = set.grid;
  const int m = set.m;
  const int d = set.d;
  const int dim = d * m;
  Tensor sum = Tensor::Zero(dim, dim);
  for (int level = 1; level < g.levels(); ++level) {
    const FaceTable table = face_table(set.coeff, g, set.averaging, g.time(level));
    for (int i = 0; i < d; ++i) {
      for (int lo = 0; lo < g.nspace(); ++lo) {
        const Tensor& a = table.faces[i][lo];
        const int up = shift(g, lo, i, 1);
        for (int col = 0; col < dim; ++col) {
          const Field& chi = set.chi[col];
          for (int gamma = 0; gamma < m; ++gamma) {
            std::array<double, 2> grad{};
            grad[i] = (chi(level, up, gamma) - chi(level, lo, gamma)) / g.h(i);
            for (int l = 0; l < d; ++l) {
              if (l == i) continue;
              grad[l] = (chi(level, shift(g, lo, l, 1), gamma) - chi(level, shift(g, lo, l, -1), gamma) +
                         chi(level, shift(g, up, l, 1), gamma) - chi(level, shift(g, up, l, -1), gamma)) /
                        (4.0 * g.h(l));
            }
            for (int alpha = 0; alpha < m; ++alpha)
              for (int l = 0; l < d; ++l) sum(i * m + alpha, col) += a(i * m + alpha, l * m + gamma) * grad[l];
          }
        }
      }
    }
  }
  return sum / (double(g.levels() - 1) * g.nspace());
}

namespace {

HomogenizedTensor certify(Tensor entries) {
  HomogenizedTensor h;
  const Tensor sym = 0.5 * (entries + entries.transpose());
  Eigen::SelfAdjointEigenSolver<Tensor> eig(sym, Eigen::EigenvaluesOnly);
  h.mu = eig.eigenvalues().minCoeff();
  h.mu1 = eig.eigenvalues().maxCoeff();
  h.entries = std::move(entries);
  return h;
}

}  // namespace

HomogenizedTensor homogenized_tensor(const CorrectorSet& forward) {
  if (forward.kind != CorrectorKind::forward) throw DomainError("primal formula needs forward correctors");
  return certify(coefficient_average(forward) + corrector_flux_average(forward));
}

HomogenizedTensor homogenized_tensor_dual(const CorrectorSet& adjoint) {
  if (adjoint.kind != CorrectorKind::adjoint) throw DomainError("dual formula needs adjoint correctors");
  const Tensor b = coefficient_average(adjoint) + corrector_flux_average(adjoint);
  return certify(b.transpose());
}

HomCertificate hom_ellipticity_check(const HomogenizedTensor& tensor, double mu, double tolerance) {
  HomCertificate cert{mu, tensor.mu, tensor.mu1};
  if (tensor.mu < mu - tolerance) {
    std::ostringstream os;
    os << "homogenized tensor lower bound " << tensor.mu << " is below the field constant " << mu;
    throw CheckFailure(os.str());
  }
  return cert;
}

double interpolate_corrector(const CorrectorSet& set, int col, int alpha, const Point& y, double s) {
  const SpaceTimeGrid& g = set.grid;
  const Field& chi = set.chi.at(col);
  const double sigma = frac(set.kind == CorrectorKind::adjoint ? -s : s) * (g.levels() - 1);
  const int l0 = std::min(int(sigma), g.levels() - 2);
  const double wt = sigma - l0;
  std::array<int, 2> i0{0, 0};
  std::array<double, 2> w{0.0, 0.0};
  for (int a = 0; a < g.d(); ++a) {
    const double z = frac(y[a]) * g.nodes(a);
    i0[a] = std::min(int(z), g.nodes(a) - 1);
    w[a] = z - i0[a];
  }
  double value = 0.0;
  const int corners = g.d() == 2 ? 4 : 2;
  for (int c = 0; c < corners; ++c) {
    const int b0 = c & 1, b1 = (c >> 1) & 1;
    const int node = g.node((i0[0] + b0) % g.nodes(0), (i0[1] + b1) % g.nodes(1));
    const double ws = (b0 ? w[0] : 1.0 - w[0]) * (g.d() == 2 ? (b1 ? w[1] : 1.0 - w[1]) : 1.0);
    if (ws == 0.0) continue;
    value += ws * ((1.0 - wt) * chi(l0, node, alpha) + (wt > 0.0 ? wt * chi(l0 + 1, node, alpha) : 0.0));
  }
  return value;
}

std::vector<double> corrector_equation_residual(const CoefficientField& field, const CorrectorSet& set,
                                                double epsilon, const SpaceTimeGrid& ambient) {
  if (set.kind != CorrectorKind::forward) throw DomainError("residual needs forward correctors");
  if (ambient.periodic()) throw DomainError("ambient grid must be a box grid");
  ParabolicProblem problem;
  problem.coeff = make_coefficient(field, epsilon);
  check_resolution(problem.coeff, ambient);
  const int m = set.m;
  std::vector<double> out;
  for (int col = 0; col < set.d * m; ++col) {
    const int j = col / m, beta = col % m;
    Field u(ambient, m);
    for (int level = 0; level < ambient.levels(); ++level) {
      const double s = ambient.time(level) / (epsilon * epsilon);
      for (int node = 0; node < ambient.nspace(); ++node) {
        const Point x = ambient.point(node);
        const Point y{x[0] / epsilon, x[1] / epsilon};
        for (int gamma = 0; gamma < m; ++gamma) {
          u(level, node, gamma) = epsilon * interpolate_corrector(set, col, gamma, y, s) +
                                  (gamma == beta ? x[j] : 0.0);
        }
      }
    }
    const Field r = residual(problem, u, set.averaging);
    double sum = 0.0;
    long count = 0;
    for (int level = 1; level < ambient.levels(); ++level) {
      for (int node = 0; node < ambient.nspace(); ++node) {
        if (ambient.on_boundary(node)) continue;
        for (int gamma = 0; gamma < m; ++gamma) sum += r(level, node, gamma) * r(level, node, gamma);
        ++count;
      }
    }
    out.push_back(count ? std::sqrt(sum / count) : 0.0);
  }
  return out;
}

}  // namespace parahom
