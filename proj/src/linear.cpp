#include "parahom/linear.hpp"

#include <lapacke.h>

#include <algorithm>
#include <Eigen/SparseLU>

#include "parahom/error.hpp"

namespace parahom {

void PatternAssembly::begin() {
  cursor_ = 0;
  if (finalized_) {
    std::fill(matrix_.valuePtr(), matrix_.valuePtr() + matrix_.nonZeros(), 0.0);
  } else {
    rows_.clear();
    cols_.clear();
    vals_.clear();
  }
}

const SparseMatrix& PatternAssembly::finish() {
  if (finalized_) {
    if (cursor_ != slots_.size()) throw Error("assembly emitted a different pattern");
    return matrix_;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(rows_.size());
  for (std::size_t k = 0; k < rows_.size(); ++k) triplets.emplace_back(rows_[k], cols_[k], vals_[k]);
  matrix_.resize(n_, n_);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
  slots_.resize(rows_.size());
  const int* outer = matrix_.outerIndexPtr();
  const int* inner = matrix_.innerIndexPtr();
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const int* first = inner + outer[rows_[k]];
    const int* last = inner + outer[rows_[k] + 1];
    slots_[k] = int(std::lower_bound(first, last, cols_[k]) - inner);
  }
  rows_ = {};
  cols_ = {};
  vals_ = {};
  finalized_ = true;
  return matrix_;
}

struct LinearSolver::Impl {
  Backend backend;
  int n = 0;
  int kl = 0;
  int ku = 0;
  std::vector<double> ab;
  std::vector<lapack_int> ipiv;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;

  void apply_inverse(Vector& x) const {
    if (backend == Backend::banded) {
      const lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, kl, ku, 1, ab.data(),
                                             2 * kl + ku + 1, ipiv.data(), x.data(), n);
      if (info != 0) throw SolverError("banded triangular solve failed", 0, 0.0);
    } else {
      x = lu.solve(x).eval();
    }
  }
};

LinearSolver::LinearSolver(double tolerance, int max_iterations)
    : tolerance_(tolerance), max_iterations_(max_iterations) {
  if (!(tolerance > 0.0)) throw DomainError("solver tolerance must be positive");
  if (max_iterations < 1) throw DomainError("max_iterations must be at least 1");
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

LinearSolver::Backend LinearSolver::backend() const {
  if (!impl_) throw Error("solver not factorized");
  return impl_->backend;
}

void LinearSolver::factorize(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw DomainError("linear system must be square");
  a_ = a;
  auto impl = std::make_unique<Impl>();
  const int n = int(a.rows());
  impl->n = n;
  int kl = 0;
  int ku = 0;
  for (int r = 0; r < n; ++r) {
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      kl = std::max(kl, r - int(it.col()));
      ku = std::max(ku, int(it.col()) - r);
    }
  }
  if (std::max(kl, ku) <= 16) {
    impl->backend = Backend::banded;
    impl->kl = kl;
    impl->ku = ku;
    const int ldab = 2 * kl + ku + 1;
    impl->ab.assign(std::size_t(ldab) * n, 0.0);
    for (int r = 0; r < n; ++r) {
      for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
        const int c = int(it.col());
        impl->ab[std::size_t(c) * ldab + kl + ku + r - c] = it.value();
      }
    }
    impl->ipiv.resize(n);
    const lapack_int info =
        LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, kl, ku, impl->ab.data(), ldab, impl->ipiv.data());
    if (info != 0) throw SolverError("banded LU factorization is singular", 0, 0.0);
  } else {
    impl->backend = Backend::sparse_lu;
    Eigen::SparseMatrix<double> col = a;
    impl->lu.compute(col);
    if (impl->lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed", 0, 0.0);
  }
  impl_ = std::move(impl);
}

SolveStats LinearSolver::solve(const Vector& b, Vector& x) const {
  if (!impl_) throw Error("solver not factorized");
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x = Vector::Zero(b.size());
    return {0, 0.0};
  }
  x = b;
  impl_->apply_inverse(x);
  SolveStats stats{1, 0.0};
  Vector r = b - a_ * x;
  stats.residual = r.norm() / bnorm;
  while (stats.residual > tolerance_) {
    if (stats.iterations >= max_iterations_) {
      throw SolverError("linear solve did not reach tolerance", stats.iterations, stats.residual);
    }
    impl_->apply_inverse(r);
    x += r;
    r = b - a_ * x;
    stats.residual = r.norm() / bnorm;
    ++stats.iterations;
  }
  return stats;
}

SolveStats solve_linear(const SparseMatrix& a, const Vector& b, Vector& x, double tolerance,
                        int max_iterations) {
  LinearSolver solver(tolerance, max_iterations);
  solver.factorize(a);
  return solver.solve(b, x);
}

}  // namespace parahom
