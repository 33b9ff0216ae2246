#pragma once

#include <memory>
#include <vector>

#include <Eigen/Sparse>

namespace parahom {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Vector = Eigen::VectorXd;

/// Fixed-pattern sparse assembly. The first pass records (row, col) of every
/// contribution in emission order; later passes must emit the same sequence and only
/// overwrite values, so the CSR structure is built once.
class PatternAssembly {
 public:
  explicit PatternAssembly(int n) : n_(n) {}

  bool recording() const { return !finalized_; }
  void begin();
  void add(int row, int col, double value) {
    if (finalized_) {
      matrix_.valuePtr()[slots_[cursor_++]] += value;
    } else {
      rows_.push_back(row);
      cols_.push_back(col);
      vals_.push_back(value);
    }
  }
  /// Finishes a pass; returns the assembled matrix.
  const SparseMatrix& finish();
  const SparseMatrix& matrix() const { return matrix_; }

 private:
  int n_;
  bool finalized_ = false;
  std::size_t cursor_ = 0;
  std::vector<int> rows_, cols_;
  std::vector<double> vals_;
  std::vector<int> slots_;
  SparseMatrix matrix_;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
};

/// Direct solver with iterative refinement: LAPACK banded LU when the half-bandwidth
/// is at most 16, sparse LU otherwise. Each refinement sweep counts as one iteration.
class LinearSolver {
 public:
  enum class Backend { banded, sparse_lu };

  LinearSolver(double tolerance, int max_iterations);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  void factorize(const SparseMatrix& a);
  bool factorized() const { return impl_ != nullptr; }
  Backend backend() const;

  /// Throws SolverError when the relative residual stays above tolerance.
  SolveStats solve(const Vector& b, Vector& x) const;

 private:
  struct Impl;
  double tolerance_;
  int max_iterations_;
  SparseMatrix a_;
  std::unique_ptr<Impl> impl_;
};

SolveStats solve_linear(const SparseMatrix& a, const Vector& b, Vector& x, double tolerance,
                        int max_iterations);

}  // namespace parahom
