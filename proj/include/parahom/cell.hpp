#pragma once

#include <vector>

#include "parahom/coefficients.hpp"
#include "parahom/grid.hpp"
#include "parahom/solver.hpp"

namespace parahom {

struct CellOptions {
  int space = 0;  // nodes per space axis; 0 picks 256 (d=1) or 128 (d=2)
  int time = 0;   // time levels per period; 0 picks the same defaults
  double tolerance = 1e-9;
  int max_sweeps = 200;
  Averaging averaging = Averaging::midpoint;
  double linear_tolerance = 1e-12;

  bool operator==(const CellOptions&) const = default;
};

enum class CorrectorKind { forward, adjoint };

/// Periodic correctors on the unit cell. chi[j * m + beta] is the m-component field
/// chi_j^beta on the periodic cell grid with levels s = 0, 1/Nt, ..., 1. Adjoint correctors
/// are stored in reversed time sigma = -s, i.e. as solutions of the forward problem with
/// coefficient A*(y, -sigma); `coeff` is the evaluator the columns were computed with.
struct CorrectorSet {
  CorrectorKind kind = CorrectorKind::forward;
  int d = 1;
  int m = 1;
  SpaceTimeGrid grid;
  Coefficient coeff;
  Averaging averaging = Averaging::midpoint;
  std::vector<Field> chi;
  int sweeps = 0;
  double contraction = 0.0;
  double periodicity_defect = 0.0;

  const Field& column(int j, int beta) const { return chi[j * m + beta]; }
};

/// Throws SolverError (carrying sweep count and last contraction factor) when the period
/// map does not converge within max_sweeps.
CorrectorSet solve_cell_problem(const CoefficientField& field, const CellOptions& options = {});
CorrectorSet solve_adjoint_cell_problem(const CoefficientField& field, const CellOptions& options = {});

struct HomogenizedTensor {
  Tensor entries;
  double mu = 0.0;   // smallest eigenvalue of the symmetric part
  double mu1 = 0.0;  // largest eigenvalue of the symmetric part
};

/// Cell average of the face fluxes a_{il}^{ag} D_l chi_j^{gb}, as a (dm x dm) matrix with
/// row i*m + alpha and column j*m + beta.
Tensor corrector_flux_average(const CorrectorSet& correctors);

/// Cell average of the coefficient over the face lattice used by the flux average.
Tensor coefficient_average(const CorrectorSet& correctors);

HomogenizedTensor homogenized_tensor(const CorrectorSet& forward);
HomogenizedTensor homogenized_tensor_dual(const CorrectorSet& adjoint);

struct HomCertificate {
  double mu = 0.0;   // field constant the lower bound is checked against
  double lower = 0.0;
  double mu1 = 0.0;
};

/// Throws CheckFailure when the smallest eigenvalue of sym(A_hat) falls below mu - tolerance.
HomCertificate hom_ellipticity_check(const HomogenizedTensor& tensor, double mu,
                                     double tolerance = 1e-3);

/// RMS over interior nodes of the implicit-Euler residual of eps chi(x/eps, t/eps^2) + P_j^beta
/// on `ambient`, one entry per column j * m + beta. The correctors are sampled by periodic
/// multilinear interpolation in (y, s).
std::vector<double> corrector_equation_residual(const CoefficientField& field,
                                                const CorrectorSet& correctors, double epsilon,
                                                const SpaceTimeGrid& ambient);

/// Value of column `col`, component alpha, at cell point (y, s) by periodic interpolation.
double interpolate_corrector(const CorrectorSet& correctors, int col, int alpha, const Point& y,
                             double s);

}  // namespace parahom
