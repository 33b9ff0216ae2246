#pragma once

#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

namespace parahom {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

/// d x d matrix with exact rational entries, row-major.
struct RationalMatrix {
  int d = 0;
  std::vector<Rational> entries;

  Rational& operator()(int i, int j) { return entries[i * d + j]; }
  const Rational& operator()(int i, int j) const { return entries[i * d + j]; }

  static RationalMatrix identity(int d);
  RationalMatrix operator*(const RationalMatrix& other) const;
  RationalMatrix transpose() const;
  Eigen::MatrixXd to_double() const;
  bool operator==(const RationalMatrix&) const = default;
};

struct RationalRotation {
  RationalMatrix matrix;
  Integer max_denominator;
  double error = 0.0;  // max |O_ij - R_ij|
};

/// True when R^T R = I holds exactly.
bool exactly_orthogonal(const RationalMatrix& r);

/// Orthogonal R with rational entries and max |O - R| < delta, det R = det O. Built from the
/// Cayley transform of a rational approximation of the skew matrix (I - O)(I + O)^{-1};
/// reflections and Cayley-singular inputs are first reduced by rational signed permutations.
/// Throws DomainError when d is not 2 or 3, delta <= 0, or O is not orthogonal within 1e-12.
RationalRotation rational_rotation(const Eigen::MatrixXd& O, double delta);

/// Closest fraction to x with denominator at most max_den (continued fractions).
Rational best_rational(double x, long long max_den);

}  // namespace parahom
