#include "parahom/rotation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "parahom/error.hpp"

namespace parahom {

namespace {

/// Inverse by adjugate; d <= 3.
RationalMatrix inverse(const RationalMatrix& a) {
  const int d = a.d;
  RationalMatrix inv{d, std::vector<Rational>(d * d)};
  if (d == 2) {
    const Rational det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    inv(0, 0) = a(1, 1) / det;
    inv(0, 1) = -a(0, 1) / det;
    inv(1, 0) = -a(1, 0) / det;
    inv(1, 1) = a(0, 0) / det;
    return inv;
  }
  auto cof = [&](int i, int j) {
    const int r0 = (i + 1) % 3, r1 = (i + 2) % 3, c0 = (j + 1) % 3, c1 = (j + 2) % 3;
    return Rational(a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0));
  };
  const Rational det = a(0, 0) * cof(0, 0) + a(0, 1) * cof(0, 1) + a(0, 2) * cof(0, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) inv(j, i) = cof(i, j) / det;
  return inv;
}

/// Signed permutation matrices with determinant +1.
std::vector<Eigen::MatrixXd> proper_signed_permutations(int d) {
  std::vector<Eigen::MatrixXd> out;
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (int signs = 0; signs < (1 << d); ++signs) {
      Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
      for (int i = 0; i < d; ++i) p(i, perm[i]) = (signs >> i) & 1 ? -1.0 : 1.0;
      if (p.determinant() > 0) out.push_back(p);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

RationalMatrix exact(const Eigen::MatrixXd& m) {
  const int d = int(m.rows());
  RationalMatrix r{d, std::vector<Rational>(d * d)};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) r(i, j) = Rational(m(i, j));
  return r;
}

}  // namespace

RationalMatrix RationalMatrix::identity(int d) {
  RationalMatrix r{d, std::vector<Rational>(d * d, Rational(0))};
  for (int i = 0; i < d; ++i) r(i, i) = 1;
  return r;
}

RationalMatrix RationalMatrix::operator*(const RationalMatrix& o) const {
  RationalMatrix r{d, std::vector<Rational>(d * d, Rational(0))};
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < d; ++j) r(i, j) += (*this)(i, k) * o(k, j);
  return r;
}

RationalMatrix RationalMatrix::transpose() const {
  RationalMatrix r{d, entries};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) r(i, j) = (*this)(j, i);
  return r;
}

Eigen::MatrixXd RationalMatrix::to_double() const {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = static_cast<double>((*this)(i, j));
  return m;
}

bool exactly_orthogonal(const RationalMatrix& r) { return r.transpose() * r == RationalMatrix::identity(r.d); }

Rational best_rational(double x, long long max_den) {
  if (max_den < 1) throw DomainError("best_rational needs a positive denominator bound");
  const bool negative = x < 0;
  const Rational target(std::abs(x));
  Integer n = numerator(target), d = denominator(target);
  Integer p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  const Integer bound = max_den;
  while (true) {
    const Integer a = n / d;
    const Integer q2 = q0 + a * q1;
    if (q2 > bound) break;
    const Integer p2 = p0 + a * p1;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const Integer rest = n - a * d;
    n = d;
    d = rest;
    if (d == 0) break;
  }
  Rational best;
  if (d == 0) {
    best = Rational(p1, q1);
  } else {
    const Integer k = (bound - q0) / q1;
    const Rational lower(p0 + k * p1, q0 + k * q1), upper(p1, q1);
    best = abs(upper - target) <= abs(lower - target) ? upper : lower;
  }
  return negative ? Rational(-best) : best;
}

RationalRotation rational_rotation(const Eigen::MatrixXd& O, double delta) {
  const int d = int(O.rows());
  if ((d != 2 && d != 3) || O.cols() != d) throw DomainError("rational_rotation needs a 2x2 or 3x3 matrix");
  if (!(delta > 0.0)) throw DomainError("rational_rotation needs delta > 0");
  const double det = O.determinant();
  if ((O.transpose() * O - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-12 ||
      std::abs(std::abs(det) - 1.0) > 1e-12) {
    throw DomainError("input is not orthogonal within 1e-12");
  }

  // O = P * O2 * D with D a coordinate reflection when det = -1 and P chosen so that I + O2
  // is as far from singular as possible.
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(d, d);
  if (det < 0) D(d - 1, d - 1) = -1.0;
  const Eigen::MatrixXd proper = O * D;
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d);
  double best = -1.0;
  for (const auto& cand : proper_signed_permutations(d)) {
    const double v = std::abs((Eigen::MatrixXd::Identity(d, d) + cand.transpose() * proper).determinant());
    if (v > best + 1e-12) {
      best = v;
      P = cand;
    }
  }
  const Eigen::MatrixXd O2 = P.transpose() * proper;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd S0 = (I - O2) * (I + O2).inverse();

  const RationalMatrix outer_left = exact(P), outer_right = exact(D), target = exact(O);
  const Rational bound(delta);
  const RationalMatrix id = RationalMatrix::identity(d);
  for (long long q = 1; q > 0 && q <= (1LL << 62); q *= 2) {
    RationalMatrix S{d, std::vector<Rational>(d * d, Rational(0))};
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        S(i, j) = best_rational(0.5 * (S0(i, j) - S0(j, i)), q);
        S(j, i) = -S(i, j);
      }
    RationalMatrix minus = id, plus = id;
    for (std::size_t k = 0; k < S.entries.size(); ++k) {
      minus.entries[k] -= S.entries[k];
      plus.entries[k] += S.entries[k];
    }
    const RationalMatrix R = outer_left * (minus * inverse(plus)) * outer_right;
    Rational worst = 0;
    for (std::size_t k = 0; k < R.entries.size(); ++k) worst = std::max(worst, Rational(abs(R.entries[k] - target.entries[k])));
    if (worst < bound) {
      RationalRotation out;
      out.matrix = R;
      out.error = static_cast<double>(worst);
      out.max_denominator = 1;
      for (const auto& e : R.entries) out.max_denominator = std::max(out.max_denominator, Integer(denominator(e)));
      return out;
    }
  }
  throw SolverError("rational_rotation did not reach the requested accuracy", 63, delta);
}

}  // namespace parahom
