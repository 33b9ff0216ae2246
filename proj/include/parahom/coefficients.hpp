#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace parahom {

/// Coefficient tensor a_{ij}^{ab} stored as a (d*m) x (d*m) matrix with row index i*m + a
/// and column index j*m + b (spatial index major, component index minor).
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

/// Spatial point; entries beyond the active dimension are ignored.
using Point = std::array<double, 2>;

enum class Variant { constant, fourier, checkerboard, separable_space, separable_time };
enum class Wave { sine, cosine };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);
std::string to_string(Wave w);
Wave wave_from_string(const std::string& name);

/// One term amplitude * wave(2 pi (k . y + l s)) added to tensor entry (row, col).
struct FourierMode {
  int row = 0;
  int col = 0;
  std::array<int, 2> k{0, 0};
  int l = 0;
  double amplitude = 0.0;
  Wave wave = Wave::sine;

  bool operator==(const FourierMode&) const = default;
};

/// Scalar 1-periodic profile p(z) = mean + sum amplitude * wave(2 pi k z).
struct Profile {
  struct Mode {
    int k = 1;
    double amplitude = 0.0;
    Wave wave = Wave::sine;
    bool operator==(const Mode&) const = default;
  };

  double mean = 1.0;
  std::vector<Mode> modes;

  double operator()(double z) const;
  bool operator==(const Profile&) const = default;
};

/// Declarative description of an admissible periodic coefficient.
///
///  - constant:        A = tensor
///  - fourier:         A = tensor + sum of modes
///  - checkerboard:    A = cells[c] * tensor on a uniform partition of the unit cell;
///                     cell_shape lists the counts per space axis then time, x fastest
///  - separable_space: A = profile(y_1) * tensor
///  - separable_time:  A = profile(s) * tensor
///
/// An empty `tensor` means the identity.
struct CoefficientSpec {
  Variant variant = Variant::constant;
  int d = 1;
  int m = 1;
  std::vector<double> tensor;
  std::vector<FourierMode> modes;
  std::vector<double> cells;
  std::vector<int> cell_shape;
  Profile profile;
  std::optional<double> mu;

  bool operator==(const CoefficientSpec&) const = default;
};

/// Sample counts per space axis and in time for lattice-based certificates.
struct SampleResolution {
  int space = 64;
  int time = 64;
};

/// Immutable 1-periodic tensor field A(y, s) with a certified ellipticity constant.
class CoefficientField {
 public:
  int d() const { return spec_.d; }
  int m() const { return spec_.m; }
  int dim() const { return spec_.d * spec_.m; }
  double mu() const { return mu_; }
  const CoefficientSpec& spec() const { return spec_; }
  bool transposed() const { return transposed_; }

  bool time_independent() const;
  bool space_independent() const;
  bool is_constant() const { return time_independent() && space_independent(); }

  /// Exact closed-form value; arguments are reduced modulo 1 first.
  Tensor evaluate(const Point& y, double s) const;

 private:
  friend CoefficientField make_field(const CoefficientSpec& spec);
  friend CoefficientField adjoint_field(const CoefficientField& field);

  Tensor raw(const Point& y, double s) const;

  CoefficientSpec spec_;
  Tensor base_;
  double mu_ = 0.0;
  bool transposed_ = false;
};

/// Validates `spec`, spot-checks periodicity and ellipticity, and returns the field.
/// Throws ConfigError for malformed parameters and EllipticityError when a sample
/// violates the declared mu (or the form is not positive definite).
CoefficientField make_field(const CoefficientSpec& spec);

/// Pointwise index transposition b_{ij}^{ab} = a_{ji}^{ba}.
CoefficientField adjoint_field(const CoefficientField& field);

/// The oscillating coefficient (x, t) -> A(x / epsilon, sign * t / epsilon^2).
class ScaledCoefficient {
 public:
  ScaledCoefficient(CoefficientField field, double epsilon, bool time_reversed = false);

  Tensor operator()(const Point& x, double t) const;

  const CoefficientField& field() const { return field_; }
  double epsilon() const { return epsilon_; }
  bool time_reversed() const { return time_reversed_; }
  bool time_independent() const { return field_.time_independent(); }

 private:
  CoefficientField field_;
  double epsilon_;
  double epsilon_sq_;
  bool time_reversed_;
};

/// Throws DomainError when epsilon <= 0.
ScaledCoefficient rescale(const CoefficientField& field, double epsilon);

/// Largest mu' with mu'|xi|^2 <= xi.A xi <= |xi|^2 / mu' on the sample lattice.
double ellipticity_constant(const CoefficientField& field, SampleResolution resolution);

struct VmoResolution {
  int centers_space = 32;
  int centers_time = 32;
  int quadrature = 8;
};

/// Estimated modulus A^#(r) at increasing radii.
struct VmoCurve {
  std::vector<double> radii;
  std::vector<double> values;
};

/// Lattice/quadrature estimate of the x-oscillation modulus, with cubes of side 2 rho in
/// place of balls and rho ranging over {r, r/2, r/4, r/8}.
VmoCurve vmo_modulus(const CoefficientField& field, std::vector<double> radii,
                     VmoResolution resolution = {});

struct HolderCertificate {
  double lambda = 1.0;
  double tau = 0.0;
};

/// Max of |A(p) - A(q)| / |p - q|^lambda over lattice pairs at dyadic offsets of
/// 1/resolution. Divergence under refinement flags a field that is not Holder.
HolderCertificate holder_modulus(const CoefficientField& field, double lambda, int resolution);

}  // namespace parahom
