#include "parahom/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "parahom/error.hpp"

namespace parahom {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double frac(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

double wave_value(Wave w, double arg) { return w == Wave::sine ? std::sin(arg) : std::cos(arg); }

// Extreme eigenvalues of the symmetric part, i.e. the range of xi.A xi / |xi|^2.
std::pair<double, double> form_range(const Tensor& a) {
  if (a.rows() == 1) return {a(0, 0), a(0, 0)};
  const Tensor sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Tensor> eig(sym, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

template <class Visit>
void for_each_sample(const CoefficientField& field, SampleResolution res, Visit&& visit) {
  const int ns = field.space_independent() ? 1 : res.space;
  const int nt = field.time_independent() ? 1 : res.time;
  const int n1 = field.d() == 2 ? ns : 1;
  for (int it = 0; it < nt; ++it) {
    const double s = double(it) / nt;
    for (int i1 = 0; i1 < n1; ++i1) {
      for (int i0 = 0; i0 < ns; ++i0) {
        const Point y{double(i0) / ns, double(i1) / n1};
        visit(y, s, field.evaluate(y, s));
      }
    }
  }
}

std::string describe_sample(const Point& y, double s, int d) {
  std::ostringstream os;
  os << "y=(" << y[0];
  if (d == 2) os << ", " << y[1];
  os << "), s=" << s;
  return os.str();
}

void validate_spec(const CoefficientSpec& spec) {
  if (spec.d != 1 && spec.d != 2) throw ConfigError("coefficient.d", "must be 1 or 2");
  if (spec.m != 1 && spec.m != 2) throw ConfigError("coefficient.m", "must be 1 or 2");
  const int n = spec.d * spec.m;
  if (!spec.tensor.empty() && int(spec.tensor.size()) != n * n) {
    throw ConfigError("coefficient.tensor", "expected " + std::to_string(n * n) + " entries");
  }
  for (double v : spec.tensor) {
    if (!std::isfinite(v)) throw ConfigError("coefficient.tensor", "non-finite entry");
  }
  if (spec.mu && !(*spec.mu > 0.0 && *spec.mu <= 1.0)) {
    throw ConfigError("coefficient.mu", "must lie in (0, 1]");
  }
  switch (spec.variant) {
    case Variant::constant:
      break;
    case Variant::fourier:
      for (const auto& mode : spec.modes) {
        if (mode.row < 0 || mode.row >= n || mode.col < 0 || mode.col >= n) {
          throw ConfigError("coefficient.modes", "entry index out of range");
        }
        if (spec.d == 1 && mode.k[1] != 0) {
          throw ConfigError("coefficient.modes", "second wave number given for d=1");
        }
        if (!std::isfinite(mode.amplitude)) {
          throw ConfigError("coefficient.modes", "non-finite amplitude");
        }
      }
      break;
    case Variant::checkerboard: {
      const auto& shape = spec.cell_shape;
      if (int(shape.size()) != spec.d && int(shape.size()) != spec.d + 1) {
        throw ConfigError("coefficient.cell_shape", "expected d or d+1 counts");
      }
      long count = 1;
      for (int c : shape) {
        if (c <= 0) throw ConfigError("coefficient.cell_shape", "counts must be positive");
        count *= c;
      }
      if (count != long(spec.cells.size())) {
        throw ConfigError("coefficient.cells",
                          "expected " + std::to_string(count) + " cell values");
      }
      for (double v : spec.cells) {
        if (!std::isfinite(v)) throw ConfigError("coefficient.cells", "non-finite value");
      }
      break;
    }
    case Variant::separable_space:
    case Variant::separable_time:
      if (!std::isfinite(spec.profile.mean)) {
        throw ConfigError("coefficient.profile", "non-finite mean");
      }
      break;
  }
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::constant: return "constant";
    case Variant::fourier: return "fourier";
    case Variant::checkerboard: return "checkerboard";
    case Variant::separable_space: return "separable-space";
    case Variant::separable_time: return "separable-time";
  }
  return "constant";
}

Variant variant_from_string(const std::string& name) {
  for (Variant v : {Variant::constant, Variant::fourier, Variant::checkerboard,
                    Variant::separable_space, Variant::separable_time}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("coefficient.variant", "unknown variant '" + name + "'");
}

std::string to_string(Wave w) { return w == Wave::sine ? "sin" : "cos"; }

Wave wave_from_string(const std::string& name) {
  if (name == "sin") return Wave::sine;
  if (name == "cos") return Wave::cosine;
  throw ConfigError("wave", "expected 'sin' or 'cos', got '" + name + "'");
}

double Profile::operator()(double z) const {
  const double zr = frac(z);
  double v = mean;
  for (const auto& mode : modes) v += mode.amplitude * wave_value(mode.wave, kTwoPi * mode.k * zr);
  return v;
}

bool CoefficientField::time_independent() const {
  switch (spec_.variant) {
    case Variant::constant:
    case Variant::separable_space:
      return true;
    case Variant::separable_time:
      return spec_.profile.modes.empty();
    case Variant::fourier:
      return std::all_of(spec_.modes.begin(), spec_.modes.end(),
                         [](const FourierMode& f) { return f.l == 0 || f.amplitude == 0.0; });
    case Variant::checkerboard:
      return int(spec_.cell_shape.size()) == spec_.d || spec_.cell_shape.back() == 1;
  }
  return false;
}

bool CoefficientField::space_independent() const {
  switch (spec_.variant) {
    case Variant::constant:
    case Variant::separable_time:
      return true;
    case Variant::separable_space:
      return spec_.profile.modes.empty();
    case Variant::fourier:
      return std::all_of(spec_.modes.begin(), spec_.modes.end(), [](const FourierMode& f) {
        return (f.k[0] == 0 && f.k[1] == 0) || f.amplitude == 0.0;
      });
    case Variant::checkerboard:
      for (int a = 0; a < spec_.d; ++a) {
        if (spec_.cell_shape[a] != 1) return false;
      }
      return true;
  }
  return false;
}

Tensor CoefficientField::raw(const Point& y_in, double s_in) const {
  const Point y{frac(y_in[0]), spec_.d == 2 ? frac(y_in[1]) : 0.0};
  const double s = frac(s_in);
  switch (spec_.variant) {
    case Variant::constant:
      return base_;
    case Variant::fourier: {
      Tensor a = base_;
      for (const auto& mode : spec_.modes) {
        const double arg = kTwoPi * (mode.k[0] * y[0] + mode.k[1] * y[1] + mode.l * s);
        a(mode.row, mode.col) += mode.amplitude * wave_value(mode.wave, arg);
      }
      return a;
    }
    case Variant::checkerboard: {
      const auto& shape = spec_.cell_shape;
      const int nt = int(shape.size()) == spec_.d + 1 ? shape.back() : 1;
      auto cell = [](double z, int n) { return std::min(int(z * n), n - 1); };
      int idx = cell(s, nt);
      for (int a = spec_.d - 1; a >= 0; --a) idx = idx * shape[a] + cell(y[a], shape[a]);
      return spec_.cells[idx] * base_;
    }
    case Variant::separable_space:
      return spec_.profile(y[0]) * base_;
    case Variant::separable_time:
      return spec_.profile(s) * base_;
  }
  return base_;
}

Tensor CoefficientField::evaluate(const Point& y, double s) const {
  Tensor a = raw(y, s);
  if (transposed_) a.transposeInPlace();
  return a;
}

CoefficientField make_field(const CoefficientSpec& spec) {
  validate_spec(spec);
  CoefficientField field;
  field.spec_ = spec;
  const int n = spec.d * spec.m;
  field.base_ = Tensor::Identity(n, n);
  if (!spec.tensor.empty()) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) field.base_(r, c) = spec.tensor[r * n + c];
  }

  // Periodicity spot check at dyadic points, where the shifted arguments are exact.
  for (const Point y : {Point{0.125, 0.375}, Point{0.6875, 0.0625}}) {
    for (double s : {0.25, 0.8125}) {
      const Tensor a = field.evaluate(y, s);
      if (a != field.evaluate({y[0] + 3.0, y[1] - 2.0}, s - 7.0)) {
        throw Error("coefficient field failed the periodicity spot check");
      }
    }
  }

  const SampleResolution res = spec.d == 1 ? SampleResolution{64, 64} : SampleResolution{32, 16};
  if (spec.mu) {
    const double mu = *spec.mu;
    const double slack = 1e-12;
    for_each_sample(field, res, [&](const Point& y, double s, const Tensor& a) {
      const auto [lo, hi] = form_range(a);
      if (lo < mu - slack || hi > 1.0 / mu + slack) {
        std::ostringstream os;
        os << "coefficient violates declared mu=" << mu << " at " << describe_sample(y, s, spec.d)
           << ": quadratic form range [" << lo << ", " << hi << "] not within [" << mu << ", "
           << 1.0 / mu << "]";
        throw EllipticityError(os.str());
      }
    });
    field.mu_ = mu;
  } else {
    double lo_all = std::numeric_limits<double>::infinity();
    Point worst{};
    double worst_s = 0.0;
    for_each_sample(field, res, [&](const Point& y, double s, const Tensor& a) {
      const double lo = form_range(a).first;
      if (lo < lo_all) {
        lo_all = lo;
        worst = y;
        worst_s = s;
      }
    });
    if (!(lo_all > 0.0)) {
      throw EllipticityError("coefficient is not elliptic at " +
                             describe_sample(worst, worst_s, spec.d));
    }
    field.mu_ = ellipticity_constant(field, res);
  }
  return field;
}

CoefficientField adjoint_field(const CoefficientField& field) {
  CoefficientField adj = field;
  adj.transposed_ = !field.transposed_;
  return adj;
}

ScaledCoefficient::ScaledCoefficient(CoefficientField field, double epsilon, bool time_reversed)
    : field_(std::move(field)),
      epsilon_(epsilon),
      epsilon_sq_(epsilon * epsilon),
      time_reversed_(time_reversed) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
}

Tensor ScaledCoefficient::operator()(const Point& x, double t) const {
  const double s = t / epsilon_sq_;
  return field_.evaluate({x[0] / epsilon_, x[1] / epsilon_}, time_reversed_ ? -s : s);
}

ScaledCoefficient rescale(const CoefficientField& field, double epsilon) {
  return ScaledCoefficient(field, epsilon);
}

double ellipticity_constant(const CoefficientField& field, SampleResolution resolution) {
  if (resolution.space < 8 || resolution.time < 8) {
    throw DomainError("ellipticity_constant needs at least 8 samples per axis");
  }
  double lo_all = std::numeric_limits<double>::infinity();
  double hi_all = -std::numeric_limits<double>::infinity();
  for_each_sample(field, resolution, [&](const Point&, double, const Tensor& a) {
    const auto [lo, hi] = form_range(a);
    lo_all = std::min(lo_all, lo);
    hi_all = std::max(hi_all, hi);
  });
  return std::min(lo_all, 1.0 / hi_all);
}

VmoCurve vmo_modulus(const CoefficientField& field, std::vector<double> radii,
                     VmoResolution res) {
  std::sort(radii.begin(), radii.end());
  for (double r : radii) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("vmo radii must lie in (0, 1)");
  }
  VmoCurve curve;
  curve.radii = radii;
  curve.values.assign(radii.size(), 0.0);
  if (field.space_independent()) return curve;

  const int d = field.d();
  const int nq = res.quadrature;
  const int nc = res.centers_space;
  const int nct = field.time_independent() ? 1 : res.centers_time;
  const int ncy = d == 2 ? nc : 1;
  const int nqy = d == 2 ? nq : 1;
  const int npts = nq * nqy;
  std::vector<Tensor> samples(npts);

  double running = 0.0;
  for (std::size_t ir = 0; ir < radii.size(); ++ir) {
    double best = 0.0;
    for (double rho : {radii[ir], radii[ir] / 2, radii[ir] / 4, radii[ir] / 8}) {
      for (int ct = 0; ct < nct; ++ct) {
        const double t = double(ct) / nct;
        for (int c1 = 0; c1 < ncy; ++c1) {
          for (int c0 = 0; c0 < nc; ++c0) {
            const Point x{double(c0) / nc, double(c1) / ncy};
            double total = 0.0;
            for (int qt = 0; qt < nq; ++qt) {
              const double s = t + rho * rho * (qt + 0.5) / nq;
              for (int q1 = 0; q1 < nqy; ++q1) {
                for (int q0 = 0; q0 < nq; ++q0) {
                  const Point y{x[0] - rho + 2 * rho * (q0 + 0.5) / nq,
                                d == 2 ? x[1] - rho + 2 * rho * (q1 + 0.5) / nq : 0.0};
                  samples[q1 * nq + q0] = field.evaluate(y, s);
                }
              }
              for (int a = 0; a < npts; ++a)
                for (int b = a + 1; b < npts; ++b) total += 2.0 * (samples[a] - samples[b]).norm();
            }
            best = std::max(best, total / (double(nq) * npts * npts));
          }
        }
      }
    }
    running = std::max(running, best);
    curve.values[ir] = running;
  }
  return curve;
}

HolderCertificate holder_modulus(const CoefficientField& field, double lambda, int resolution) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("Holder exponent must lie in (0, 1]");
  if (resolution < 2) throw DomainError("holder_modulus needs resolution >= 2");
  HolderCertificate cert{lambda, 0.0};
  if (field.is_constant()) return cert;

  const int d = field.d();
  const int axes = d + 1;
  // Base lattice capped so the sweep stays around 2^16 points.
  const int cap = d == 1 ? 256 : 40;
  const int nb = std::min(resolution, cap);
  const int nb_space = field.space_independent() ? 1 : nb;
  const int nb_time = field.time_independent() ? 1 : nb;
  const int nb1 = d == 2 ? nb_space : 1;

  // Offset directions: each axis alone and all axes together, both signs.
  std::vector<std::array<int, 3>> dirs;
  for (int a = 0; a < axes; ++a) {
    std::array<int, 3> e{0, 0, 0};
    e[a] = 1;
    dirs.push_back(e);
  }
  dirs.push_back({1, d == 2 ? 1 : 0, 1});
  if (d == 1) dirs.back() = {1, 0, 1};

  for (int it = 0; it < nb_time; ++it) {
    for (int i1 = 0; i1 < nb1; ++i1) {
      for (int i0 = 0; i0 < nb_space; ++i0) {
        // time stored in slot 2 regardless of d
        const std::array<double, 3> p{double(i0) / nb_space, double(i1) / nb1, double(it) / nb_time};
        const Tensor ap = field.evaluate({p[0], p[1]}, p[2]);
        for (int step = 1; step < resolution; step *= 2) {
          const double h = double(step) / resolution;
          for (const auto& dir : dirs) {
            if (d == 1 && dir[1] != 0) continue;
            for (int sign : {1, -1}) {
              const double off0 = sign * h * dir[0];
              const double off1 = sign * h * dir[1];
              const double offt = sign * h * dir[2];
              const double dist = std::sqrt(off0 * off0 + off1 * off1 + offt * offt);
              const Tensor aq = field.evaluate({p[0] + off0, p[1] + off1}, p[2] + offt);
              const double q = (ap - aq).norm() / std::pow(dist, lambda);
              cert.tau = std::max(cert.tau, q);
            }
          }
        }
      }
    }
  }
  return cert;
}

}  // namespace parahom
