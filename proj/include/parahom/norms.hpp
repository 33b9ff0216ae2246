#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "parahom/grid.hpp"

namespace parahom {

enum class PairMode { exhaustive, sampled };

struct PairSampling {
  long exhaustive_limit = 20000;  // region node count up to which all pairs are visited
  long samples = 100000;
  std::uint64_t seed = 0x5eed5eedULL;
};

struct SeminormReport {
  std::string name;
  Cylinder region;
  double exponent = 0.0;
  double value = 0.0;
  PairMode mode = PairMode::exhaustive;
  std::uint64_t seed = 0;
  long pairs = 0;
};

/// Node-mean power mean (sum |u|^p / N)^(1/p); p = infinity gives the max. |u| is the
/// Euclidean norm over components. Throws DomainError on an empty region or p < 1.
double lp_norm(const Field& u, const Cylinder& region, double p);

/// max |u(x,t) - u(y,s)| / (|x - y| + |t - s|^(1/2))^alpha over node pairs of the region.
SeminormReport holder_seminorm(const Field& u, const Cylinder& region, double alpha,
                               const PairSampling& sampling = {});

/// max over centers in the region and rho in rho_set of rho^(-alpha) times the RMS
/// deviation from the mean over Q_rho(center) intersected with the region. At most
/// `max_centers` centers are used (region nodes taken at a uniform stride).
double campanato_seminorm(const Field& u, const Cylinder& region, double alpha,
                          const std::vector<double>& rho_set, int max_centers = 4096);

/// sup |grad u| + [u]_{alpha=1} + time-1/2 Holder seminorm at equal space nodes.
struct C1Components {
  double gradient = 0.0;
  double lipschitz = 0.0;
  double time_half = 0.0;
  double total() const { return gradient + lipschitz + time_half; }
};
C1Components parabolic_c1_components(const Field& u, const Cylinder& region,
                                     const PairSampling& sampling = {});
double parabolic_c1_norm(const Field& u, const Cylinder& region, const PairSampling& sampling = {});

/// Energy-inequality ratios. `f` holds flux components axis * m + alpha and `F` the volume
/// source, both on u's grid; nullptr means zero. Integrals are node sums weighted by h^d tau.
/// A zero right-hand side returns 0 when the left side vanishes and throws CheckFailure
/// otherwise.
double caccioppoli_ratio(const Field& u, const Field* f, const Field* F, const Cylinder& q,
                         const Cylinder& q2);
double poincare_ratio(const Field& u, const Field* f, const Cylinder& q, const Cylinder& q2);

}  // namespace parahom
