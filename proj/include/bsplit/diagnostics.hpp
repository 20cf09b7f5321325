#pragma once

// Norms, hydrodynamic bounds, the upper barrier U(t) g(v), the good/bad
// split of Q_s(M+f, g), the anisotropic seminorm, the inequality checks and
// the trend-to-equilibrium monitor.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bsplit/collision.hpp"
#include "bsplit/core.hpp"

namespace bsplit {

/// Velocity moments of M + f at one spatial node. Entropy skips nodes where
/// M + f <= 0; their total mass is negative_mass.
struct HydroSample {
  double mass = 0.0;
  Vec momentum{0.0, 0.0, 0.0};
  double energy = 0.0;
  double entropy = 0.0;
  double negative_mass = 0.0;
};

std::vector<HydroSample> hydro_fields(const DistributionField& field);
/// Spatial integral of hydro_fields over the unit torus.
HydroSample hydro_totals(const DistributionField& field);

struct HydroBounds {
  double m0 = 0.0;  // mass lower bound
  double M0 = 0.0;  // mass upper bound
  double E0 = 0.0;  // energy upper bound
  double H0 = 0.0;  // entropy upper bound
};

struct HydroCheck {
  bool ok = false;
  HydroBounds bounds;
  std::size_t x_node = 0;
  std::size_t v_node = 0;
  std::string reason;
};

/// If sup <v>^q |f| <= 1/2 and M + f >= 0, bounds valid for every
/// g with |g| <= N <v>^{-q}, N = sup <v>^q |f|, evaluated node by node in the
/// worst case. Otherwise ok = false with the offending node.
HydroCheck near_equilibrium_implies_hydro(const DistributionField& field, double q);

/// sup over the grid of <v>^q |f|; recorded in env when given.
double weighted_sup(const DistributionField& field, double q, DecayEnvelope* env = nullptr);

/// Smooth radial weight with g = |v|^{-q} for |v| > 1 and values in [1, 2)
/// inside the unit ball: g = 2 - exp(-psi(1 - |v|^2)), psi(u) = q u / 2 +
/// q (q + 1) u^2 / 4, which matches value, slope and curvature at |v| = 1.
class GWeight {
 public:
  explicit GWeight(double q);
  double q() const { return q_; }
  double radial(double r) const;
  double operator()(const Vec& v) const { return radial(norm(v)); }
  TestFunction function() const;

 private:
  double q_;
};

struct BarrierSpec {
  double delta = 1e-3;
  double C1 = 1.0;
  double q = 8.0;

  void validate() const;
  /// delta exp(C1 t); infinity on overflow.
  double U(double t) const;
  /// delta e^{C1 T} < 1/2.
  bool paper_regime(double T) const;
  bool operator==(const BarrierSpec&) const = default;
};

struct BarrierMargin {
  double margin = 0.0;
  std::size_t x_node = 0;
  std::size_t v_node = 0;
};

/// min over the grid of U(t) g(v) - |f(x, v)|.
BarrierMargin barrier_margin(const DistributionField& field, double t, const BarrierSpec& barrier,
                             const GWeight& g);

/// c_1(q) = 1 / (20 q).
double good_bad_scale(double q);

struct GoodBad {
  double good = 0.0;
  double bad = 0.0;
  double total = 0.0;  // unmasked Q_s(M+f, g)(v_bar)
  bool good_mask_empty = false;
};

/// Q_s of g against M + f restricted to <v> < c_1(q)|v_bar| (good) and to the
/// complement (bad).
GoodBad good_bad_split(const CollisionModel& model, std::span<const double> f, const Vec& v_bar,
                       const GWeight& g);

/// sqrt(|v - v'|^2 + (|v|^2 - |v'|^2)^2 / 4).
double aniso_distance(const Vec& v, const Vec& vp);

/// Squared N^{s,gamma} seminorm of nodal values: ordered pairs with
/// 0 < d <= 1, each unordered pair counted twice.
double ns_gamma_seminorm_sq(const VelocityGrid& grid, std::span<const double> g,
                            const PhysParams& params);
inline double ns_gamma_seminorm(const VelocityGrid& grid, std::span<const double> g,
                                const PhysParams& params) {
  return std::sqrt(ns_gamma_seminorm_sq(grid, g, params));
}

struct InequalityReport {
  std::string name;
  int samples = 0;
  double fitted_constant = 0.0;
  double worst_ratio = 0.0;
  /// Fitted constant with the sample family doubled, when computed.
  double doubled_constant = 0.0;
  bool pass = false;
  std::string note;
};

struct LemmaSuiteConfig {
  int samples = 25;
  /// Compare against a family twice as large and require < 10% change.
  bool check_doubling = true;
  double stability_tol = 0.10;
  /// Weight exponent in the commutator check.
  double commutator_q = 2.0;
  /// Refinement of the seminorm grid relative to the velocity grid.
  int seminorm_refine = 2;
};

/// Cancellation, Q_s bound, kernel annulus bounds (near and far), coercivity
/// and commutator checks for the density M + f. Sample families are nested
/// Halton sequences, so the doubled family contains the original one.
std::vector<InequalityReport> lemma_suite(const CollisionModel& model, std::span<const double> f,
                                          const LemmaSuiteConfig& cfg = {});

/// One inequality at a given family size; used by lemma_suite.
InequalityReport lemma_check(const CollisionModel& model, std::span<const double> f,
                             const std::string& name, int samples, const LemmaSuiteConfig& cfg);

/// Names accepted by lemma_check.
const std::vector<std::string>& lemma_names();

struct TrendReport {
  double exponent = 0.0;     // p in c t^{-p}
  double prefactor = 0.0;    // c
  double monotone_fraction = 1.0;
  int fitted_samples = 0;
  bool converged = false;    // the last sample sits at the roundoff floor
};

/// Fits c t^{-p} by least squares in log-log on the later half of the
/// samples above floor = rel_floor * max. Samples at or below the floor are
/// roundoff: they are left out of the fit and pairs of them count as
/// non-increasing. Needs at least 10 samples.
TrendReport equilibration_monitor(std::span<const double> t, std::span<const double> values,
                                  double rel_floor = 1e-12);

}  // namespace bsplit
