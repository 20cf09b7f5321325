#pragma once

// Initial perturbations f_0 inside the envelope |f_0| < eps <v>^{-q}.
//
// Every kind has the form f_0 = eps * sum_m c_m X_m(x) psi_m(v) with
// c_m >= 0, sum c_m = 1, X_m in [0, 1] and
//   psi(v) = 0.45 a(v) <v>^{-q} + 0.45 b(v) mu(v),   a in [0, 1], b in [-1, 1],
// where mu = M / sup(M <v>^q) <= <v>^{-q}. Hence |f_0| <= 0.9 eps <v>^{-q},
// the negative part is at most 0.45 eps mu, and f_0 is linear in eps.

#include <cstdint>
#include <string>

#include "bsplit/core.hpp"

namespace bsplit {

enum class PerturbationKind { separable_smooth, random_fourier, rough_indicator };

std::string to_string(PerturbationKind k);
/// Accepts "separable-smooth", "random-fourier", "rough-indicator".
PerturbationKind parse_perturbation_kind(const std::string& name);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::separable_smooth;
  double epsilon = 1e-2;
  double q = 8.0;
  /// Spatial wave numbers used (highest mode for random-fourier).
  int spatial_modes = 1;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const PerturbationSpec&) const = default;
};

struct EnvelopeCheck {
  bool ok = true;
  double worst = 0.0;  // max <v>^q |f| / eps
  std::size_t x_node = 0;
  std::size_t v_node = 0;
};

/// Strict check <v>^q |f| < eps at every node; reports the argmax node.
EnvelopeCheck validate_envelope(const DistributionField& field, double eps, double q);

/// Deterministic given the seed. Throws Error if the result leaves the
/// envelope or makes M + f_0 negative somewhere.
DistributionField make_perturbation(const PerturbationSpec& spec, const VelocityGrid& vgrid,
                                    const SpaceGrid& xgrid);

/// Copy of the field with the spatially integrated mass, momentum and
/// energy of f removed (see project_field_moments).
DistributionField project_moments(const DistributionField& field);

}  // namespace bsplit
