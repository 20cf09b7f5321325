#pragma once

// Quadrature building blocks for the singular collision integrals:
// Gauss-Legendre rules, half-sphere direction sets, log-spaced radii for the
// principal-value integral and polar ring rules for hyperplane integrals.

#include <array>
#include <vector>

#include "bsplit/core.hpp"

namespace bsplit {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
GaussRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Resolution knobs for the collision quadrature.
///
/// Radii are log-spaced from r_min_factor * spacing to r_max_factor * R.
/// In three dimensions n_directions is the number of polar (Gauss) nodes on
/// the half sphere and the azimuth gets twice as many uniform nodes; in two
/// dimensions the fixed rule has n_directions midpoint directions on the half
/// circle and the node-adapted rule 2 n_directions band nodes.
/// n_hyperplane is the number of nodes per hyperplane axis, i.e. hyperplane
/// samples are spaced by 2R / n_hyperplane.
struct QuadratureSpec {
  int n_radii = 24;
  double r_min_factor = 0.25;
  double r_max_factor = 0.0;  // 0 selects 2 * sqrt(dim)
  int n_directions = 4;
  int n_hyperplane = 0;       // 0 selects the velocity n_per_axis

  void validate() const;
  QuadratureSpec doubled() const;
  bool operator==(const QuadratureSpec&) const = default;
};

struct Direction {
  Vec sigma;
  Vec e1;  // orthonormal frame of the complement of sigma
  Vec e2;  // zero in two dimensions
  double weight;
};

/// Unit directions covering half of S^{dim-1} with weights summing to
/// |S^{dim-1}| / 2.
struct DirectionSet {
  int dim = 3;
  std::vector<Direction> dirs;

  /// Product rule with the polar axis along e_z (3D) or uniform midpoints (2D).
  static DirectionSet half_sphere(int dim, int n_directions);

  /// Rule refined near the great circle orthogonal to v, where Maxwellian
  /// hyperplane integrals through v concentrate (their size decays like
  /// exp(-(v.sigma)^2/2)). The polar axis is v/|v|; the polar variable is split
  /// at min(5/|v|, 0.6) with n_directions Gauss nodes on the inner panel and
  /// max(2, n_directions/2) on the outer one. In 3D the azimuth has
  /// 2 n_directions uniform nodes; in 2D the band has 2 n_directions nodes
  /// and each outer panel max(2, n_directions).
  static DirectionSet adapted(int dim, int n_directions, const Vec& v);

  std::size_t size() const { return dirs.size(); }
  const Direction& operator[](std::size_t i) const { return dirs[i]; }
};

/// Log-spaced radii rho_j with trapezoid weights in log(rho), corrected at the
/// inner end for integrands growing like rho^{2-2s}, plus the coefficient of
/// the analytic inner-ball contribution r_min^{-2s} / (2 - 2s).
struct RadialRule {
  std::vector<double> rho;
  std::vector<double> weight;  // quadrature weight for d rho
  double inner = 0.0;

  static RadialRule log_spaced(double r_min, double r_max, int n, double s);
  std::size_t size() const { return rho.size(); }
};

/// Radial nodes t_k for hyperplane integrals in polar form. Panel
/// boundaries sit exactly on the radii rho_j so the cutoff |w| > rho_j is
/// exact; each panel is split into midpoint cells no wider than dt.
/// first_radius[j] is the first ring with t > rho_j.
struct RingRadii {
  std::vector<double> t;
  std::vector<double> weight;
  std::vector<int> first_ring;

  static RingRadii build(const RadialRule& radial, double t_end, double dt);
  std::size_t size() const { return t.size(); }
};

/// An arc [begin, end] of angles in radians.
struct Arc {
  double begin;
  double end;
};

/// Intersects rings center + t (cos phi e1 + sin phi e2) with the cube
/// [-h, h]^3.
class RingClipper {
 public:
  static constexpr int kMaxArcs = 16;
  using Arcs = std::array<Arc, kMaxArcs>;

  RingClipper(const Vec& center, const Vec& e1, const Vec& e2, double half_width);

  /// -1 when the whole ring lies inside; otherwise the number of disjoint
  /// inside arcs written to out, sorted within [0, 2 pi).
  int clip(double t, Arcs& out) const;
  /// Rings with t beyond this radius miss the cube.
  double far_radius() const { return far_; }

 private:
  Vec center_;
  double h_;
  double amp_[3];
  double phase_[3];
  double far_;
};

}  // namespace bsplit
