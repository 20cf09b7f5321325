#pragma once

// Non-cutoff collision operator in Carleman form, Q = Q_s + Q_ns.
//
// With b(cos theta) = |sin(theta/2)|^{-(d-1)-2s} on cos theta > 0 the kernel
// reduces to
//   K_F(v, v+u) = 2^{d-1} |u|^{-d-2s} H_F(v, u),
//   H_F(v, u)   = int_{w perp u, |w| > |u|} F(v+w) (|u|^2 + |w|^2)^a dw,
// a = (gamma + 1 + 2s)/2. Q_s is evaluated in polar coordinates around v with
// u and -u paired, H_F by polar rings in the hyperplane, and Q_ns =
// C (F * |.|^gamma) G with the cancellation constant C.

#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "bsplit/core.hpp"
#include "bsplit/quadrature.hpp"

namespace bsplit {

class QuadratureError : public Error {
 public:
  using Error::Error;
};

struct AngularCrossSection {
  double s = 0.5;
  int dim = 3;
  bool cutoff_negative_cos = true;
};

/// |sin(theta/2)|^{-(dim-1)-2s} for cos theta > 0, zero otherwise (when the
/// cutoff flag is set).
double angular_b(double cos_theta, const AngularCrossSection& xs);

struct CancellationConstant {
  double value = 0.0;
  double gamma = 0.0;
  double s = 0.0;
  double quadrature_error_estimate = 0.0;
};

/// C = |S^{d-2}| int_0^{pi/2} sin^{d-2} theta b(cos theta)
///     [cos^{-d-gamma}(theta/2) - 1] d theta, times kernel_const.
/// The rule is doubled from n_nodes until two successive values agree to
/// rel_tol; throws QuadratureError after max_doublings.
CancellationConstant cancellation_constant(const PhysParams& params,
                                           const AngularCrossSection& xs, int n_nodes = 2000,
                                           double rel_tol = 1e-9, int max_doublings = 6);

/// (M * |.|^kappa)(v) as a function of |v|.
double maxwell_convolution(double v_norm, double kappa, int dim);

/// Hyperplane integral of the Maxwellian without the factor
/// (2 pi)^{-d/2} exp(-(v.sigma)^2/2): c is |v_perp| in 3D and v.e1 in 2D.
double maxwell_plane(double c, double rho, double a, int dim);

/// H_M(center, rho sigma) for a unit direction sigma.
double maxwell_hyperplane(const Vec& center, const Vec& sigma, double rho, double a, int dim);

/// Discrete (f * |.|^kappa) at grid nodes; the self cell uses the exact cell
/// average of |y|^kappa, other cells the point value.
class GridConvolution {
 public:
  GridConvolution(const VelocityGrid& grid, double kappa);
  double at(std::span<const double> f, std::size_t node) const;
  /// Coefficient of f[source] in at(f, node).
  double weight(std::size_t node, std::size_t source) const;
  void apply(std::span<const double> f, std::span<double> out) const;
  double kappa() const { return kappa_; }

 private:
  VelocityGrid grid_;
  double kappa_;
  int width_;
  std::vector<double> table_;
};

/// Exact average of |y|^kappa over the cube [-h/2, h/2]^dim.
double cell_average_power(double h, double kappa, int dim);

/// First argument of the collision operator: maxwell * M + f on the grid,
/// optionally restricted to {mask(w)}.
struct Density {
  double maxwell = 0.0;
  const VelocityGrid* grid = nullptr;
  std::span<const double> f;
  std::function<bool(const Vec&)> mask;

  double operator()(const Vec& w) const;
  bool has_grid_part() const { return grid != nullptr && !f.empty(); }
};

using TestFunction = std::function<double(const Vec&)>;

/// Cubic interpolant of nodal values. The returned function refers to values,
/// which must outlive it.
TestFunction grid_function(const VelocityGrid& grid, std::span<const double> values);

struct KernelBoundReport {
  double near_moment = 0.0;   // int_{B_r} |u|^2 |K_F(v, v+u)| du
  double far_mass = 0.0;      // int_{outside B_r} |K_F(v, v+u)| du
  double weighted_mass = 0.0; // int |F(v-w)| |w|^{gamma+2s} dw
  double near_ratio = 0.0;    // near_moment / (r^{2-2s} weighted_mass)
  double far_ratio = 0.0;     // far_mass / (r^{-2s} weighted_mass)
};

struct ConvolutionBoundReport {
  double lhs = 0.0;    // int f(v+w) |w|^kappa dw
  double scale = 0.0;  // N <v>^kappa
  double ratio = 0.0;
};

/// Quadrature geometry and cached constants for one grid and parameter set.
class CollisionModel {
 public:
  CollisionModel(const VelocityGrid& grid, const PhysParams& params,
                 const QuadratureSpec& spec = {});

  const VelocityGrid& grid() const { return grid_; }
  const PhysParams& params() const { return params_; }
  const QuadratureSpec& spec() const { return spec_; }
  /// Direction rule used for the principal value at v.
  DirectionSet directions_at(const Vec& v) const {
    return DirectionSet::adapted(grid_.dim(), spec_.n_directions, v);
  }
  const RadialRule& radial() const { return radial_; }
  const RingRadii& rings() const { return rings_; }
  const CancellationConstant& cancellation() const { return cancel_; }
  double exponent_a() const { return a_; }
  double hyperplane_spacing() const { return dw_; }
  /// Weight of H_j S_j in the radial sum, inner ball included at j = 0.
  double radial_coefficient(std::size_t j) const { return radial_coef_[j]; }
  /// 2^{d-1} * kernel_const.
  double kernel_prefactor() const { return prefactor_; }

  /// H_M at the radial nodes through the precomputed table.
  double maxwell_profile(std::size_t j, double c, double v_sigma) const;

  /// H_F(center, rho_j sigma) for every radial node j, sigma = dir.sigma.
  std::vector<double> hyperplane_profile(const Density& F, const Vec& center,
                                         const Direction& dir) const;

  /// H_F(center, u) for arbitrary u != 0.
  double hyperplane(const Density& F, const Vec& center, const Vec& u) const;

  /// K_F(v, v'); throws on |v - v'| < 1e-12 * spacing.
  double kf(const Density& F, const Vec& v, const Vec& v_prime) const;
  bool kernel_symmetry_check(const Density& F, const Vec& v, const Vec& u,
                             double rel_tol = 1e-10) const;

  /// Principal value int [G(v') - G(v)] K_F(v, v') dv'.
  double q_s(const Density& F, const TestFunction& G, const Vec& v) const;
  /// (F * |.|^gamma)(v_node).
  double convolution(const Density& F, std::size_t node) const;
  double q_ns(const Density& F, const TestFunction& G, std::size_t node) const;
  double q_total(const Density& F, const TestFunction& G, std::size_t node) const;

  /// int [K_F(v, v') - K_F(v', v)] dv', to be compared with C (F * |.|^gamma)(v).
  double cancellation_integral(const Density& F, const Vec& v) const;

  KernelBoundReport kernel_bound_check(const Density& F, std::size_t node, double r) const;
  ConvolutionBoundReport convolution_bound_check(std::span<const double> f, double N,
                                                 std::size_t node, double kappa,
                                                 double q) const;

  /// Sum over rings of weight_k t_k^{d-2} E_k P_k where P_k is the angular
  /// integral of the grid part (or of the whole masked density) on ring k.
  double ring_fold(const Density& F, const Vec& center, const Vec& e1, const Vec& e2,
                   std::span<const double> E, bool pointwise_maxwell) const;

  /// Polar rings beyond r_max, used when a masked Maxwellian is sampled
  /// pointwise.
  const RingRadii& extended_rings() const { return rings_ext_; }
  /// (rho_j^2 + t_k^2)^a for ring k and radial node j.
  double ring_power(std::size_t k, std::size_t j) const { return ring_pow_[k * radial_.size() + j]; }

 private:
  double ring_fold_impl(const Density& F, const Vec& center, const Vec& e1, const Vec& e2,
                        std::span<const double> E, bool pointwise_maxwell,
                        const RingRadii& rings) const;

  VelocityGrid grid_;
  PhysParams params_;
  QuadratureSpec spec_;
  RadialRule radial_;
  RingRadii rings_;
  RingRadii rings_ext_;
  CancellationConstant cancel_;
  std::vector<double> radial_coef_;
  std::vector<double> ring_pow_;
  std::vector<double> ring_pow_ext_;
  double a_ = 0.0;
  double dw_ = 0.0;
  double prefactor_ = 0.0;
  // h(c, rho_j) on c = i * table_dc, i < table_n.
  double table_dc_ = 0.05;
  int table_n_ = 0;
  std::vector<double> table_;
  GridConvolution conv_gamma_;
};

/// 2 Q(f, f) at every node. Directions come from the fixed half-sphere rule
/// and the ring geometry is the same at every node, so the hyperplane ring
/// sums of f are discrete convolutions and are evaluated by FFT. Ring samples
/// use multilinear interpolation of f; second differences use cubic.
class QuadraticTerm {
 public:
  explicit QuadraticTerm(const CollisionModel& model);
  ~QuadraticTerm();
  QuadraticTerm(const QuadraticTerm&) = delete;
  QuadraticTerm& operator=(const QuadraticTerm&) = delete;

  void operator()(std::span<const double> f, std::span<double> out) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// The perturbative right-hand side 2 [Q(M+f, f) + Q(f, M)] at every node,
/// with Q(M, M) = 0 used analytically so that f = 0 is an exact fixed point.
///
/// The part linear in f is a fixed matrix L, assembled on first use with
/// node-adapted directions and cubic interpolation of f both in the second
/// differences and on the hyperplane rings, and then composed on the right
/// with I - P (P the discrete moment projection) so that M, v_a M and |v|^2 M
/// are exact null vectors. The quadratic part is a QuadraticTerm, also built
/// on first use.
class PerturbativeRhs {
 public:
  explicit PerturbativeRhs(const CollisionModel& model);

  const CollisionModel& model() const { return model_; }

  /// out = L f + 2 Q(f, f); with quadratic = false only L f.
  void operator()(std::span<const double> f, std::span<double> out,
                  bool quadratic = true) const;

  /// Row-major L.
  const std::vector<double>& linear_matrix() const;
  const QuadraticTerm& quadratic_term() const;

 private:
  void assemble() const;

  const CollisionModel& model_;
  std::size_t n_rad_;
  std::vector<Direction> dirs_;      // node-adapted rules, concatenated
  std::vector<std::size_t> offset_;  // node i owns dirs_[offset_[i], offset_[i+1])
  std::vector<double> hm_;           // [direction][j]
  std::vector<double> sm_;
  std::vector<double> m_;
  std::vector<double> mconv_;
  mutable std::once_flag assembled_;
  mutable std::vector<double> linear_;
  mutable std::once_flag quadratic_built_;
  mutable std::unique_ptr<QuadraticTerm> quadratic_;
};

}  // namespace bsplit
