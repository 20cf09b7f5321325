#pragma once

// Shared value types for the solver: kernel parameters, the truncated velocity
// lattice, the periodic spatial lattice and the perturbation field f around M.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsplit {

/// Velocity vector. Two-dimensional runs leave the last component at zero.
using Vec = std::array<double, 3>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double dot(const Vec& a, const Vec& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm_sq(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline Vec operator+(const Vec& a, const Vec& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec operator-(const Vec& a, const Vec& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec operator*(double c, const Vec& a) {
  return {c * a[0], c * a[1], c * a[2]};
}

/// Collision kernel parameters: B = kernel_const * |v - v*|^gamma * b(cos theta).
struct PhysParams {
  double gamma = 1.0;
  double s = 0.5;
  double kernel_const = 1.0;
  int dim = 3;

  /// Throws Error unless s in (0,1), gamma > -dim, kernel_const > 0, dim in {2,3}.
  void validate() const;

  /// gamma + 2s in [0, 2], the range covered by the near-equilibrium theory.
  bool regime_ok() const {
    const double k = gamma + 2.0 * s;
    return k >= 0.0 && k <= 2.0;
  }
  bool operator==(const PhysParams&) const = default;
};

/// Normalized Maxwellian (2 pi)^{-dim/2} exp(-|v|^2/2).
double maxwellian(const Vec& v, int dim = 3);

/// <v>^q = (1 + |v|^2)^{q/2}.
inline double bracket_weight(const Vec& v, double q) {
  return std::pow(1.0 + norm_sq(v), 0.5 * q);
}

/// Cell-centred Cartesian lattice on [-R, R]^dim with n nodes per axis.
///
/// Node (i_0, ..., i_{dim-1}) sits at -R + (i_a + 1/2) * spacing and has
/// linear index ((i_0 * n) + i_1) * n + i_2, i.e. lexicographic with the last
/// axis fastest. Odd n puts a node at the origin.
class VelocityGrid {
 public:
  VelocityGrid() = default;
  VelocityGrid(int dim, double radius, int n_per_axis);

  int dim() const { return dim_; }
  double radius() const { return radius_; }
  int n_per_axis() const { return n_; }
  double spacing() const { return spacing_; }
  std::size_t size() const { return size_; }
  double cell_volume() const { return cell_volume_; }

  double coordinate(int i) const { return -radius_ + (i + 0.5) * spacing_; }
  std::array<int, 3> index(std::size_t linear) const;
  std::size_t linear(const std::array<int, 3>& idx) const;
  Vec node(std::size_t linear) const;
  std::vector<Vec> nodes() const;

  /// Multilinear interpolation of nodal values with zero ghost nodes one
  /// spacing beyond the outermost ones, so the interpolant is continuous and
  /// vanishes for |v|_inf >= R + spacing/2.
  double interpolate(std::span<const double> values, const Vec& v) const {
    return dim_ == 3 ? interpolate3(values.data(), v) : interpolate2(values.data(), v);
  }
  /// Half-width of the support of interpolated fields, R + spacing/2.
  double support_radius() const { return radius_ + 0.5 * spacing_; }

  /// Tensor-product cubic Lagrange interpolation with the same zero ghost
  /// nodes. Used where the kinks of the multilinear interpolant at the
  /// nodes would spoil second differences.
  double interpolate_cubic(std::span<const double> values, const Vec& v) const {
    double acc = 0.0;
    cubic_stencil(v, [&](std::size_t i, double w) { acc += w * values[i]; });
    return acc;
  }

  /// Calls fn(node, weight) for every node entering interpolate(values, v).
  template <class Fn>
  void linear_stencil(const Vec& v, Fn&& fn) const;
  /// Calls fn(node, weight) for every node entering interpolate_cubic(values, v).
  template <class Fn>
  void cubic_stencil(const Vec& v, Fn&& fn) const;

  friend bool operator==(const VelocityGrid&, const VelocityGrid&) = default;

 private:
  double interpolate3(const double* f, const Vec& v) const;
  double interpolate2(const double* f, const Vec& v) const;

  int dim_ = 3;
  double radius_ = 6.0;
  int n_ = 16;
  double spacing_ = 0.75;
  std::size_t size_ = 0;
  double cell_volume_ = 0.0;
};

inline double VelocityGrid::interpolate3(const double* f, const Vec& v) const {
  const double lim = n_;
  const double x0 = (v[0] + radius_) / spacing_ + 0.5;
  const double x1 = (v[1] + radius_) / spacing_ + 0.5;
  const double x2 = (v[2] + radius_) / spacing_ + 0.5;
  // Shifted by one so that the ghost layer sits at index 0 and n + 1.
  if (!(x0 > 0.0 && x0 < lim + 1.0 && x1 > 0.0 && x1 < lim + 1.0 && x2 > 0.0 &&
        x2 < lim + 1.0))
    return 0.0;
  const int i = static_cast<int>(x0) - 1;
  const int j = static_cast<int>(x1) - 1;
  const int k = static_cast<int>(x2) - 1;
  const double t0 = x0 - (i + 1), t1 = x1 - (j + 1), t2 = x2 - (k + 1);
  const int n = n_;
  const std::size_t sn = static_cast<std::size_t>(n);
  double acc = 0.0;
  for (int a = 0; a < 2; ++a) {
    const int ii = i + a;
    if (ii < 0 || ii >= n) continue;
    const double wa = a ? t0 : 1.0 - t0;
    for (int b = 0; b < 2; ++b) {
      const int jj = j + b;
      if (jj < 0 || jj >= n) continue;
      const double wab = wa * (b ? t1 : 1.0 - t1);
      const double* row = f + (ii * sn + jj) * sn;
      if (k >= 0) acc += wab * (1.0 - t2) * row[k];
      if (k + 1 < n) acc += wab * t2 * row[k + 1];
    }
  }
  return acc;
}

inline double VelocityGrid::interpolate2(const double* f, const Vec& v) const {
  const double lim = n_;
  const double x0 = (v[0] + radius_) / spacing_ + 0.5;
  const double x1 = (v[1] + radius_) / spacing_ + 0.5;
  if (!(x0 > 0.0 && x0 < lim + 1.0 && x1 > 0.0 && x1 < lim + 1.0)) return 0.0;
  const int i = static_cast<int>(x0) - 1;
  const int j = static_cast<int>(x1) - 1;
  const double t0 = x0 - (i + 1), t1 = x1 - (j + 1);
  const int n = n_;
  double acc = 0.0;
  for (int a = 0; a < 2; ++a) {
    const int ii = i + a;
    if (ii < 0 || ii >= n) continue;
    const double wa = a ? t0 : 1.0 - t0;
    const double* row = f + static_cast<std::size_t>(ii) * n;
    if (j >= 0) acc += wa * (1.0 - t1) * row[j];
    if (j + 1 < n) acc += wa * t1 * row[j + 1];
  }
  return acc;
}

namespace detail {

// Lagrange weights for nodes -1, 0, 1, 2 at fractional offset t in [0,1).
inline void cubic_weights(double t, double w[4]) {
  w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
  w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
  w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
}

}  // namespace detail

template <class Fn>
void VelocityGrid::linear_stencil(const Vec& v, Fn&& fn) const {
  int base[3] = {0, 0, 0};
  double w[3][2] = {{1, 0}, {1, 0}, {1, 0}};
  int taps[3] = {1, 1, 1};
  for (int a = 0; a < dim_; ++a) {
    const double x = (v[a] + radius_) / spacing_ + 0.5;
    if (!(x > 0.0 && x < n_ + 1.0)) return;
    base[a] = static_cast<int>(x) - 1;
    const double t = x - (base[a] + 1);
    w[a][0] = 1.0 - t;
    w[a][1] = t;
    taps[a] = 2;
  }
  const std::size_t n = static_cast<std::size_t>(n_);
  for (int p = 0; p < taps[0]; ++p) {
    const int i = base[0] + p;
    if (i < 0 || i >= n_) continue;
    for (int q = 0; q < taps[1]; ++q) {
      const int j = base[1] + q;
      if (j < 0 || j >= n_) continue;
      if (dim_ == 2) {
        fn(i * n + j, w[0][p] * w[1][q]);
        continue;
      }
      for (int r = 0; r < taps[2]; ++r) {
        const int k = base[2] + r;
        if (k < 0 || k >= n_) continue;
        fn((i * n + j) * n + k, w[0][p] * w[1][q] * w[2][r]);
      }
    }
  }
}

template <class Fn>
void VelocityGrid::cubic_stencil(const Vec& v, Fn&& fn) const {
  int base[3] = {0, 0, 0};
  double w[3][4] = {{1, 0, 0, 0}, {1, 0, 0, 0}, {1, 0, 0, 0}};
  for (int a = 0; a < dim_; ++a) {
    if (std::abs(v[a]) >= support_radius()) return;
    const double x = (v[a] + radius_) / spacing_ - 0.5;
    const double fl = std::floor(x);
    base[a] = static_cast<int>(fl) - 1;
    detail::cubic_weights(x - fl, w[a]);
  }
  const std::size_t n = static_cast<std::size_t>(n_);
  for (int p = 0; p < 4; ++p) {
    const int i = base[0] + p;
    if (i < 0 || i >= n_) continue;
    for (int q = 0; q < 4; ++q) {
      const int j = base[1] + q;
      if (j < 0 || j >= n_) continue;
      if (dim_ == 2) {
        fn(i * n + j, w[0][p] * w[1][q]);
        continue;
      }
      for (int r = 0; r < 4; ++r) {
        const int k = base[2] + r;
        if (k < 0 || k >= n_) continue;
        fn((i * n + j) * n + k, w[0][p] * w[1][q] * w[2][r]);
      }
    }
  }
}

/// Periodic lattice on the unit torus [0,1)^spatial_dims. spatial_dims = 0 is
/// the space-homogeneous mode with exactly one node.
class SpaceGrid {
 public:
  SpaceGrid() = default;
  SpaceGrid(int spatial_dims, int n_per_axis);

  int spatial_dims() const { return dims_; }
  int n_per_axis() const { return n_; }
  std::size_t size() const { return size_; }
  double spacing() const { return 1.0 / n_; }
  double cell_volume() const { return std::pow(spacing(), dims_); }
  std::array<int, 3> index(std::size_t linear) const;
  std::size_t linear(const std::array<int, 3>& idx) const;
  /// Node coordinates in [0,1); unused axes are zero.
  std::array<double, 3> position(std::size_t linear) const;

  friend bool operator==(const SpaceGrid&, const SpaceGrid&) = default;

 private:
  int dims_ = 0;
  int n_ = 1;
  std::size_t size_ = 1;
};

struct GridConfig {
  int dim = 3;
  double radius = 6.0;
  int n_velocity = 16;
  int spatial_dims = 0;
  int n_space = 1;
  bool operator==(const GridConfig&) const = default;
};

std::pair<VelocityGrid, SpaceGrid> build_grids(const GridConfig& cfg);

/// Perturbation f(x_i, v_j) around M; the physical density is M + f.
/// Storage is space-major: values[ix * vgrid.size() + iv].
struct DistributionField {
  VelocityGrid vgrid;
  SpaceGrid xgrid;
  std::vector<double> values;
  double time = 0.0;

  DistributionField() = default;
  DistributionField(VelocityGrid v, SpaceGrid x, double t = 0.0)
      : vgrid(v), xgrid(x), values(v.size() * x.size(), 0.0), time(t) {}

  std::size_t velocity_size() const { return vgrid.size(); }
  std::span<double> slice(std::size_t ix) {
    return {values.data() + ix * vgrid.size(), vgrid.size()};
  }
  std::span<const double> slice(std::size_t ix) const {
    return {values.data() + ix * vgrid.size(), vgrid.size()};
  }
  double& at(std::size_t ix, std::size_t iv) { return values[ix * vgrid.size() + iv]; }
  double at(std::size_t ix, std::size_t iv) const {
    return values[ix * vgrid.size() + iv];
  }

  bool all_finite() const;
  /// Smallest value of M + f over all nodes.
  double min_density() const;
  bool same_grids(const DistributionField& other) const {
    return vgrid == other.vgrid && xgrid == other.xgrid;
  }
};

/// Decay constants N_q = sup <v>^q |f| for a family of exponents q.
struct DecayEnvelope {
  std::map<double, double> bounds;

  void record(const DistributionField& f, double q);
  double at(double q) const;
};

}  // namespace bsplit
