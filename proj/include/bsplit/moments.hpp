#pragma once

// Discrete velocity moments and the conservative projection onto
// span{M, v_a M, |v|^2 M}.

#include <span>
#include <vector>

#include "bsplit/core.hpp"

namespace bsplit {

/// Mass, momentum (dim components) and energy sum_v phi_k(v) g(v) dv^dim with
/// phi = (1, v_0, .., v_{dim-1}, |v|^2). Unused entries stay zero.
struct Moments {
  std::array<double, 5> value{};
  int count = 5;

  double mass() const { return value[0]; }
  double momentum(int a) const { return value[1 + a]; }
  double energy() const { return value[count - 1]; }
  Moments& operator+=(const Moments& o) {
    for (int k = 0; k < count; ++k) value[k] += o.value[k];
    return *this;
  }
  Moments operator-(const Moments& o) const {
    Moments out = *this;
    for (int k = 0; k < count; ++k) out.value[k] -= o.value[k];
    return out;
  }
};

Moments slice_moments(const VelocityGrid& grid, std::span<const double> g);
/// Moments of the grid Maxwellian.
Moments maxwell_moments(const VelocityGrid& grid);
/// sum (M+f) log(M+f) dv over nodes with M+f > 0.
double slice_entropy(const VelocityGrid& grid, std::span<const double> f);
/// Total mass of the negative part of M+f.
double negative_mass(const VelocityGrid& grid, std::span<const double> f);

/// Subtracts a combination of phi_k M fixed by a Gram solve in the grid's
/// discrete inner product, so that moments come out exactly as requested.
class MomentProjector {
 public:
  /// Throws Error when the Gram matrix is numerically singular.
  explicit MomentProjector(const VelocityGrid& grid);

  /// Shifts g so that slice_moments(g) equals target.
  void restore(std::span<double> g, const Moments& target) const;
  /// restore with target zero.
  void project(std::span<double> g) const { restore(g, Moments{{}, count_}); }
  /// Coefficients c with sum_l c_l phi_l M having moments m.
  std::array<double, 5> coefficients(const Moments& m) const;
  /// phi_l(v_i) M(v_i) for basis index l.
  double basis(std::size_t node, int l) const { return basis_[l * grid_.size() + node]; }
  int count() const { return count_; }

 private:
  VelocityGrid grid_;
  int count_;
  std::vector<double> basis_;
  std::array<double, 25> inverse_{};
};

/// Field-level projection: subtracts the same combination at every x so that
/// the spatially integrated moments of f vanish.
void project_field_moments(DistributionField& field);
Moments field_moments(const DistributionField& field);

}  // namespace bsplit
