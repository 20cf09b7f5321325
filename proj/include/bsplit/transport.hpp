#pragma once

// Free transport d/dt f = -2 v . grad_x f on the periodic unit torus, solved
// exactly mode by mode, and the spatial mollification chi_h * f.

#include <vector>

#include "bsplit/core.hpp"

namespace bsplit {

/// Returns f(x - 2 tau v, v). Spatial axis a is advected by velocity
/// component a, so a slab (spatial_dims = 1) only sees v_0. Identity in the
/// homogeneous mode. On even grids the Nyquist wave number is left unadvected,
/// which keeps the map real, norm preserving and a group in tau.
DistributionField transport_step(const DistributionField& field, double tau);

struct MollifierSpec {
  /// Support radius of the kernel h^{-d} chi(y / h).
  double h = 0.1;
  void validate() const;
};

/// Bump chi(y) = exp(-1 / (1 - |y|^2)) on |y| < 1, sampled on the spatial grid
/// at offsets y = m dx / h and renormalized to unit discrete mass. offsets[k]
/// pairs with weights[k]; offsets are integer lattice vectors.
struct MollifierKernel {
  std::vector<std::array<int, 3>> offsets;
  std::vector<double> weights;
};
MollifierKernel mollifier_kernel(const SpaceGrid& grid, const MollifierSpec& spec);

/// Periodic convolution in x with the discrete kernel; velocity untouched.
DistributionField mollify(const DistributionField& field, const MollifierSpec& spec);

/// sup over x and v of |mollify(f) - f|.
double mollification_jump(const DistributionField& field, const DistributionField& mollified);

/// True when sup_x |mollify(f)(x, v)| <= sup_x |f(x, v)| at every velocity
/// node, up to a relative roundoff of 1e-14.
bool linf_nonexpansive_check(const DistributionField& field, const MollifierSpec& spec);

}  // namespace bsplit
