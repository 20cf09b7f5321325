#include "bsplit/core.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace bsplit {

void PhysParams::validate() const {
  if (!(s > 0.0 && s < 1.0)) throw Error("kernel exponent s must lie in (0,1)");
  if (dim != 2 && dim != 3) throw Error("velocity dimension must be 2 or 3");
  if (!(gamma > -dim)) throw Error("kernel exponent gamma must exceed -dim");
  if (!(kernel_const > 0.0)) throw Error("kernel constant must be positive");
}

double maxwellian(const Vec& v, int dim) {
  return std::pow(2.0 * std::numbers::pi, -0.5 * dim) * std::exp(-0.5 * norm_sq(v));
}

VelocityGrid::VelocityGrid(int dim, double radius, int n_per_axis)
    : dim_(dim), radius_(radius), n_(n_per_axis) {
  if (dim != 2 && dim != 3) throw Error("velocity dimension must be 2 or 3");
  if (!(radius > 0.0)) throw Error("velocity radius must be positive");
  if (n_per_axis < 4) throw Error("velocity grid needs at least 4 nodes per axis");
  spacing_ = 2.0 * radius / n_per_axis;
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(n_);
  cell_volume_ = std::pow(spacing_, dim);
}

std::array<int, 3> VelocityGrid::index(std::size_t linear) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(linear % n_);
    linear /= n_;
  }
  return idx;
}

std::size_t VelocityGrid::linear(const std::array<int, 3>& idx) const {
  std::size_t out = 0;
  for (int a = 0; a < dim_; ++a) out = out * n_ + static_cast<std::size_t>(idx[a]);
  return out;
}

Vec VelocityGrid::node(std::size_t linear_index) const {
  const auto idx = index(linear_index);
  Vec v{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) v[a] = coordinate(idx[a]);
  return v;
}

std::vector<Vec> VelocityGrid::nodes() const {
  std::vector<Vec> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = node(i);
  return out;
}

SpaceGrid::SpaceGrid(int spatial_dims, int n_per_axis) : dims_(spatial_dims), n_(n_per_axis) {
  if (spatial_dims < 0 || spatial_dims > 3) throw Error("spatial_dims must be 0..3");
  if (spatial_dims == 0) n_ = 1;
  if (n_ < 1) throw Error("spatial grid needs at least one node per axis");
  size_ = 1;
  for (int a = 0; a < dims_; ++a) size_ *= static_cast<std::size_t>(n_);
}

std::array<int, 3> SpaceGrid::index(std::size_t linear) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = dims_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(linear % n_);
    linear /= n_;
  }
  return idx;
}

std::size_t SpaceGrid::linear(const std::array<int, 3>& idx) const {
  std::size_t out = 0;
  for (int a = 0; a < dims_; ++a) {
    const int i = ((idx[a] % n_) + n_) % n_;
    out = out * n_ + static_cast<std::size_t>(i);
  }
  return out;
}

std::array<double, 3> SpaceGrid::position(std::size_t linear_index) const {
  const auto idx = index(linear_index);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dims_; ++a) x[a] = idx[a] * spacing();
  return x;
}

std::pair<VelocityGrid, SpaceGrid> build_grids(const GridConfig& cfg) {
  if (cfg.n_velocity < 4) throw Error("velocity grid needs at least 4 nodes per axis");
  if (cfg.spatial_dims != 0 && cfg.n_space < 1) throw Error("spatial resolution must be positive");
  if (cfg.spatial_dims > cfg.dim)
    throw Error("spatial_dims may not exceed the velocity dimension");
  return {VelocityGrid(cfg.dim, cfg.radius, cfg.n_velocity),
          SpaceGrid(cfg.spatial_dims, cfg.spatial_dims == 0 ? 1 : cfg.n_space)};
}

bool DistributionField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

double DistributionField::min_density() const {
  double lo = std::numeric_limits<double>::infinity();
  const std::size_t nv = vgrid.size();
  std::vector<double> m(nv);
  for (std::size_t iv = 0; iv < nv; ++iv) m[iv] = maxwellian(vgrid.node(iv), vgrid.dim());
  for (std::size_t ix = 0; ix < xgrid.size(); ++ix)
    for (std::size_t iv = 0; iv < nv; ++iv) lo = std::min(lo, m[iv] + at(ix, iv));
  return lo;
}

void DecayEnvelope::record(const DistributionField& f, double q) {
  double sup = 0.0;
  const std::size_t nv = f.vgrid.size();
  for (std::size_t iv = 0; iv < nv; ++iv) {
    const double w = bracket_weight(f.vgrid.node(iv), q);
    for (std::size_t ix = 0; ix < f.xgrid.size(); ++ix)
      sup = std::max(sup, w * std::abs(f.at(ix, iv)));
  }
  bounds[q] = sup;
}

double DecayEnvelope::at(double q) const {
  const auto it = bounds.find(q);
  if (it == bounds.end()) throw Error("no decay bound recorded for requested exponent");
  return it->second;
}

}  // namespace bsplit
