#include "bsplit/moments.hpp"

#include <Eigen/Dense>

namespace bsplit {

namespace {

double phi(const Vec& v, int k, int dim) {
  if (k == 0) return 1.0;
  if (k <= dim) return v[k - 1];
  return norm_sq(v);
}

}  // namespace

Moments slice_moments(const VelocityGrid& grid, std::span<const double> g) {
  if (g.size() != grid.size()) throw Error("moment slice size mismatch");
  const int dim = grid.dim();
  Moments m;
  m.count = dim + 2;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == 0.0) continue;
    const Vec v = grid.node(i);
    m.value[0] += g[i];
    for (int a = 0; a < dim; ++a) m.value[1 + a] += v[a] * g[i];
    m.value[dim + 1] += norm_sq(v) * g[i];
  }
  for (double& x : m.value) x *= grid.cell_volume();
  return m;
}

Moments maxwell_moments(const VelocityGrid& grid) {
  std::vector<double> M(grid.size());
  for (std::size_t i = 0; i < M.size(); ++i) M[i] = maxwellian(grid.node(i), grid.dim());
  return slice_moments(grid, M);
}

double slice_entropy(const VelocityGrid& grid, std::span<const double> f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double F = maxwellian(grid.node(i), grid.dim()) + f[i];
    if (F > 0.0) acc += F * std::log(F);
  }
  return acc * grid.cell_volume();
}

double negative_mass(const VelocityGrid& grid, std::span<const double> f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double F = maxwellian(grid.node(i), grid.dim()) + f[i];
    if (F < 0.0) acc -= F;
  }
  return acc * grid.cell_volume();
}

MomentProjector::MomentProjector(const VelocityGrid& grid)
    : grid_(grid), count_(grid.dim() + 2), basis_(count_ * grid.size()) {
  const std::size_t nv = grid.size();
  for (std::size_t i = 0; i < nv; ++i) {
    const Vec v = grid.node(i);
    const double M = maxwellian(v, grid.dim());
    for (int l = 0; l < count_; ++l) basis_[l * nv + i] = phi(v, l, grid.dim()) * M;
  }
  Eigen::MatrixXd gram(count_, count_);
  for (int k = 0; k < count_; ++k)
    for (int l = 0; l < count_; ++l) {
      double acc = 0.0;
      for (std::size_t i = 0; i < nv; ++i)
        acc += phi(grid.node(i), k, grid.dim()) * basis_[l * nv + i];
      gram(k, l) = acc * grid.cell_volume();
    }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) throw Error("moment Gram matrix is singular; velocity grid too coarse");
  const Eigen::MatrixXd inv = lu.inverse();
  for (int k = 0; k < count_; ++k)
    for (int l = 0; l < count_; ++l) inverse_[k * 5 + l] = inv(k, l);
}

std::array<double, 5> MomentProjector::coefficients(const Moments& m) const {
  std::array<double, 5> c{};
  for (int k = 0; k < count_; ++k)
    for (int l = 0; l < count_; ++l) c[k] += inverse_[k * 5 + l] * m.value[l];
  return c;
}

void MomentProjector::restore(std::span<double> g, const Moments& target) const {
  const std::size_t nv = grid_.size();
  // Two passes: the second removes the roundoff left by the first.
  for (int pass = 0; pass < 2; ++pass) {
    const auto c = coefficients(slice_moments(grid_, g) - target);
    for (int l = 0; l < count_; ++l) {
      if (c[l] == 0.0) continue;
      const double* b = basis_.data() + l * nv;
      for (std::size_t i = 0; i < nv; ++i) g[i] -= c[l] * b[i];
    }
  }
}

Moments field_moments(const DistributionField& field) {
  Moments total;
  total.count = field.vgrid.dim() + 2;
  for (std::size_t ix = 0; ix < field.xgrid.size(); ++ix)
    total += slice_moments(field.vgrid, field.slice(ix));
  for (double& x : total.value) x *= field.xgrid.cell_volume();
  return total;
}

void project_field_moments(DistributionField& field) {
  const MomentProjector proj(field.vgrid);
  const std::size_t nv = field.vgrid.size();
  for (int pass = 0; pass < 2; ++pass) {
    const auto c = proj.coefficients(field_moments(field));
    for (std::size_t ix = 0; ix < field.xgrid.size(); ++ix) {
      auto g = field.slice(ix);
      for (int l = 0; l < proj.count(); ++l)
        for (std::size_t i = 0; i < nv; ++i) g[i] -= c[l] * proj.basis(i, l);
    }
  }
}

}  // namespace bsplit
