#include "bsplit/homogeneous.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bsplit {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// y = A x for a row-major square matrix.
void matvec(const std::vector<double>& A, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  Eigen::Map<const RowMatrix> a(A.data(), n, n);
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
  Eigen::Map<Eigen::VectorXd> yv(y.data(), n);
  yv.noalias() = a * xv;
}

double weighted_sup(std::span<const double> f, const std::vector<double>& w) {
  double out = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) out = std::max(out, w[i] * std::abs(f[i]));
  return out;
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::explicit_euler: return "explicit-euler";
    case Scheme::rk4: return "rk4";
    case Scheme::lawson_rk4: return "lawson-rk4";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "explicit-euler") return Scheme::explicit_euler;
  if (name == "rk4") return Scheme::rk4;
  if (name == "lawson-rk4") return Scheme::lawson_rk4;
  throw Error("unknown time scheme '" + name + "'");
}

void StepperConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("stepper dt must be positive");
  if (!(max_dt_factor > 0.0)) throw Error("max_dt_factor must be positive");
  if (!(guard_q >= 0.0)) throw Error("guard exponent must be nonnegative");
  if (!(guard_factor > 1.0)) throw Error("guard factor must exceed 1");
}

double stability_heuristic(const VelocityGrid& grid, const PhysParams& params, double c) {
  const double corner = (grid.radius() - 0.5 * grid.spacing()) * std::sqrt(double(grid.dim()));
  const double lambda = maxwell_convolution(corner, params.gamma + 2.0 * params.s, grid.dim());
  return c * std::pow(grid.spacing(), 2.0 * params.s) / lambda;
}

HomogeneousSolver::HomogeneousSolver(const VelocityGrid& grid, const PhysParams& params,
                                     const QuadratureSpec& spec, StepperConfig cfg)
    : model_(grid, params, spec), rhs_(model_), proj_(grid), cfg_(cfg), weight_(grid.size()) {
  cfg_.validate();
  if (cfg_.adaptive && cfg_.scheme != Scheme::lawson_rk4)
    cfg_.dt = std::min(cfg_.dt, cfg_.max_dt_factor * stability_heuristic(grid, params));
  for (std::size_t i = 0; i < grid.size(); ++i)
    weight_[i] = bracket_weight(grid.node(i), cfg_.guard_q);
}

void HomogeneousSolver::rhs(std::span<const double> f, std::span<double> out) const {
  rhs_(f, out);
}

std::vector<double> HomogeneousSolver::rhs(std::span<const double> f) const {
  std::vector<double> out(f.size());
  rhs_(f, out);
  return out;
}

double HomogeneousSolver::substep(double h) const {
  if (!(h > 0.0)) throw Error("collision step length must be positive");
  const double n = std::ceil(h / cfg_.dt * (1.0 - 1e-12));
  return h / std::max(1.0, n);
}

const HomogeneousSolver::Exponentials& HomogeneousSolver::exponentials(double dt) const {
  std::lock_guard lock(cache_mutex_);
  auto it = cache_.find(dt);
  if (it != cache_.end()) return *it->second;
  const std::vector<double>& L = rhs_.linear_matrix();
  const std::size_t n = model_.grid().size();
  Eigen::Map<const RowMatrix> l(L.data(), n, n);
  auto e = std::make_shared<Exponentials>();
  RowMatrix half = (0.5 * dt * l).exp();
  RowMatrix full = half * half;
  e->half.assign(half.data(), half.data() + n * n);
  e->full.assign(full.data(), full.data() + n * n);
  return *cache_.emplace(dt, std::move(e)).first->second;
}

void HomogeneousSolver::advance(std::span<double> f, double dt,
                                std::vector<double>& work) const {
  const std::size_t n = f.size();
  work.resize(6 * n);
  std::span<double> k1(work.data(), n), k2(work.data() + n, n), k3(work.data() + 2 * n, n),
      k4(work.data() + 3 * n, n), y(work.data() + 4 * n, n), z(work.data() + 5 * n, n);
  switch (cfg_.scheme) {
    case Scheme::explicit_euler:
      rhs_(f, k1);
      for (std::size_t i = 0; i < n; ++i) f[i] += dt * k1[i];
      return;
    case Scheme::rk4:
      rhs_(f, k1);
      for (std::size_t i = 0; i < n; ++i) y[i] = f[i] + 0.5 * dt * k1[i];
      rhs_(y, k2);
      for (std::size_t i = 0; i < n; ++i) y[i] = f[i] + 0.5 * dt * k2[i];
      rhs_(y, k3);
      for (std::size_t i = 0; i < n; ++i) y[i] = f[i] + dt * k3[i];
      rhs_(y, k4);
      for (std::size_t i = 0; i < n; ++i)
        f[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      return;
    case Scheme::lawson_rk4: {
      const Exponentials& E = exponentials(dt);
      const QuadraticTerm& N = rhs_.quadratic_term();
      N(f, k1);
      for (std::size_t i = 0; i < n; ++i) z[i] = f[i] + 0.5 * dt * k1[i];
      matvec(E.half, z, y);
      N(y, k2);
      matvec(E.half, f, z);  // z = E_half f
      for (std::size_t i = 0; i < n; ++i) y[i] = z[i] + 0.5 * dt * k2[i];
      N(y, k3);
      // y = E_full f + dt E_half k3
      matvec(E.half, k3, y);
      matvec(E.full, f, z);
      for (std::size_t i = 0; i < n; ++i) y[i] = z[i] + dt * y[i];
      N(y, k4);
      // f+ = E_full (f + dt/6 k1) + dt/3 E_half (k2 + k3) + dt/6 k4
      for (std::size_t i = 0; i < n; ++i) {
        k2[i] += k3[i];
        y[i] = f[i] + dt / 6.0 * k1[i];
      }
      matvec(E.full, y, z);
      matvec(E.half, k2, k3);
      for (std::size_t i = 0; i < n; ++i) f[i] = z[i] + dt / 3.0 * k3[i] + dt / 6.0 * k4[i];
      return;
    }
  }
}

StepReport HomogeneousSolver::step(std::span<double> f, double h) const {
  const VelocityGrid& grid = model_.grid();
  if (f.size() != grid.size()) throw Error("collision slice size mismatch");
  StepReport report;
  report.dt = substep(h);
  report.substeps = static_cast<int>(std::lround(h / report.dt));
  report.entropy.push_back(slice_entropy(grid, f));
  double min_density = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < f.size(); ++i)
    min_density = std::min(min_density, maxwellian(grid.node(i), grid.dim()) + f[i]);
  const bool zero = std::all_of(f.begin(), f.end(), [](double x) { return x == 0.0; });
  const Moments target = slice_moments(grid, f);
  std::vector<double> work;
  double sup = weighted_sup(f, weight_);
  for (int k = 0; k < report.substeps; ++k) {
    // f = 0 is an exact fixed point of both parts of the right-hand side.
    if (!zero) {
      advance(f, report.dt, work);
      if (cfg_.conserve) proj_.restore(f, target);
    }
    const double next = weighted_sup(f, weight_);
    if (!std::isfinite(next) || (sup > 0.0 && next > cfg_.guard_factor * sup)) {
      std::ostringstream msg;
      msg << "blow-up guard: sup <v>^" << cfg_.guard_q << "|f| went from " << sup << " to "
          << next << " in one substep of length " << report.dt;
      throw BlowUpError(msg.str());
    }
    sup = next;
    report.weighted_sup.push_back(sup);
    report.entropy.push_back(slice_entropy(grid, f));
    for (std::size_t i = 0; i < f.size(); ++i)
      min_density = std::min(min_density, maxwellian(grid.node(i), grid.dim()) + f[i]);
  }
  report.min_density = min_density;
  return report;
}

}  // namespace bsplit
