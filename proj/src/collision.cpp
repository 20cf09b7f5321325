#include "bsplit/collision.hpp"

#include "bsplit/moments.hpp"

#include <algorithm>
#include <numbers>

namespace bsplit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

const GaussRule& gl10() {
  static const GaussRule rule = gauss_legendre(10);
  return rule;
}

// exp(-x) I_0(x) for x >= 0.
double scaled_i0(double x) {
  if (x < 500.0) return std::cyl_bessel_i(0.0, x) * std::exp(-x);
  return (1.0 + 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x)) / std::sqrt(kTwoPi * x);
}

// Composite 10-point Gauss-Legendre on [a, b] with panels no wider than width.
template <class F>
double composite(F&& fn, double a, double b, double width) {
  if (!(b > a)) return 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / width)));
  const double h = (b - a) / panels;
  const GaussRule& g = gl10();
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      acc += g.weights[i] * 0.5 * h * fn(lo + 0.5 * h * (g.nodes[i] + 1.0));
  }
  return acc;
}

Vec cross(const Vec& a, const Vec& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Orthonormal frame of the complement of a unit direction, chosen from the
// line through sigma only (sigma and -sigma give the same frame).
void frame_for(Vec& sigma, int dim, Vec& e1, Vec& e2) {
  for (int a = 0; a < 3; ++a) {
    if (sigma[a] > 0.0) break;
    if (sigma[a] < 0.0) {
      sigma = -1.0 * sigma;
      break;
    }
  }
  if (dim == 2) {
    e1 = {-sigma[1], sigma[0], 0.0};
    e2 = {0.0, 0.0, 0.0};
    return;
  }
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(sigma[a]) < std::abs(sigma[axis])) axis = a;
  Vec ref{0.0, 0.0, 0.0};
  ref[axis] = 1.0;
  e1 = cross(sigma, ref);
  e1 = (1.0 / norm(e1)) * e1;
  e2 = cross(sigma, e1);
}

double perp_norm(const Vec& v, const Vec& sigma) {
  const double vs = dot(v, sigma);
  return std::sqrt(std::max(0.0, norm_sq(v) - vs * vs));
}

}  // namespace

double angular_b(double cos_theta, const AngularCrossSection& xs) {
  if (xs.cutoff_negative_cos && cos_theta < 0.0) return 0.0;
  const double c = std::clamp(cos_theta, -1.0, 1.0);
  const double sin_half = std::sqrt(0.5 * (1.0 - c));
  return std::pow(sin_half, -(xs.dim - 1) - 2.0 * xs.s);
}

CancellationConstant cancellation_constant(const PhysParams& params,
                                           const AngularCrossSection& xs, int n_nodes,
                                           double rel_tol, int max_doublings) {
  params.validate();
  if (!xs.cutoff_negative_cos)
    throw Error("cancellation constant assumes b = 0 for cos theta < 0");
  if (!(params.gamma + params.dim > 0.0)) throw Error("cancellation constant needs gamma + dim > 0");
  if (n_nodes < 10) throw Error("cancellation constant needs at least 10 nodes");
  const int d = xs.dim;
  const double s = xs.s;
  const double sphere = d == 3 ? kTwoPi : 2.0;
  const double p = 1.0 / (2.0 - 2.0 * s);
  // theta = (pi/2) y^p removes the theta^{1-2s} behaviour at the origin.
  auto integrand = [&](double y) {
    if (y <= 0.0) return 0.0;
    const double th = 0.5 * kPi * std::pow(y, p);
    const double dth = 0.5 * kPi * p * std::pow(y, p - 1.0);
    const double sin_half = std::sin(0.5 * th);
    const double sin_quarter = std::sin(0.25 * th);
    const double bracket =
        std::expm1(-(d + params.gamma) * std::log1p(-2.0 * sin_quarter * sin_quarter));
    const double b = std::pow(sin_half, -(d - 1) - 2.0 * s);
    return sphere * std::pow(std::sin(th), d - 2) * b * bracket * dth;
  };
  auto rule = [&](int n) {
    const int panels = (n + 9) / 10;
    return composite(integrand, 0.0, 1.0, 1.0 / panels);
  };
  double prev = rule(n_nodes);
  int n = n_nodes;
  for (int k = 0; k <= max_doublings; ++k) {
    n *= 2;
    const double next = rule(n);
    const double err = std::abs(next - prev);
    if (err <= rel_tol * std::abs(next)) {
      return {params.kernel_const * next, params.gamma, s, params.kernel_const * err};
    }
    prev = next;
  }
  throw QuadratureError("cancellation constant quadrature did not converge");
}

double maxwell_convolution(double v_norm, double kappa, int dim) {
  if (!(kappa > -dim)) throw Error("convolution exponent must exceed -dim");
  const double r_hi = v_norm + 12.0;
  if (dim == 3) {
    auto fn = [&](double r) {
      const double x = r * v_norm;
      const double g = x < 1e-8 ? 1.0 - x : -std::expm1(-2.0 * x) / (2.0 * x);
      const double e = -0.5 * (v_norm - r) * (v_norm - r);
      return std::pow(r, kappa + 2.0) * std::exp(e) * g;
    };
    // r = y^2 on the first unit panel tames the r^{kappa+2} factor.
    auto head = [&](double y) { return 2.0 * y * fn(y * y); };
    const double integral = composite(head, 0.0, 1.0, 0.25) + composite(fn, 1.0, r_hi, 0.5);
    return std::pow(kTwoPi, -1.5) * 4.0 * kPi * integral;
  }
  auto fn = [&](double r) {
    const double e = -0.5 * (v_norm - r) * (v_norm - r);
    return std::pow(r, kappa + 1.0) * std::exp(e) * scaled_i0(r * v_norm);
  };
  auto head = [&](double y) { return 2.0 * y * fn(y * y); };
  return composite(head, 0.0, 1.0, 0.25) + composite(fn, 1.0, r_hi, 0.5);
}

double maxwell_plane(double c, double rho, double a, int dim) {
  c = std::abs(c);
  const double hi = std::max(rho, c) + 12.0;
  if (dim == 3) {
    auto fn = [&](double t) {
      const double g = -0.5 * (t - c) * (t - c);
      return t * std::pow(rho * rho + t * t, a) * std::exp(g) * scaled_i0(c * t);
    };
    return kTwoPi * composite(fn, rho, hi, 0.5);
  }
  auto fn = [&](double t) {
    return std::pow(rho * rho + t * t, a) *
           (std::exp(-0.5 * (t + c) * (t + c)) + std::exp(-0.5 * (t - c) * (t - c)));
  };
  return composite(fn, rho, hi, 0.5);
}

double maxwell_hyperplane(const Vec& center, const Vec& sigma, double rho, double a, int dim) {
  const double vs = dot(center, sigma);
  const double c = perp_norm(center, sigma);
  return std::pow(kTwoPi, -0.5 * dim) * std::exp(-0.5 * vs * vs) * maxwell_plane(c, rho, a, dim);
}

double cell_average_power(double h, double kappa, int dim) {
  if (!(kappa > -dim)) throw Error("cell average needs kappa > -dim");
  // Split the cube into 2 dim pyramids with apex at the centre; the radial
  // integral is exact and the face integral is smooth.
  const GaussRule g = gauss_legendre(12, -0.5, 0.5);
  double face = 0.0;
  if (dim == 2) {
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      face += g.weights[i] * std::pow(0.25 + g.nodes[i] * g.nodes[i], 0.5 * kappa);
  } else {
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      for (std::size_t j = 0; j < g.nodes.size(); ++j)
        face += g.weights[i] * g.weights[j] *
                std::pow(0.25 + g.nodes[i] * g.nodes[i] + g.nodes[j] * g.nodes[j], 0.5 * kappa);
  }
  return std::pow(h, kappa) * dim / (kappa + dim) * face;
}

GridConvolution::GridConvolution(const VelocityGrid& grid, double kappa)
    : grid_(grid), kappa_(kappa), width_(2 * grid.n_per_axis() - 1) {
  const int n = grid.n_per_axis();
  const int d = grid.dim();
  const double h = grid.spacing();
  std::size_t size = 1;
  for (int a = 0; a < d; ++a) size *= static_cast<std::size_t>(width_);
  table_.resize(size);
  const double self = cell_average_power(h, kappa, d);
  for (std::size_t idx = 0; idx < size; ++idx) {
    std::size_t rest = idx;
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const int o = static_cast<int>(rest % width_) - (n - 1);
      rest /= width_;
      r2 += static_cast<double>(o) * o;
    }
    table_[idx] = r2 == 0.0 ? self : std::pow(r2 * h * h, 0.5 * kappa);
  }
}

double GridConvolution::at(std::span<const double> f, std::size_t node) const {
  const int n = grid_.n_per_axis();
  const auto iv = grid_.index(node);
  const double vol = grid_.cell_volume();
  double acc = 0.0;
  if (grid_.dim() == 3) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double* row = f.data() + (static_cast<std::size_t>(i) * n + j) * n;
        const std::size_t base =
            (static_cast<std::size_t>(iv[0] - i + n - 1) * width_ + (iv[1] - j + n - 1)) * width_ +
            (iv[2] + n - 1);
        const double* w = table_.data() + base;
        double line = 0.0;
        for (int k = 0; k < n; ++k) line += row[k] * w[-k];
        acc += line;
      }
  } else {
    for (int i = 0; i < n; ++i) {
      const double* row = f.data() + static_cast<std::size_t>(i) * n;
      const double* w = table_.data() + static_cast<std::size_t>(iv[0] - i + n - 1) * width_ +
                        (iv[1] + n - 1);
      for (int k = 0; k < n; ++k) acc += row[k] * w[-k];
    }
  }
  return acc * vol;
}

double GridConvolution::weight(std::size_t node, std::size_t source) const {
  const int n = grid_.n_per_axis();
  const auto iv = grid_.index(node);
  const auto is = grid_.index(source);
  std::size_t idx = 0;
  for (int a = 0; a < grid_.dim(); ++a)
    idx = idx * width_ + static_cast<std::size_t>(iv[a] - is[a] + n - 1);
  return table_[idx] * grid_.cell_volume();
}

void GridConvolution::apply(std::span<const double> f, std::span<double> out) const {
  for (std::size_t i = 0; i < grid_.size(); ++i) out[i] = at(f, i);
}

double Density::operator()(const Vec& w) const {
  if (mask && !mask(w)) return 0.0;
  double val = 0.0;
  const int d = grid ? grid->dim() : 3;
  if (maxwell != 0.0) val += maxwell * maxwellian(w, d);
  if (has_grid_part()) val += grid->interpolate(f, w);
  return val;
}

TestFunction grid_function(const VelocityGrid& grid, std::span<const double> values) {
  return [grid, values](const Vec& v) { return grid.interpolate_cubic(values, v); };
}

CollisionModel::CollisionModel(const VelocityGrid& grid, const PhysParams& params,
                               const QuadratureSpec& spec)
    : grid_(grid), params_(params), spec_(spec), conv_gamma_(grid, params.gamma) {
  params_.validate();
  spec_.validate();
  if (params_.dim != grid_.dim()) throw Error("parameter and grid dimensions differ");
  const int d = grid_.dim();
  const double R = grid_.radius();
  a_ = 0.5 * (params_.gamma + 1.0 + 2.0 * params_.s);
  dw_ = 2.0 * R / (spec_.n_hyperplane > 0 ? spec_.n_hyperplane : grid_.n_per_axis());
  const double r_min = spec_.r_min_factor * grid_.spacing();
  const double r_max = (spec_.r_max_factor > 0.0 ? spec_.r_max_factor : 2.0 * std::sqrt(d)) * R;
  radial_ = RadialRule::log_spaced(r_min, r_max, spec_.n_radii, params_.s);
  for (std::size_t j = 0; j < radial_.size(); ++j) {
    double c = radial_.weight[j] * std::pow(radial_.rho[j], -1.0 - 2.0 * params_.s);
    if (j == 0) c += radial_.inner;
    radial_coef_.push_back(c);
  }
  rings_ = RingRadii::build(radial_, r_max, dw_);
  rings_ext_ = RingRadii::build(radial_, std::max(r_max, R * std::sqrt(d) + 14.0), dw_);
  auto powers = [&](const RingRadii& rr, std::vector<double>& out) {
    out.resize(rr.size() * radial_.size());
    for (std::size_t k = 0; k < rr.size(); ++k)
      for (std::size_t j = 0; j < radial_.size(); ++j)
        out[k * radial_.size() + j] =
            std::pow(radial_.rho[j] * radial_.rho[j] + rr.t[k] * rr.t[k], a_);
  };
  powers(rings_, ring_pow_);
  powers(rings_ext_, ring_pow_ext_);
  cancel_ = cancellation_constant(params_, {params_.s, d, true});
  prefactor_ = std::pow(2.0, d - 1) * params_.kernel_const;

  const double c_max = R * std::sqrt(d) + 0.2;
  table_n_ = static_cast<int>(std::ceil(c_max / table_dc_)) + 4;
  table_.resize(static_cast<std::size_t>(table_n_) * radial_.size());
  for (int i = 0; i < table_n_; ++i)
    for (std::size_t j = 0; j < radial_.size(); ++j)
      table_[i * radial_.size() + j] = maxwell_plane(i * table_dc_, radial_.rho[j], a_, d);
}

double CollisionModel::maxwell_profile(std::size_t j, double c, double v_sigma) const {
  const double pre = std::pow(kTwoPi, -0.5 * grid_.dim()) * std::exp(-0.5 * v_sigma * v_sigma);
  const double x = c / table_dc_;
  int i0 = static_cast<int>(std::floor(x)) - 1;
  if (i0 + 3 >= table_n_) return pre * maxwell_plane(c, radial_.rho[j], a_, grid_.dim());
  i0 = std::max(i0, 0);
  const double t = x - i0 - 1.0;
  const double w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
  const std::size_t nr = radial_.size();
  const double* col = table_.data() + static_cast<std::size_t>(i0) * nr + j;
  return pre * (w0 * col[0] + w1 * col[nr] + w2 * col[2 * nr] + w3 * col[3 * nr]);
}

namespace {

// Visits midpoint samples on rings of radius t[k] around center in the plane
// spanned by e1, e2 (the two points +-t e1 in 2D) as visit(k, point, weight),
// with weight the arc length element divided by t. With clip set, rings are
// restricted to the support of interpolated grid fields.
template <class Visit>
void ring_walk(const VelocityGrid& grid, const Vec& center, const Vec& e1, const Vec& e2,
               std::span<const double> t, bool clip, double dw, Visit&& visit) {
  if (grid.dim() == 2) {
    for (std::size_t k = 0; k < t.size(); ++k) {
      visit(k, center + t[k] * e1, 1.0);
      visit(k, center - t[k] * e1, 1.0);
    }
    return;
  }
  auto arc = [&](std::size_t k, double begin, double len, int m) {
    const double tk = t[k];
    const double dphi = len / m;
    double c = std::cos(begin + 0.5 * dphi);
    double s = std::sin(begin + 0.5 * dphi);
    const double cd = std::cos(dphi);
    const double sd = std::sin(dphi);
    for (int i = 0; i < m; ++i) {
      visit(k,
            Vec{center[0] + tk * (c * e1[0] + s * e2[0]), center[1] + tk * (c * e1[1] + s * e2[1]),
                center[2] + tk * (c * e1[2] + s * e2[2])},
            dphi);
      const double cn = c * cd - s * sd;
      s = s * cd + c * sd;
      c = cn;
    }
  };
  const RingClipper clipper(center, e1, e2, grid.support_radius());
  RingClipper::Arcs arcs;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double tk = t[k];
    if (clip && tk > clipper.far_radius()) break;
    const int n_arcs = clip ? clipper.clip(tk, arcs) : -1;
    if (n_arcs < 0) {
      arc(k, 0.0, kTwoPi, std::max(8, static_cast<int>(std::ceil(kTwoPi * tk / dw))));
      continue;
    }
    for (int i = 0; i < n_arcs; ++i) {
      const double len = arcs[i].end - arcs[i].begin;
      arc(k, arcs[i].begin, len, std::max(1, static_cast<int>(std::ceil(len * tk / dw))));
    }
  }
}

// Angular integrals of the sampled part of F on the rings of ring_walk. With
// pointwise == false only the grid part is sampled, by multilinear
// interpolation, and rings are clipped to its support.
void ring_sums(const Density& F, const VelocityGrid& grid, const Vec& center, const Vec& e1,
               const Vec& e2, std::span<const double> t, bool pointwise, double dw,
               std::vector<double>& out) {
  out.assign(t.size(), 0.0);
  if (pointwise) {
    ring_walk(grid, center, e1, e2, t, false, dw,
              [&](std::size_t k, const Vec& p, double w) { out[k] += w * F(p); });
  } else if (F.has_grid_part()) {
    ring_walk(grid, center, e1, e2, t, true, dw, [&](std::size_t k, const Vec& p, double w) {
      out[k] += w * grid.interpolate(F.f, p);
    });
  }
}

}  // namespace

double CollisionModel::ring_fold_impl(const Density& F, const Vec& center, const Vec& e1,
                                      const Vec& e2, std::span<const double> E,
                                      bool pointwise, const RingRadii& rings) const {
  std::vector<double> P;
  ring_sums(F, grid_, center, e1, e2, rings.t, pointwise, dw_, P);
  const int d = grid_.dim();
  double acc = 0.0;
  for (std::size_t k = 0; k < rings.size(); ++k) {
    const double tw = d == 3 ? rings.t[k] : 1.0;
    acc += rings.weight[k] * tw * E[k] * P[k];
  }
  return acc;
}

double CollisionModel::ring_fold(const Density& F, const Vec& center, const Vec& e1,
                                 const Vec& e2, std::span<const double> E,
                                 bool pointwise_maxwell) const {
  return ring_fold_impl(F, center, e1, e2, E, pointwise_maxwell,
                        pointwise_maxwell ? rings_ext_ : rings_);
}

std::vector<double> CollisionModel::hyperplane_profile(const Density& F, const Vec& center,
                                                       const Direction& dir) const {
  const Vec& sigma = dir.sigma;
  const Vec& e1 = dir.e1;
  const Vec& e2 = dir.e2;
  const std::size_t nr = radial_.size();
  std::vector<double> H(nr, 0.0);
  const bool pointwise = static_cast<bool>(F.mask);
  if (!pointwise && F.maxwell != 0.0) {
    const double vs = dot(center, sigma);
    const double c = perp_norm(center, sigma);
    for (std::size_t j = 0; j < nr; ++j) H[j] = F.maxwell * maxwell_profile(j, c, vs);
  }
  if (!pointwise && !F.has_grid_part()) return H;
  const RingRadii& rings = pointwise ? rings_ext_ : rings_;
  const std::vector<double>& pw = pointwise ? ring_pow_ext_ : ring_pow_;
  std::vector<double> P;
  ring_sums(F, grid_, center, e1, e2, rings.t, pointwise, dw_, P);
  const int d = grid_.dim();
  for (std::size_t k = 0; k < rings.size(); ++k) {
    const double base = rings.weight[k] * (d == 3 ? rings.t[k] : 1.0) * P[k];
    if (base == 0.0) continue;
    for (std::size_t j = 0; j < nr && rings.first_ring[j] <= static_cast<int>(k); ++j)
      H[j] += base * pw[k * nr + j];
  }
  return H;
}

double CollisionModel::hyperplane(const Density& F, const Vec& center, const Vec& u) const {
  const double rho = norm(u);
  if (!(rho > 0.0)) throw Error("hyperplane integral needs a nonzero direction");
  Vec sigma = (1.0 / rho) * u;
  Vec e1, e2;
  frame_for(sigma, grid_.dim(), e1, e2);
  const bool pointwise = static_cast<bool>(F.mask);
  const int d = grid_.dim();
  double H = 0.0;
  if (!pointwise && F.maxwell != 0.0) H += F.maxwell * maxwell_hyperplane(center, sigma, rho, a_, d);
  if (!pointwise && !F.has_grid_part()) return H;
  const double reach = norm(center) + grid_.support_radius() * std::sqrt(d);
  const double t_end = pointwise ? std::max(reach, perp_norm(center, sigma) + 14.0) : reach;
  if (!(t_end > rho)) return H;
  const int m = std::max(1, static_cast<int>(std::ceil((t_end - rho) / dw_)));
  const double h = (t_end - rho) / m;
  std::vector<double> t(m);
  for (int i = 0; i < m; ++i) t[i] = rho + (i + 0.5) * h;
  std::vector<double> P;
  ring_sums(F, grid_, center, e1, e2, t, pointwise, dw_, P);
  for (int i = 0; i < m; ++i)
    H += h * (d == 3 ? t[i] : 1.0) * std::pow(rho * rho + t[i] * t[i], a_) * P[i];
  return H;
}

double CollisionModel::kf(const Density& F, const Vec& v, const Vec& v_prime) const {
  const Vec u = v_prime - v;
  const double r = norm(u);
  if (r < 1e-12 * grid_.spacing()) throw Error("kernel evaluated on a degenerate direction");
  return prefactor_ * std::pow(r, -grid_.dim() - 2.0 * params_.s) * hyperplane(F, v, u);
}

bool CollisionModel::kernel_symmetry_check(const Density& F, const Vec& v, const Vec& u,
                                           double rel_tol) const {
  const double k1 = kf(F, v, v + u);
  const double k2 = kf(F, v, v - u);
  const double scale = std::max({std::abs(k1), std::abs(k2), 1e-300});
  return std::abs(k1 - k2) <= rel_tol * scale;
}

double CollisionModel::q_s(const Density& F, const TestFunction& G, const Vec& v) const {
  const std::size_t nr = radial_.size();
  const bool pointwise = static_cast<bool>(F.mask);
  const RingRadii& rings = pointwise ? rings_ext_ : rings_;
  const std::vector<double>& pw = pointwise ? ring_pow_ext_ : ring_pow_;
  const double gv = G(v);
  std::vector<double> g(nr), E(rings.size());
  double total = 0.0;
  for (const Direction& dir : directions_at(v).dirs) {
    const Vec& sigma = dir.sigma;
    for (std::size_t j = 0; j < nr; ++j) {
      const Vec step = radial_.rho[j] * sigma;
      g[j] = radial_coef_[j] * (G(v + step) + G(v - step) - 2.0 * gv);
    }
    double part = 0.0;
    if (!pointwise && F.maxwell != 0.0) {
      const double vs = dot(v, sigma);
      const double c = perp_norm(v, sigma);
      for (std::size_t j = 0; j < nr; ++j) part += F.maxwell * g[j] * maxwell_profile(j, c, vs);
    }
    if (pointwise || F.has_grid_part()) {
      for (std::size_t k = 0; k < rings.size(); ++k) {
        double e = 0.0;
        for (std::size_t j = 0; j < nr && rings.first_ring[j] <= static_cast<int>(k); ++j)
          e += g[j] * pw[k * nr + j];
        E[k] = e;
      }
      part += ring_fold_impl(F, v, dir.e1, dir.e2, E, pointwise, rings);
    }
    total += dir.weight * part;
  }
  return prefactor_ * total;
}

double CollisionModel::convolution(const Density& F, std::size_t node) const {
  const Vec v = grid_.node(node);
  if (F.mask) {
    std::vector<double> vals(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) vals[i] = F(grid_.node(i));
    return conv_gamma_.at(vals, node);
  }
  double out = 0.0;
  if (F.maxwell != 0.0) out += F.maxwell * maxwell_convolution(norm(v), params_.gamma, grid_.dim());
  if (F.has_grid_part()) out += conv_gamma_.at(F.f, node);
  return out;
}

double CollisionModel::q_ns(const Density& F, const TestFunction& G, std::size_t node) const {
  return cancel_.value * convolution(F, node) * G(grid_.node(node));
}

double CollisionModel::q_total(const Density& F, const TestFunction& G, std::size_t node) const {
  return q_s(F, G, grid_.node(node)) + q_ns(F, G, node);
}

double CollisionModel::cancellation_integral(const Density& F, const Vec& v) const {
  const std::size_t nr = radial_.size();
  double total = 0.0;
  for (const Direction& dir : directions_at(v).dirs) {
    const Vec& sigma = dir.sigma;
    std::vector<double> D(nr, 0.0);
    Density sampled = F;
    if (!F.mask && F.maxwell != 0.0) {
      // Shifting the centre along sigma leaves |v_perp| unchanged.
      const double vs = dot(v, sigma);
      const double c = perp_norm(v, sigma);
      for (std::size_t j = 0; j < nr; ++j) {
        const double r = radial_.rho[j];
        const double h = maxwell_profile(j, c, 0.0);
        D[j] = F.maxwell * h *
               (2.0 * std::exp(-0.5 * vs * vs) - std::exp(-0.5 * (vs + r) * (vs + r)) -
                std::exp(-0.5 * (vs - r) * (vs - r)));
      }
      sampled.maxwell = 0.0;
    }
    if (sampled.mask || sampled.has_grid_part()) {
      const std::vector<double> H0 = hyperplane_profile(sampled, v, dir);
      for (std::size_t j = 0; j < nr; ++j) {
        const Vec step = radial_.rho[j] * sigma;
        const double hp = hyperplane_profile(sampled, v + step, dir)[j];
        const double hm = hyperplane_profile(sampled, v - step, dir)[j];
        D[j] += 2.0 * H0[j] - hp - hm;
      }
    }
    double part = 0.0;
    for (std::size_t j = 0; j < nr; ++j) part += radial_coef_[j] * D[j];
    total += dir.weight * part;
  }
  return prefactor_ * total;
}

KernelBoundReport CollisionModel::kernel_bound_check(const Density& F, std::size_t node,
                                                     double r) const {
  if (!(r > 0.0)) throw Error("kernel bound check needs r > 0");
  const Vec v = grid_.node(node);
  const double s = params_.s;
  const std::size_t nr = radial_.size();
  const auto& rho = radial_.rho;
  const GaussRule g = gauss_legendre(4, 0.0, 1.0);
  KernelBoundReport rep;
  for (const Direction& dir : directions_at(v).dirs) {
    const std::vector<double> H = hyperplane_profile(F, v, dir);
    double near = 0.0;
    double far = 0.0;
    // |H| is constant below r_min and piecewise linear between radial nodes.
    auto add = [&](double lo, double hi, double h_lo, double h_hi) {
      if (!(hi > lo)) return;
      for (std::size_t q = 0; q < g.nodes.size(); ++q) {
        const double x = lo + (hi - lo) * g.nodes[q];
        const double hx = h_lo + (h_hi - h_lo) * g.nodes[q];
        const double w = g.weights[q] * (hi - lo);
        if (x < r)
          near += w * std::pow(x, 1.0 - 2.0 * s) * hx;
        else
          far += w * std::pow(x, -1.0 - 2.0 * s) * hx;
      }
    };
    const double h0 = std::abs(H[0]);
    if (r <= rho[0]) {
      near += h0 * std::pow(r, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
      far += h0 * (std::pow(r, -2.0 * s) - std::pow(rho[0], -2.0 * s)) / (2.0 * s);
    } else {
      near += h0 * std::pow(rho[0], 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    }
    for (std::size_t j = 0; j + 1 < nr; ++j) {
      const double lo = rho[j];
      const double hi = rho[j + 1];
      const double a = std::abs(H[j]);
      const double b = std::abs(H[j + 1]);
      if (r > lo && r < hi) {
        const double hr = a + (b - a) * (r - lo) / (hi - lo);
        add(lo, r, a, hr);
        add(r, hi, hr, b);
      } else {
        add(lo, hi, a, b);
      }
    }
    rep.near_moment += dir.weight * near;
    rep.far_mass += dir.weight * far;
  }
  // Paired directions cover the sphere twice over the half set.
  rep.near_moment *= 2.0 * std::abs(prefactor_);
  rep.far_mass *= 2.0 * std::abs(prefactor_);
  std::vector<double> absF(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) absF[i] = std::abs(F(grid_.node(i)));
  rep.weighted_mass = GridConvolution(grid_, params_.gamma + 2.0 * s).at(absF, node);
  if (rep.weighted_mass > 0.0) {
    rep.near_ratio = rep.near_moment / (std::pow(r, 2.0 - 2.0 * s) * rep.weighted_mass);
    rep.far_ratio = rep.far_mass / (std::pow(r, -2.0 * s) * rep.weighted_mass);
  }
  return rep;
}

ConvolutionBoundReport CollisionModel::convolution_bound_check(std::span<const double> f,
                                                               double N, std::size_t node,
                                                               double kappa, double q) const {
  const int d = grid_.dim();
  if (!(q > d + std::max(kappa, 0.0)))
    throw Error("convolution bound needs q > dim + max(kappa, 0)");
  for (std::size_t i = 0; i < grid_.size(); ++i)
    if (std::abs(f[i]) > N * std::pow(bracket_weight(grid_.node(i), q), -1.0) * (1.0 + 1e-12))
      throw Error("convolution bound input exceeds the envelope N <v>^{-q}");
  ConvolutionBoundReport rep;
  rep.lhs = GridConvolution(grid_, kappa).at(f, node);
  rep.scale = N * bracket_weight(grid_.node(node), kappa);
  rep.ratio = rep.lhs / rep.scale;
  return rep;
}

PerturbativeRhs::PerturbativeRhs(const CollisionModel& model)
    : model_(model), n_rad_(model.radial().size()) {
  const VelocityGrid& grid = model.grid();
  const int d = grid.dim();
  const std::size_t nv = grid.size();
  m_.resize(nv);
  mconv_.resize(nv);
  offset_.push_back(0);
  for (std::size_t i = 0; i < nv; ++i) {
    const Vec v = grid.node(i);
    m_[i] = maxwellian(v, d);
    mconv_[i] = maxwell_convolution(norm(v), model.params().gamma, d);
    for (const Direction& dir : model.directions_at(v).dirs) {
      const double vs = dot(v, dir.sigma);
      const double c = perp_norm(v, dir.sigma);
      for (std::size_t j = 0; j < n_rad_; ++j) {
        const Vec step = model.radial().rho[j] * dir.sigma;
        hm_.push_back(model.maxwell_profile(j, c, vs));
        sm_.push_back(maxwellian(v + step, d) + maxwellian(v - step, d) - 2.0 * m_[i]);
      }
      dirs_.push_back(dir);
    }
    offset_.push_back(dirs_.size());
  }
}

const std::vector<double>& PerturbativeRhs::linear_matrix() const {
  std::call_once(assembled_, [this] { assemble(); });
  return linear_;
}

void PerturbativeRhs::assemble() const {
  const CollisionModel& m = model_;
  const VelocityGrid& grid = m.grid();
  const RingRadii& rings = m.rings();
  const auto& rho = m.radial().rho;
  const std::size_t nv = grid.size();
  const std::size_t nk = rings.size();
  const int d = grid.dim();
  const double pre = 2.0 * m.kernel_prefactor();
  const double C = m.cancellation().value;
  const GridConvolution conv(grid, m.params().gamma);
  linear_.assign(nv * nv, 0.0);
#pragma omp parallel
  {
    std::vector<double> E(nk), ring_coef(nk);
#pragma omp for schedule(dynamic, 8)
    for (std::size_t i = 0; i < nv; ++i) {
      double* row = linear_.data() + i * nv;
      const Vec v = grid.node(i);
      for (std::size_t di = offset_[i]; di < offset_[i + 1]; ++di) {
        const Direction& dir = dirs_[di];
        const double* hm = hm_.data() + di * n_rad_;
        const double* sm = sm_.data() + di * n_rad_;
        // Q_s(M, f): second differences of f against the Maxwellian kernel.
        for (std::size_t j = 0; j < n_rad_; ++j) {
          const double c = pre * dir.weight * m.radial_coefficient(j) * hm[j];
          const Vec step = rho[j] * dir.sigma;
          auto add = [&](std::size_t idx, double w) { row[idx] += c * w; };
          grid.cubic_stencil(v + step, add);
          grid.cubic_stencil(v - step, add);
          row[i] -= 2.0 * c;
        }
        // Q_s(f, M): hyperplane integrals of f against second differences of M.
        for (std::size_t k = 0; k < nk; ++k) {
          double e = 0.0;
          for (std::size_t j = 0; j < n_rad_ && rings.first_ring[j] <= static_cast<int>(k); ++j)
            e += m.radial_coefficient(j) * sm[j] * m.ring_power(k, j);
          ring_coef[k] = pre * dir.weight * rings.weight[k] * (d == 3 ? rings.t[k] : 1.0) * e;
        }
        ring_walk(grid, v, dir.e1, dir.e2, rings.t, true, m.hyperplane_spacing(),
                  [&](std::size_t k, const Vec& p, double w) {
                    const double c = ring_coef[k] * w;
                    if (c != 0.0) grid.cubic_stencil(p, [&](std::size_t idx, double s) {
                      row[idx] += c * s;
                    });
                  });
      }
      row[i] += 2.0 * C * mconv_[i];
      for (std::size_t src = 0; src < nv; ++src) row[src] += 2.0 * C * m_[i] * conv.weight(i, src);
    }
  }
  // L <- L (I - P): phi_l M are null vectors of the linearized operator, which
  // the quadrature only reproduces approximately; left alone they turn into
  // growing modes.
  const MomentProjector proj(grid);
  const int nb = proj.count();
  std::vector<double> lb(nv * nb, 0.0), wphi(nb * nv);
  for (std::size_t src = 0; src < nv; ++src) {
    std::vector<double> e(nv, 0.0);
    e[src] = 1.0;
    Moments mo = slice_moments(grid, e);
    const auto c = proj.coefficients(mo);
    for (int l = 0; l < nb; ++l) wphi[l * nv + src] = c[l];
  }
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < nv; ++i) {
    double* row = linear_.data() + i * nv;
    double acc[5] = {0, 0, 0, 0, 0};
    for (std::size_t src = 0; src < nv; ++src)
      for (int l = 0; l < nb; ++l) acc[l] += row[src] * proj.basis(src, l);
    for (std::size_t src = 0; src < nv; ++src) {
      double corr = 0.0;
      for (int l = 0; l < nb; ++l) corr += acc[l] * wphi[l * nv + src];
      row[src] -= corr;
    }
  }
}

const QuadraticTerm& PerturbativeRhs::quadratic_term() const {
  std::call_once(quadratic_built_, [this] { quadratic_ = std::make_unique<QuadraticTerm>(model_); });
  return *quadratic_;
}

void PerturbativeRhs::operator()(std::span<const double> f, std::span<double> out,
                                 bool quadratic) const {
  const std::size_t nv = model_.grid().size();
  if (f.size() != nv || out.size() != nv) throw Error("collision slice size mismatch");
  if (std::all_of(f.begin(), f.end(), [](double x) { return x == 0.0; })) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (quadratic)
    quadratic_term()(f, out);
  else
    std::fill(out.begin(), out.end(), 0.0);
  const std::vector<double>& L = linear_matrix();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < nv; ++i) {
    const double* row = L.data() + i * nv;
    double acc = 0.0;
    for (std::size_t src = 0; src < nv; ++src) acc += row[src] * f[src];
    out[i] += acc;
  }
}

}  // namespace bsplit
