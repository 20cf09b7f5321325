#include "bsplit/quadrature.hpp"

#include <algorithm>
#include <boost/math/special_functions/legendre.hpp>
#include <numbers>

namespace bsplit {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

GaussRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw Error("Gauss-Legendre rule needs at least one node");
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  GaussRule ref;
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it == 0.0) continue;
    ref.nodes.push_back(-*it);
  }
  if (n % 2 == 1) ref.nodes.push_back(0.0);
  for (double z : zeros)
    if (z != 0.0) ref.nodes.push_back(z);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  GaussRule out;
  for (double x : ref.nodes) {
    const double dp = boost::math::legendre_p_prime(n, x);
    out.nodes.push_back(mid + half * x);
    out.weights.push_back(half * 2.0 / ((1.0 - x * x) * dp * dp));
  }
  return out;
}

void QuadratureSpec::validate() const {
  if (n_radii < 2) throw Error("quadrature needs at least two radii");
  if (!(r_min_factor > 0.0)) throw Error("r_min factor must be positive");
  if (r_max_factor < 0.0) throw Error("r_max factor must be nonnegative");
  if (n_directions < 1) throw Error("quadrature needs at least one direction");
  if (n_hyperplane < 0) throw Error("hyperplane node count must be nonnegative");
}

QuadratureSpec QuadratureSpec::doubled() const {
  QuadratureSpec out = *this;
  out.n_radii = 2 * n_radii;
  out.n_directions = 2 * n_directions;
  out.n_hyperplane = 2 * n_hyperplane;
  return out;
}

namespace {

Vec cross(const Vec& a, const Vec& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec normalized(const Vec& a) { return (1.0 / norm(a)) * a; }

}  // namespace

namespace {

Direction make_direction(const Vec& s, double weight, int dim) {
  if (dim == 2) return {s, {-s[1], s[0], 0.0}, {0.0, 0.0, 0.0}, weight};
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(s[a]) < std::abs(s[axis])) axis = a;
  Vec ref{0.0, 0.0, 0.0};
  ref[axis] = 1.0;
  const Vec a1 = normalized(cross(s, ref));
  return {s, a1, cross(s, a1), weight};
}

// Polar product rule around axis with orthonormal complement b1, b2: mu in
// (0,1) from the concatenated panels and n_phi uniform azimuths.
void polar_product(const Vec& axis, const Vec& b1, const Vec& b2, const GaussRule& mu,
                   int n_phi, DirectionSet& out) {
  for (std::size_t i = 0; i < mu.nodes.size(); ++i) {
    const double z = mu.nodes[i];
    const double rxy = std::sqrt(1.0 - z * z);
    for (int m = 0; m < n_phi; ++m) {
      const double phi = (m + 0.5) * kTwoPi / n_phi;
      const double c = rxy * std::cos(phi);
      const double sn = rxy * std::sin(phi);
      const Vec s = normalized(c * b1 + sn * b2 + z * axis);
      out.dirs.push_back(make_direction(s, mu.weights[i] * kTwoPi / n_phi, 3));
    }
  }
}

void append(GaussRule& into, const GaussRule& from) {
  into.nodes.insert(into.nodes.end(), from.nodes.begin(), from.nodes.end());
  into.weights.insert(into.weights.end(), from.weights.begin(), from.weights.end());
}

constexpr double kBandWidth = 5.0;
constexpr double kBandCap = 0.6;

}  // namespace

DirectionSet DirectionSet::half_sphere(int dim, int n_directions) {
  if (n_directions < 1) throw Error("direction count must be positive");
  DirectionSet out;
  out.dim = dim;
  if (dim == 2) {
    const double w = std::numbers::pi / n_directions;
    for (int i = 0; i < n_directions; ++i) {
      const double th = (i + 0.5) * w;
      out.dirs.push_back(make_direction({std::cos(th), std::sin(th), 0.0}, w, 2));
    }
    return out;
  }
  if (dim != 3) throw Error("direction sets exist for dim 2 and 3 only");
  polar_product({0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0},
                gauss_legendre(n_directions, 0.0, 1.0), 2 * n_directions, out);
  return out;
}

DirectionSet DirectionSet::adapted(int dim, int n_directions, const Vec& v_in) {
  if (n_directions < 1) throw Error("direction count must be positive");
  if (dim != 2 && dim != 3) throw Error("direction sets exist for dim 2 and 3 only");
  // 2D velocities have no third component; ignore any passed in.
  const Vec v = dim == 2 ? Vec{v_in[0], v_in[1], 0.0} : v_in;
  const double vn = norm(v);
  const double mu_c = vn > 0.0 ? std::min(kBandWidth / vn, kBandCap) : kBandCap;
  DirectionSet out;
  out.dim = dim;
  if (dim == 2) {
    // A half circle gets the node budget a 3D rule spends on its azimuth.
    const int n_band = 2 * n_directions;
    const int n_outer = std::max(2, n_directions);
    const Vec axis = vn > 0.0 ? (1.0 / vn) * v : Vec{1.0, 0.0, 0.0};
    const Vec perp{-axis[1], axis[0], 0.0};
    const double half = std::numbers::pi / 2.0;
    const double beta = std::asin(mu_c);
    GaussRule th = gauss_legendre(n_outer, 0.0, half - beta);
    append(th, gauss_legendre(n_band, half - beta, half + beta));
    append(th, gauss_legendre(n_outer, half + beta, std::numbers::pi));
    for (std::size_t i = 0; i < th.nodes.size(); ++i) {
      const double c = std::cos(th.nodes[i]);
      const double sn = std::sin(th.nodes[i]);
      out.dirs.push_back(make_direction(c * axis + sn * perp, th.weights[i], 2));
    }
    return out;
  }
  const Vec axis = vn > 0.0 ? (1.0 / vn) * v : Vec{0.0, 0.0, 1.0};
  const Direction frame = make_direction(axis, 0.0, 3);
  const int n_outer = std::max(2, n_directions / 2);
  GaussRule mu = gauss_legendre(n_directions, 0.0, mu_c);
  append(mu, gauss_legendre(n_outer, mu_c, 1.0));
  polar_product(axis, frame.e1, frame.e2, mu, 2 * n_directions, out);
  return out;
}

RadialRule RadialRule::log_spaced(double r_min, double r_max, int n, double s) {
  if (!(r_min > 0.0) || !(r_max > r_min)) throw Error("radial rule needs 0 < r_min < r_max");
  if (n < 2) throw Error("radial rule needs at least two radii");
  RadialRule out;
  const double dl = std::log(r_max / r_min) / (n - 1);
  for (int j = 0; j < n; ++j) {
    const double r = (j == n - 1) ? r_max : r_min * std::exp(j * dl);
    double w = dl * r;
    if (j == n - 1) w *= 0.5;
    // Euler-Maclaurin end correction for an integrand ~ rho^{2-2s} in log(rho).
    if (j == 0) w *= 0.5 + dl * (2.0 - 2.0 * s) / 12.0;
    out.rho.push_back(r);
    out.weight.push_back(w);
  }
  out.inner = std::pow(r_min, -2.0 * s) / (2.0 - 2.0 * s);
  return out;
}

RingRadii RingRadii::build(const RadialRule& radial, double t_end, double dt) {
  if (!(dt > 0.0)) throw Error("ring spacing must be positive");
  RingRadii out;
  const std::size_t n = radial.size();
  auto panel = [&](double a, double b) {
    if (!(b > a)) return;
    const int m = std::max(1, static_cast<int>(std::ceil((b - a) / dt - 1e-12)));
    const double h = (b - a) / m;
    for (int i = 0; i < m; ++i) {
      out.t.push_back(a + (i + 0.5) * h);
      out.weight.push_back(h);
    }
  };
  for (std::size_t j = 0; j < n; ++j) {
    out.first_ring.push_back(static_cast<int>(out.t.size()));
    if (j + 1 < n) panel(radial.rho[j], radial.rho[j + 1]);
  }
  panel(radial.rho.back(), t_end);
  return out;
}

RingClipper::RingClipper(const Vec& center, const Vec& e1, const Vec& e2, double half_width)
    : center_(center), h_(half_width) {
  double far_sq = 0.0;
  for (int a = 0; a < 3; ++a) {
    amp_[a] = std::hypot(e1[a], e2[a]);
    phase_[a] = amp_[a] > 0.0 ? std::atan2(e2[a], e1[a]) : 0.0;
    const double r = std::abs(center[a]) + half_width;
    far_sq += r * r;
  }
  far_ = std::sqrt(far_sq);
}

namespace {

struct ArcList {
  RingClipper::Arcs arcs;
  int n = 0;

  void push(double b, double e) {
    if (n == RingClipper::kMaxArcs) throw Error("ring clipping produced too many arcs");
    arcs[n++] = {b, e};
  }
  // Adds [b, e] reduced into [0, 2 pi), split at the wrap point.
  void push_wrapped(double b, double e) {
    const double len = e - b;
    if (len <= 0.0) return;
    if (len >= kTwoPi) {
      push(0.0, kTwoPi);
      return;
    }
    b = std::fmod(b, kTwoPi);
    if (b < 0.0) b += kTwoPi;
    if (b + len <= kTwoPi) {
      push(b, b + len);
    } else {
      push(b, kTwoPi);
      push(0.0, b + len - kTwoPi);
    }
  }
};

void intersect_into(const ArcList& x, const ArcList& y, ArcList& out) {
  out.n = 0;
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < y.n; ++j) {
      const double lo = std::max(x.arcs[i].begin, y.arcs[j].begin);
      const double hi = std::min(x.arcs[i].end, y.arcs[j].end);
      if (hi > lo) out.push(lo, hi);
    }
  std::sort(out.arcs.begin(), out.arcs.begin() + out.n,
            [](const Arc& a, const Arc& b) { return a.begin < b.begin; });
}

}  // namespace

int RingClipper::clip(double t, Arcs& out) const {
  if (t > far_) return 0;
  ArcList allowed;
  allowed.push(0.0, kTwoPi);
  ArcList axis_arcs, next;
  bool full = true;
  for (int a = 0; a < 3; ++a) {
    const double amp = t * amp_[a];
    if (amp <= h_ - std::abs(center_[a])) continue;
    full = false;
    const double lo = (-h_ - center_[a]) / amp;
    const double hi = (h_ - center_[a]) / amp;
    if (hi < -1.0 || lo > 1.0) return 0;
    // Coordinate a is center + amp cos(phi - phase); inside for
    // cos(phi - phase) in [lo, hi].
    const double alpha = std::acos(std::min(hi, 1.0));
    const double beta = std::acos(std::max(lo, -1.0));
    const double ph = phase_[a];
    axis_arcs.n = 0;
    if (alpha <= 0.0) {
      axis_arcs.push_wrapped(ph - beta, ph + beta);
    } else if (beta >= std::numbers::pi) {
      axis_arcs.push_wrapped(ph + alpha, ph + kTwoPi - alpha);
    } else {
      axis_arcs.push_wrapped(ph + alpha, ph + beta);
      axis_arcs.push_wrapped(ph - beta, ph - alpha);
    }
    intersect_into(allowed, axis_arcs, next);
    allowed = next;
    if (allowed.n == 0) return 0;
  }
  if (full) return -1;
  std::copy(allowed.arcs.begin(), allowed.arcs.begin() + allowed.n, out.begin());
  return allowed.n;
}

}  // namespace bsplit
