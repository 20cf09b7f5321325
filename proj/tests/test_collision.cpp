#include <catch2/catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <numbers>
#include <random>

#include "bsplit/collision.hpp"
#include "bsplit/moments.hpp"

using namespace bsplit;
using Catch::Approx;

namespace {

const double pi = std::numbers::pi;

std::vector<double> bump(const VelocityGrid& g, double eps, double shift = 0.3) {
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec v = g.node(i);
    f[i] = eps * std::sin(v[0] + shift) * std::cos(0.5 * v[1]) * std::pow(1 + norm_sq(v), -4.0);
  }
  return f;
}

}  // namespace

TEST_CASE("angular cross-section") {
  AngularCrossSection xs;
  CHECK(angular_b(-0.5, xs) == 0.0);
  CHECK(angular_b(std::cos(pi / 2) + 1e-17, xs) == Approx(std::pow(std::sin(pi / 4), -3.0)));
  CHECK(angular_b(0.0, xs) == Approx(2.8284271247).epsilon(1e-9));
  // |sin(theta/2)|^{-(d-1)-2s} ~ 2^{d-1+2s} theta^{-(d-1)-2s} as theta -> 0.
  const double th = 1e-4;
  CHECK(angular_b(std::cos(th), xs) / std::pow(th, -3.0) == Approx(8.0).epsilon(1e-3));
  xs.cutoff_negative_cos = false;
  CHECK(angular_b(-0.5, xs) > 0.0);
}

TEST_CASE("cancellation constant against frozen oracle values") {
  // 2 pi int_0^{pi/2} sin(th) |sin(th/2)|^{-2-2s} [cos^{-3-gamma}(th/2) - 1] d th,
  // evaluated once with 30-digit adaptive quadrature.
  struct Row { double gamma, s, value; };
  const Row rows[] = {
      {0, 0.25, 21.5327797087493}, {0, 0.5, 35.5430635052669}, {0, 0.8, 95.1595063225578},
      {1, 0.25, 31.4386686915935}, {1, 0.5, 50.9985331852176}, {1, 0.8, 132.047261434517},
      {-1, 0.25, 13.1957210777892}, {-1, 0.5, 22.1513342883894}, {-1, 0.8, 61.2044110418635},
  };
  for (const Row& r : rows) {
    PhysParams p;
    p.gamma = r.gamma;
    p.s = r.s;
    AngularCrossSection xs{r.s, 3, true};
    const CancellationConstant c = cancellation_constant(p, xs);
    CHECK(c.value > 0.0);
    CHECK(c.value == Approx(r.value).epsilon(1e-6));
  }
  // The tanh-sinh rule, away from the endpoint singularity, agrees for moderate s.
  boost::math::quadrature::tanh_sinh<double> ts;
  const double direct = 2 * pi * ts.integrate([](double th) {
    if (th < 1e-30) return 0.0;
    return std::sin(th) * std::pow(std::sin(th / 2), -3.0) *
           std::expm1(-4.0 * std::log(std::cos(th / 2)));
  }, 0.0, pi / 2);
  CHECK(direct == Approx(50.9985331852176).epsilon(1e-6));
  PhysParams p;
  AngularCrossSection xs{0.5, 3, true};
  const double a = cancellation_constant(p, xs, 2000).value;
  const double b = cancellation_constant(p, xs, 4000).value;
  CHECK(std::abs(a - b) / b < 5e-3);
  CHECK_THROWS_AS(cancellation_constant(p, xs, 20, 1e-300, 0), QuadratureError);
  CHECK_THROWS_AS(cancellation_constant(p, xs, 4), Error);
  AngularCrossSection open_xs{0.5, 3, false};
  CHECK_THROWS_AS(cancellation_constant(p, open_xs), Error);
}

TEST_CASE("Maxwell convolution closed forms") {
  CHECK(maxwell_convolution(0.0, 1.0, 3) == Approx(2 * std::sqrt(2 / pi)).epsilon(1e-10));
  CHECK(maxwell_convolution(1.7, 0.0, 3) == Approx(1.0).epsilon(1e-10));
  CHECK(maxwell_convolution(0.0, 2.0, 3) == Approx(3.0).epsilon(1e-10));
  // |v|^2 + d for kappa = 2.
  CHECK(maxwell_convolution(2.0, 2.0, 2) == Approx(6.0).epsilon(1e-10));
}

TEST_CASE("grid convolution") {
  const VelocityGrid g(3, 4.0, 8);
  std::vector<double> zero(g.size(), 0.0), out(g.size());
  GridConvolution c1(g, 1.0);
  c1.apply(zero, out);
  for (double x : out) CHECK(x == 0.0);
  const auto f = bump(g, 1.0);
  GridConvolution c0(g, 0.0);
  double mass = 0.0;
  for (double x : f) mass += x * g.cell_volume();
  for (std::size_t i : {std::size_t{0}, std::size_t{100}, std::size_t{300}})
    CHECK(c0.at(f, i) == Approx(mass).margin(1e-14));
  CHECK(cell_average_power(1.0, 0.0, 3) == Approx(1.0));
  // Average of |y|^2 over [-1/2,1/2]^3 is 3/12.
  CHECK(cell_average_power(1.0, 2.0, 3) == Approx(0.25));
}

TEST_CASE("kernel values") {
  const VelocityGrid g(3, 6.0, 12);
  PhysParams p;
  p.gamma = 0.0;
  const CollisionModel m(g, p);
  const std::vector<double> zeros(g.size(), 0.0);
  const Density zero{0.0, &g, zeros, {}};
  CHECK(m.kf(zero, {0, 0, 0}, {1, 0, 0}) == 0.0);
  const Density M{1.0, nullptr, {}, {}};
  // Oracle: K_M(0, e1) = 4 int_{r>1} M(w) (1 + r^2)^a 2 pi r dr with a = 1.
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  const double h = gk.integrate([](double r) {
    return std::pow(2 * pi, -1.5) * std::exp(-0.5 * r * r) * (1 + r * r) * 2 * pi * r;
  }, 1.0, 40.0);
  CHECK(m.kf(M, {0, 0, 0}, {1, 0, 0}) == Approx(4.0 * h).epsilon(1e-2));
  CHECK_THROWS_AS(m.kf(M, {0, 0, 0}, {0, 0, 0}), Error);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto f = bump(g, 0.05);
  const Density F{1.0, &g, f, {}};
  std::vector<double> absf(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) absf[i] = std::abs(f[i]);
  const Density pert{0.0, &g, f, {}};
  const Density apert{0.0, &g, absf, {}};
  for (int k = 0; k < 100; ++k) {
    const Vec v{u(rng), u(rng), u(rng)}, w{u(rng), u(rng), u(rng)};
    CHECK(m.kernel_symmetry_check(F, v, w));
    CHECK(m.kf(F, v, v + w) >= 0.0);
    CHECK(std::abs(m.kf(pert, v, v + w)) <= m.kf(apert, v, v + w) * (1 + 1e-12) + 1e-300);
  }
}

TEST_CASE("collision operator identities") {
  const VelocityGrid g(3, 6.0, 12);
  const CollisionModel m(g, PhysParams{});
  const Density M{1.0, nullptr, {}, {}};
  const TestFunction one = [](const Vec&) { return 1.0; };
  const TestFunction maxw = [](const Vec& v) { return maxwellian(v, 3); };
  CHECK(m.q_s(M, one, {0.5, 0.2, -1.0}) == Approx(0.0).margin(1e-12));
  // Q_s(M, M) <= 0 at the maximum of M.
  CHECK(m.q_s(M, maxw, {0, 0, 0}) < 0.0);
  // Q(M, M) = 0: compare with the size of either part.
  for (std::size_t node : {g.linear({6, 6, 6}), g.linear({4, 7, 5}), g.linear({8, 3, 6})}) {
    const double qs = m.q_s(M, maxw, g.node(node));
    const double total = m.q_total(M, maxw, node);
    CHECK(std::abs(total) < 2e-2 * std::abs(qs));
  }
  const std::vector<double> zeros(g.size(), 0.0);
  const Density zero{0.0, &g, zeros, {}};
  CHECK(m.q_total(zero, maxw, 5) == 0.0);
  // gamma = 0: the convolution factor is the total mass.
  PhysParams p0;
  p0.gamma = 0.0;
  const CollisionModel m0(g, p0);
  CHECK(m0.convolution(M, 0) == Approx(1.0).epsilon(1e-3));
  CHECK(m0.convolution(M, 0) == Approx(m0.convolution(M, 700)).epsilon(1e-12));
}

TEST_CASE("cancellation identity for the Maxwellian") {
  const VelocityGrid g(3, 6.0, 12);
  const CollisionModel m(g, PhysParams{});
  const Density M{1.0, nullptr, {}, {}};
  for (const Vec& v : {Vec{0, 0, 0}, Vec{1.0, -0.5, 0.25}, Vec{2.5, 0, 0}}) {
    const double lhs = m.cancellation_integral(M, v);
    const double rhs = m.cancellation().value * maxwell_convolution(norm(v), 1.0, 3);
    CHECK(std::abs(lhs - rhs) / rhs < 0.02);
  }
}

TEST_CASE("kernel and convolution bound checks") {
  const VelocityGrid g(3, 4.0, 8);
  const CollisionModel m(g, PhysParams{});
  const std::vector<double> zero(g.size(), 0.0);
  const Density Z{0.0, &g, zero, {}};
  const KernelBoundReport r = m.kernel_bound_check(Z, 100, 0.5);
  CHECK(r.near_moment == 0.0);
  CHECK(r.far_mass == 0.0);
  const auto f = bump(g, 1.0);
  const ConvolutionBoundReport c = m.convolution_bound_check(f, 1.0, 100, 0.0, 8.0);
  double mass = 0.0;
  for (double x : f) mass += x * g.cell_volume();
  CHECK(c.lhs == Approx(mass).margin(1e-14));
  CHECK(m.convolution_bound_check(zero, 1.0, 3, 1.0, 8.0).lhs == 0.0);
}

TEST_CASE("perturbative right-hand side") {
  const VelocityGrid g(3, 4.0, 8);
  const CollisionModel m(g, PhysParams{});
  const PerturbativeRhs rhs(m);
  std::vector<double> out(g.size());
  rhs(std::vector<double>(g.size(), 0.0), out);
  for (double x : out) CHECK(x == 0.0);

  // Collision invariants are null vectors of L.
  const MomentProjector P(g);
  const auto& L = rhs.linear_matrix();
  const std::size_t n = g.size();
  double scale = 0.0;
  for (double x : L) scale = std::max(scale, std::abs(x));
  for (int l = 0; l < P.count(); ++l) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += L[i * n + j] * P.basis(j, l);
      worst = std::max(worst, std::abs(acc));
    }
    CHECK(worst < 1e-10 * scale);
  }

  // Linear response: rhs(eps psi)/eps = L psi + eps 2Q(psi, psi), so the
  // differences halve with eps.
  const auto psi = bump(g, 1.0);
  auto scaled = [&](double eps) {
    std::vector<double> f(n), r(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = eps * psi[i];
    rhs(f, r);
    for (auto& x : r) x /= eps;
    return r;
  };
  const auto r1 = scaled(1e-2), r2 = scaled(5e-3), r3 = scaled(2.5e-3);
  double d12 = 0.0, d23 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d12 = std::max(d12, std::abs(r1[i] - r2[i]));
    d23 = std::max(d23, std::abs(r2[i] - r3[i]));
  }
  CHECK(d12 / d23 == Approx(2.0).epsilon(1e-6));

  // Weak-form conservation holds up to the quadrature error.
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = 1e-2 * psi[i];
  rhs(f, out);
  const Moments mo = slice_moments(g, out);
  double l1 = 0.0;
  for (double x : out) l1 += std::abs(x) * g.cell_volume();
  for (int k = 0; k < mo.count; ++k) CHECK(std::abs(mo.value[k]) < 0.05 * l1 * 5.0);
}

TEST_CASE("FFT quadratic term agrees with the pointwise operator") {
  const VelocityGrid g(2, 5.0, 16);
  PhysParams p;
  p.dim = 2;
  const CollisionModel m(g, p);
  const QuadraticTerm quad(m);
  const auto f = bump(g, 1.0, 0.7);
  std::vector<double> out(g.size());
  quad(f, out);
  const Density F{0.0, &g, f, {}};
  const TestFunction G = grid_function(g, f);
  double top = 0.0;
  for (double x : out) top = std::max(top, std::abs(x));
  for (std::size_t node : {g.linear({8, 8, 0}), g.linear({6, 9, 0}), g.linear({10, 5, 0})}) {
    const double pointwise = 2.0 * m.q_total(F, G, node);
    CHECK(std::abs(out[node] - pointwise) < 0.05 * top);
  }
  std::vector<double> wrong(3);
  CHECK_THROWS_AS(quad(wrong, out), Error);
}
