#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "bsplit/transport.hpp"

using namespace bsplit;
using Catch::Approx;

namespace {

const double two_pi = 2 * std::numbers::pi;

DistributionField make_field(int vdim, double R, int nv, int xdims, int nx) {
  const auto [vg, xg] = build_grids(GridConfig{vdim, R, nv, xdims, nx});
  return DistributionField(vg, xg);
}

double sup_diff(const DistributionField& a, const DistributionField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

void randomize(DistributionField& f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& x : f.values) x = u(rng);
}

}  // namespace

TEST_CASE("transport of a plane wave matches the closed form") {
  auto f = make_field(3, 4.0, 8, 2, 16);
  const std::array<int, 2> k{2, -3};
  auto phase = [&](std::size_t ix, const Vec& v, double tau) {
    const auto x = f.xgrid.position(ix);
    return two_pi * (k[0] * (x[0] - 2 * tau * v[0]) + k[1] * (x[1] - 2 * tau * v[1]));
  };
  for (std::size_t ix = 0; ix < f.xgrid.size(); ++ix)
    for (std::size_t iv = 0; iv < f.vgrid.size(); ++iv)
      f.at(ix, iv) = std::cos(phase(ix, f.vgrid.node(iv), 0.0)) * maxwellian(f.vgrid.node(iv), 3);
  for (double tau : {0.013, 0.25, 0.7}) {
    const DistributionField g = transport_step(f, tau);
    double err = 0.0;
    for (std::size_t ix = 0; ix < f.xgrid.size(); ++ix)
      for (std::size_t iv = 0; iv < f.vgrid.size(); ++iv) {
        const Vec v = f.vgrid.node(iv);
        err = std::max(err, std::abs(g.at(ix, iv) - std::cos(phase(ix, v, tau)) * maxwellian(v, 3)));
      }
    CHECK(err < 1e-12);
    // The runner owns the clock.
    CHECK(g.time == f.time);
  }
}

TEST_CASE("transport group property, norm and mean (property)") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto f = make_field(2, 4.0, 6, 2, 8);
    randomize(f, seed);
    const double a = 0.1 + 0.07 * seed, b = 0.33 - 0.05 * seed;
    const auto ab = transport_step(transport_step(f, a), b);
    const auto sum = transport_step(f, a + b);
    CHECK(sup_diff(ab, sum) < 1e-12);
    CHECK_THROWS_AS(transport_step(f, -a), Error);
    CHECK(sup_diff(transport_step(f, 0.0), f) == 0.0);
    const auto g = transport_step(f, a);
    for (std::size_t iv = 0; iv < f.vgrid.size(); ++iv) {
      double m0 = 0, m1 = 0, n0 = 0, n1 = 0;
      for (std::size_t ix = 0; ix < f.xgrid.size(); ++ix) {
        m0 += f.at(ix, iv);
        m1 += g.at(ix, iv);
        n0 += f.at(ix, iv) * f.at(ix, iv);
        n1 += g.at(ix, iv) * g.at(ix, iv);
      }
      CHECK(m1 == Approx(m0).margin(1e-12));
      CHECK(n1 == Approx(n0).epsilon(1e-12));
    }
  }
}

TEST_CASE("transport leaves x-independent data and the homogeneous mode alone") {
  auto f = make_field(3, 4.0, 6, 1, 8);
  for (std::size_t ix = 0; ix < f.xgrid.size(); ++ix)
    for (std::size_t iv = 0; iv < f.vgrid.size(); ++iv) f.at(ix, iv) = std::sin(double(iv));
  CHECK(sup_diff(transport_step(f, 0.37), f) < 1e-13);
  auto h = make_field(3, 4.0, 6, 0, 1);
  randomize(h, 9);
  CHECK(sup_diff(transport_step(h, 0.37), h) == 0.0);
}

TEST_CASE("slab transport only uses the first velocity component") {
  auto f = make_field(2, 4.0, 8, 1, 32);
  for (std::size_t ix = 0; ix < f.xgrid.size(); ++ix)
    for (std::size_t iv = 0; iv < f.vgrid.size(); ++iv)
      f.at(ix, iv) = std::sin(two_pi * f.xgrid.position(ix)[0]);
  const double tau = 0.05;
  const auto g = transport_step(f, tau);
  for (std::size_t ix = 0; ix < f.xgrid.size(); ++ix)
    for (std::size_t iv = 0; iv < f.vgrid.size(); ++iv) {
      const double x = f.xgrid.position(ix)[0] - 2 * tau * f.vgrid.node(iv)[0];
      CHECK(g.at(ix, iv) == Approx(std::sin(two_pi * x)).margin(1e-12));
    }
}

TEST_CASE("mollifier kernel") {
  const SpaceGrid g(2, 16);
  CHECK_THROWS_AS(mollifier_kernel(g, {0.0}), Error);
  CHECK_THROWS_AS(mollifier_kernel(g, {-1.0}), Error);
  // h below the spacing: only the centre survives.
  const auto id = mollifier_kernel(g, {0.5 / 16});
  REQUIRE(id.weights.size() == 1);
  CHECK(id.weights[0] == Approx(1.0));
  const auto k = mollifier_kernel(g, {0.2});
  double total = 0.0;
  for (std::size_t i = 0; i < k.weights.size(); ++i) {
    total += k.weights[i];
    const auto& m = k.offsets[i];
    CHECK(std::hypot(m[0], m[1]) / 16 < 0.2);
    CHECK(m[2] == 0);
    CHECK(k.weights[i] > 0.0);
  }
  CHECK(total == Approx(1.0).epsilon(1e-14));
  // Symmetric under m -> -m.
  for (std::size_t i = 0; i < k.offsets.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < k.offsets.size(); ++j)
      if (k.offsets[j][0] == -k.offsets[i][0] && k.offsets[j][1] == -k.offsets[i][1]) {
        found = true;
        CHECK(k.weights[j] == Approx(k.weights[i]));
      }
    CHECK(found);
  }
}

TEST_CASE("mollification error shrinks like h^2") {
  auto f = make_field(2, 4.0, 4, 1, 512);
  for (std::size_t ix = 0; ix < f.xgrid.size(); ++ix)
    for (std::size_t iv = 0; iv < f.vgrid.size(); ++iv)
      f.at(ix, iv) = std::sin(two_pi * f.xgrid.position(ix)[0]);
  const double e1 = mollification_jump(f, mollify(f, {0.1}));
  const double e2 = mollification_jump(f, mollify(f, {0.05}));
  const double e3 = mollification_jump(f, mollify(f, {0.025}));
  CHECK(e1 / e2 == Approx(4.0).epsilon(0.05));
  CHECK(e2 / e3 == Approx(4.0).epsilon(0.05));
}

TEST_CASE("mollifier is nonexpansive and smooths spikes (property)") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto f = make_field(2, 4.0, 4, 2, 8);
    randomize(f, seed);
    CHECK(linf_nonexpansive_check(f, {0.3}));
    const auto g = mollify(f, {0.3});
    for (std::size_t iv = 0; iv < f.vgrid.size(); ++iv) {
      double a = 0, b = 0;
      for (std::size_t ix = 0; ix < f.xgrid.size(); ++ix) {
        a += f.at(ix, iv);
        b += g.at(ix, iv);
      }
      CHECK(b == Approx(a).margin(1e-12));
    }
  }
  auto spike = make_field(2, 4.0, 4, 1, 32);
  spike.at(5, 3) = 1.0;
  const auto g = mollify(spike, {0.1});
  double top = 0.0;
  for (double x : g.values) top = std::max(top, std::abs(x));
  CHECK(top < 1.0);
  CHECK(mollification_jump(spike, g) == Approx(1.0 - g.at(5, 3)));
  auto flat = make_field(2, 4.0, 4, 1, 32);
  for (auto& x : flat.values) x = 0.7;
  CHECK(sup_diff(mollify(flat, {0.2}), flat) < 1e-14);
}
