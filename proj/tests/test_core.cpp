#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "bsplit/core.hpp"
#include "bsplit/quadrature.hpp"

using namespace bsplit;
using Catch::Approx;

TEST_CASE("maxwellian values") {
  CHECK(maxwellian({0, 0, 0}, 3) == Approx(0.0634936359342410).epsilon(1e-12));
  const Vec v{0.3, -1.1, 0.8};
  CHECK(maxwellian(v, 3) == maxwellian(-1.0 * v, 3));
  CHECK(maxwellian({0, 0, 0}, 2) == Approx(1.0 / (2 * std::numbers::pi)));
}

TEST_CASE("grid Maxwellian mass against a 1D product oracle") {
  // Oracle: the 3D midpoint sum factorizes into three identical 1D sums,
  // compared here to a 400-point Gauss rule for the Gaussian integral.
  const VelocityGrid g(3, 6.0, 24);
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) sum += maxwellian(g.node(i), 3) * g.cell_volume();
  const GaussRule r = gauss_legendre(400, -6.0, 6.0);
  double line = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k)
    line += r.weights[k] * std::exp(-0.5 * r.nodes[k] * r.nodes[k]) / std::sqrt(2 * std::numbers::pi);
  CHECK(std::abs(sum - 1.0) < 1e-6);
  CHECK(std::abs(sum - line * line * line) < 1e-6);
}

TEST_CASE("bracket weight") {
  CHECK(bracket_weight({0, 0, 0}, 7.0) == 1.0);
  CHECK(bracket_weight({1, 0, 0}, 2.0) == Approx(2.0));
  CHECK(bracket_weight({3, 4, 0}, 1.0) == Approx(std::sqrt(26.0)));
}

TEST_CASE("physical parameters") {
  PhysParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.regime_ok());
  p.gamma = 2.0;
  p.s = 0.9;
  CHECK_FALSE(p.regime_ok());
  p.s = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.gamma = -3.5;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.dim = 4;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.kernel_const = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("velocity grid layout") {
  const VelocityGrid g(3, 6.0, 12);
  CHECK(g.spacing() == 1.0);
  const VelocityGrid big(3, 8.0, 16);
  CHECK(big.size() == 16u * 16u * 16u);
  for (std::size_t i = 0; i < big.size(); ++i)
    for (int a = 0; a < 3; ++a) CHECK(std::abs(big.node(i)[a]) <= 8.0);
  for (std::size_t i : {std::size_t{0}, std::size_t{77}, big.size() - 1})
    CHECK(big.linear(big.index(i)) == i);
  // Last axis fastest.
  CHECK(big.node(1)[2] - big.node(0)[2] == Approx(big.spacing()));
  CHECK_THROWS_AS(VelocityGrid(3, -1.0, 8), Error);
  CHECK_THROWS_AS(VelocityGrid(5, 1.0, 8), Error);
}

TEST_CASE("interpolation reproduces nodes and low-order polynomials") {
  const VelocityGrid g(3, 4.0, 10);
  std::vector<double> lin(g.size()), cub(g.size());
  auto poly1 = [](const Vec& v) { return 0.5 + 0.2 * v[0] - 0.1 * v[1] + 0.3 * v[2]; };
  auto poly3 = [](const Vec& v) { return v[0] * v[0] * v[1] - 0.5 * v[2] * v[2] * v[2] + v[1]; };
  for (std::size_t i = 0; i < g.size(); ++i) {
    lin[i] = poly1(g.node(i));
    cub[i] = poly3(g.node(i));
  }
  for (std::size_t i : {std::size_t{5}, std::size_t{444}})
    CHECK(g.interpolate(lin, g.node(i)) == Approx(lin[i]));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const Vec v{u(rng), u(rng), u(rng)};
    CHECK(g.interpolate(lin, v) == Approx(poly1(v)).margin(1e-12));
    CHECK(g.interpolate_cubic(cub, v) == Approx(poly3(v)).margin(1e-10));
  }
  // Zero beyond the ghost layer.
  CHECK(g.interpolate(lin, {4.0 + g.spacing(), 0, 0}) == 0.0);
  CHECK(g.interpolate_cubic(cub, {0, -4.0 - g.spacing(), 0}) == 0.0);
}

TEST_CASE("space grid and build_grids") {
  const SpaceGrid homogeneous(0, 1);
  CHECK(homogeneous.size() == 1u);
  const SpaceGrid s(2, 8);
  CHECK(s.size() == 64u);
  CHECK(s.linear(s.index(17)) == 17u);
  CHECK(s.position(1)[1] == Approx(0.125));
  auto [vg, xg] = build_grids({3, 6.0, 16, 0, 5});
  CHECK(xg.size() == 1u);
  CHECK(vg.size() == 4096u);
  CHECK_THROWS_AS(build_grids({2, 6.0, 16, 3, 4}), Error);
  CHECK_THROWS_AS(build_grids({3, 6.0, 2, 0, 1}), Error);
  CHECK_THROWS_AS(build_grids({3, 6.0, 8, 1, 0}), Error);
}

TEST_CASE("distribution field helpers") {
  DistributionField f(VelocityGrid(2, 4.0, 8), SpaceGrid(1, 4));
  CHECK(f.values.size() == 256u);
  CHECK(f.all_finite());
  f.at(2, 5) = -1.0;
  CHECK(f.slice(2)[5] == -1.0);
  CHECK(f.min_density() < 0.0);
  f.at(0, 0) = std::nan("");
  CHECK_FALSE(f.all_finite());
  DecayEnvelope env;
  DistributionField g(VelocityGrid(2, 4.0, 8), SpaceGrid());
  g.values[3] = 0.25;
  env.record(g, 0.0);
  CHECK(env.at(0.0) == 0.25);
}
