#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "bsplit/moments.hpp"

using namespace bsplit;
using Catch::Approx;

namespace {

std::vector<double> random_slice(const VelocityGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    f[i] = 1e-2 * n(rng) * maxwellian(g.node(i), g.dim());
  return f;
}

}  // namespace

TEST_CASE("Maxwellian moments against a product-sum oracle") {
  for (int dim : {2, 3}) {
    const VelocityGrid g(dim, 6.0, 16);
    // The grid sum of a separable Gaussian factorises over axes.
    double s0 = 0.0, s2 = 0.0;
    for (int k = 0; k < 16; ++k) {
      const double x = -6.0 + (k + 0.5) * 0.75;
      const double w = std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi) * 0.75;
      s0 += w;
      s2 += w * x * x;
    }
    const Moments m = maxwell_moments(g);
    CHECK(m.count == dim + 2);
    CHECK(m.mass() == Approx(std::pow(s0, dim)).epsilon(1e-12));
    CHECK(m.energy() == Approx(dim * s2 * std::pow(s0, dim - 1)).epsilon(1e-12));
    for (int a = 0; a < dim; ++a) CHECK(std::abs(m.momentum(a)) < 1e-14);
  }
}

TEST_CASE("slice moments are linear and see momentum") {
  const VelocityGrid g(3, 4.0, 8);
  std::vector<double> f(g.size(), 0.0);
  const std::size_t i = g.linear({5, 2, 4});
  f[i] = 1.0;
  const Moments m = slice_moments(g, f);
  const Vec v = g.node(i);
  const double dv = g.cell_volume();
  CHECK(m.mass() == Approx(dv));
  CHECK(m.momentum(0) == Approx(v[0] * dv));
  CHECK(m.momentum(1) == Approx(v[1] * dv));
  CHECK(m.energy() == Approx(norm_sq(v) * dv));
  const auto a = random_slice(g, 1), b = random_slice(g, 2);
  std::vector<double> c(g.size());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = 2 * a[k] - 3 * b[k];
  const Moments ma = slice_moments(g, a), mb = slice_moments(g, b), mc = slice_moments(g, c);
  for (int k = 0; k < 5; ++k)
    CHECK(mc.value[k] == Approx(2 * ma.value[k] - 3 * mb.value[k]).margin(1e-15));
}

TEST_CASE("entropy and negative mass") {
  const VelocityGrid g(2, 6.0, 16);
  std::vector<double> zero(g.size(), 0.0);
  double oracle = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m = maxwellian(g.node(i), 2);
    oracle += m * std::log(m) * g.cell_volume();
  }
  CHECK(slice_entropy(g, zero) == Approx(oracle).epsilon(1e-13));
  CHECK(negative_mass(g, zero) == 0.0);
  std::vector<double> minus(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) minus[i] = -2.0 * maxwellian(g.node(i), 2);
  CHECK(negative_mass(g, minus) == Approx(maxwell_moments(g).mass()));
  // Nodes with M + f <= 0 are skipped.
  CHECK(slice_entropy(g, minus) == 0.0);
}

TEST_CASE("projector restores requested moments (property)") {
  for (int dim : {2, 3}) {
    const VelocityGrid g(dim, 4.0, 8);
    const MomentProjector P(g);
    CHECK(P.count() == dim + 2);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto f = random_slice(g, seed);
      P.project(f);
      const Moments m = slice_moments(g, f);
      for (int k = 0; k < m.count; ++k) CHECK(std::abs(m.value[k]) < 1e-15);
      // Idempotent.
      auto again = f;
      P.project(again);
      for (std::size_t i = 0; i < f.size(); ++i) CHECK(again[i] == Approx(f[i]).margin(1e-17));
      Moments target{};
      target.count = dim + 2;
      target.value[0] = 1e-3 * double(seed);
      target.value[dim + 1] = -2e-3;
      P.restore(f, target);
      const Moments r = slice_moments(g, f);
      for (int k = 0; k < r.count; ++k) CHECK(r.value[k] == Approx(target.value[k]).margin(1e-15));
    }
    // Coefficients of the basis reproduce their own moments.
    const Moments mm = maxwell_moments(g);
    const auto c = P.coefficients(mm);
    CHECK(c[0] == Approx(1.0).epsilon(1e-12));
    for (int l = 1; l < P.count(); ++l) CHECK(std::abs(c[l]) < 1e-12);
  }
}

TEST_CASE("field moments and field projection") {
  const auto [vg, xg] = build_grids(GridConfig{2, 4.0, 8, 2, 4});
  DistributionField field(vg, xg);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  for (auto& x : field.values) x = u(rng);
  const Moments before = field_moments(field);
  CHECK(std::abs(before.mass()) > 0.0);
  project_field_moments(field);
  const Moments after = field_moments(field);
  for (int k = 0; k < after.count; ++k) CHECK(std::abs(after.value[k]) < 1e-15);
}
