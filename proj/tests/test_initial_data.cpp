#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bsplit/initial_data.hpp"
#include "bsplit/moments.hpp"

using namespace bsplit;
using Catch::Approx;

namespace {

const PerturbationKind kinds[] = {PerturbationKind::separable_smooth,
                                  PerturbationKind::random_fourier,
                                  PerturbationKind::rough_indicator};

}  // namespace

TEST_CASE("perturbation kind names") {
  for (PerturbationKind k : kinds) CHECK(parse_perturbation_kind(to_string(k)) == k);
  CHECK(parse_perturbation_kind("random-fourier") == PerturbationKind::random_fourier);
  CHECK_THROWS_AS(parse_perturbation_kind("smooth"), Error);
}

TEST_CASE("perturbation spec validation") {
  PerturbationSpec s;
  CHECK_NOTHROW(s.validate());
  s.epsilon = -1e-3;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.epsilon = std::nan("");
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.q = -1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.spatial_modes = 0;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("every kind respects the envelope and positivity (property)") {
  for (int vdim : {2, 3}) {
    const auto [vg, xg] = build_grids(GridConfig{vdim, 5.0, vdim == 2 ? 12 : 8, 2, 6});
    for (PerturbationKind k : kinds)
      for (double q : {0.0, 4.0, 8.0})
        for (std::uint64_t seed : {1u, 2u, 99u}) {
          PerturbationSpec s{k, 0.05, q, 3, seed};
          const DistributionField f = make_perturbation(s, vg, xg);
          const EnvelopeCheck e = validate_envelope(f, s.epsilon, q);
          CHECK(e.ok);
          CHECK(e.worst <= 0.9 + 1e-12);
          CHECK(f.min_density() >= 0.0);
          CHECK(f.time == 0.0);
        }
  }
}

TEST_CASE("perturbations are deterministic and linear in epsilon") {
  const auto [vg, xg] = build_grids(GridConfig{2, 4.0, 8, 1, 8});
  for (PerturbationKind k : kinds) {
    PerturbationSpec s{k, 0.01, 8.0, 2, 5};
    const auto a = make_perturbation(s, vg, xg);
    const auto b = make_perturbation(s, vg, xg);
    CHECK(a.values == b.values);
    s.epsilon = 0.03;
    const auto c = make_perturbation(s, vg, xg);
    for (std::size_t i = 0; i < a.values.size(); ++i)
      CHECK(c.values[i] == Approx(3.0 * a.values[i]).margin(1e-18));
    s.epsilon = 0.0;
    for (double x : make_perturbation(s, vg, xg).values) CHECK(x == 0.0);
  }
  PerturbationSpec r{PerturbationKind::random_fourier, 0.01, 8.0, 2, 5};
  const auto a = make_perturbation(r, vg, xg);
  r.seed = 6;
  CHECK(make_perturbation(r, vg, xg).values != a.values);
}

TEST_CASE("homogeneous mode and invalid specs") {
  const auto [vg, xg] = build_grids(GridConfig{3, 4.0, 8, 0, 1});
  PerturbationSpec s{PerturbationKind::separable_smooth, 0.02, 8.0, 1, 1};
  const auto f = make_perturbation(s, vg, xg);
  CHECK(f.values.size() == vg.size());
  CHECK(validate_envelope(f, 0.02, 8.0).ok);
  s.spatial_modes = 0;
  CHECK_THROWS_AS(make_perturbation(s, vg, xg), Error);
}

TEST_CASE("envelope check reports the worst node") {
  const auto [vg, xg] = build_grids(GridConfig{2, 4.0, 8, 1, 3});
  DistributionField f(vg, xg);
  const std::size_t iv = vg.linear({1, 6, 0});
  f.at(2, iv) = 0.5 * std::pow(1.0 + norm_sq(vg.node(iv)), -4.0);
  EnvelopeCheck e = validate_envelope(f, 1.0, 8.0);
  CHECK(e.ok);
  CHECK(e.worst == Approx(0.5));
  CHECK(e.x_node == 2);
  CHECK(e.v_node == iv);
  e = validate_envelope(f, 0.5, 8.0);
  CHECK_FALSE(e.ok);
  CHECK(e.worst == Approx(1.0));
}

TEST_CASE("moment projection of initial data") {
  const auto [vg, xg] = build_grids(GridConfig{2, 4.0, 8, 1, 4});
  PerturbationSpec s{PerturbationKind::separable_smooth, 0.01, 8.0, 1, 1};
  const auto f = make_perturbation(s, vg, xg);
  const Moments before = field_moments(f);
  const auto p = project_moments(f);
  const Moments after = field_moments(p);
  for (int k = 0; k < after.count; ++k) CHECK(std::abs(after.value[k]) < 1e-16);
  CHECK(field_moments(f).value == before.value);
  CHECK(std::abs(before.mass()) > 1e-6);
}
