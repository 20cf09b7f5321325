#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bsplit/initial_data.hpp"
#include "bsplit/splitting.hpp"

using namespace bsplit;
using Catch::Approx;

namespace {

struct Setup {
  VelocityGrid vg;
  SpaceGrid xg;
  PhysParams params;
  HomogeneousSolver solver;
  Setup(int nx = 4)
      : vg(2, 4.0, 8), xg(1, nx), params(make_params()), solver(vg, params, QuadratureSpec{}, StepperConfig{}) {}
  static PhysParams make_params() {
    PhysParams p;
    p.dim = 2;
    return p;
  }
  DistributionField data(double eps = 1e-3) const {
    return make_perturbation({PerturbationKind::separable_smooth, eps, 8.0, 1, 1}, vg, xg);
  }
};

}  // namespace

TEST_CASE("schedule") {
  SplittingSchedule s{1.0, 10};
  CHECK_NOTHROW(s.validate());
  CHECK(s.h() == Approx(0.1));
  CHECK(s.t(3) == Approx(0.3));
  CHECK(SplittingSchedule::kind(1) == IntervalKind::collision);
  CHECK(SplittingSchedule::kind(2) == IntervalKind::transport);
  CHECK(SplittingSchedule::kind(9) == IntervalKind::collision);
  CHECK_THROWS_AS((SplittingSchedule{1.0, 3}.validate()), Error);
  CHECK_THROWS_AS((SplittingSchedule{1.0, 0}.validate()), Error);
  CHECK_THROWS_AS((SplittingSchedule{0.0, 4}.validate()), Error);
  CHECK_THROWS_AS((SplittingSchedule{INFINITY, 4}.validate()), Error);
  CHECK(to_string(AbortReason::completed) == "completed");
}

TEST_CASE("zero perturbation stays zero") {
  Setup s;
  const SplittingRunner runner(s.solver, {0.4, 4});
  const DistributionField zero(s.vg, s.xg);
  const RunResult r = runner.run(zero);
  CHECK(r.state.reason == AbortReason::completed);
  CHECK(r.state.position == 4);
  CHECK(r.state.field.time == Approx(0.4));
  for (double x : r.state.field.values) CHECK(x == 0.0);
  for (const auto& j : r.jumps) CHECK(j.jump == 0.0);
}

TEST_CASE("row sequence for N = 2") {
  Setup s;
  const SplittingRunner runner(s.solver, {0.2, 2});
  const RunResult r = runner.run(s.data());
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].kind == "initial");
  CHECK(r.rows[1].kind == "collision");
  CHECK(r.rows[2].kind == "mollify");
  CHECK(r.rows[3].kind == "transport");
  CHECK(r.rows[1].position == 1);
  CHECK(r.rows[2].position == 1);
  CHECK(r.rows[3].position == 2);
  CHECK(r.rows[1].time == Approx(0.1));
  CHECK(r.rows[3].time == Approx(0.2));
  REQUIRE(r.jumps.size() == 1);
  CHECK(r.jumps[0].index == 1);
  for (const auto& row : r.rows) {
    CHECK(std::isnan(row.barrier_margin));
    CHECK(row.weighted_sup.size() == 1);
  }
}

TEST_CASE("jumps, conservation and x-independent data") {
  Setup s(8);
  const SplittingRunner runner(s.solver, {0.6, 6}, DiagnosticsConfig{});
  const RunResult r = runner.run(s.data());
  REQUIRE(r.jumps.size() == 3);
  for (std::size_t k = 0; k < r.jumps.size(); ++k) CHECK(r.jumps[k].index == int(2 * k + 1));
  for (const auto& row : r.rows) {
    CHECK(row.mass == Approx(r.rows[0].mass).epsilon(1e-12));
    CHECK(row.energy == Approx(r.rows[0].energy).epsilon(1e-12));
  }
  // Data constant in x stay constant in x, so mollification never moves them.
  DistributionField flat(s.vg, s.xg);
  const auto one = s.data();
  for (std::size_t ix = 0; ix < s.xg.size(); ++ix)
    for (std::size_t iv = 0; iv < s.vg.size(); ++iv) flat.at(ix, iv) = one.at(0, iv);
  const RunResult rf = runner.run(flat);
  for (const auto& j : rf.jumps) CHECK(j.jump < 1e-15);
}

TEST_CASE("resume continues the run exactly") {
  Setup s;
  DiagnosticsConfig d;
  d.snapshot_every = 2;
  const SplittingRunner runner(s.solver, {0.4, 4}, d);
  const RunResult full = runner.run(s.data());
  REQUIRE(full.snapshots.size() == 3);
  CHECK(full.snapshots[1].first == 2);
  RunState mid{full.snapshots[1].second, 2};
  const RunResult rest = runner.resume(mid);
  CHECK(rest.state.field.values == full.state.field.values);
  CHECK(rest.rows.front().kind == "resume");
  // Resuming at the end does nothing.
  const RunResult end = runner.resume(full.state);
  CHECK(end.state.field.values == full.state.field.values);
  CHECK(end.rows.size() == 1);
  // Time not on the partition.
  RunState bad = mid;
  bad.field.time = 0.15;
  CHECK_THROWS_AS(runner.resume(bad), Error);
  bad = mid;
  bad.position = 7;
  CHECK_THROWS_AS(runner.resume(bad), Error);
}

TEST_CASE("barrier handling") {
  Setup s;
  const GWeight g(8.0);
  const DistributionField zero(s.vg, s.xg);
  CHECK(fitted_barrier_rate(s.solver, zero, 1e-3, g) == 0.0);
  CHECK_THROWS_AS(fitted_barrier_rate(s.solver, zero, 0.0, g), Error);
  const auto f0 = s.data(1e-4);
  const double rate = fitted_barrier_rate(s.solver, f0, 1e-3, g);
  CHECK(rate > 0.0);
  // Data above the barrier stop the run at once.
  const SplittingRunner tight(s.solver, {0.4, 4}, {}, BarrierSpec{1e-9, 1.0, 8.0});
  const RunResult r = tight.run(f0);
  CHECK(r.state.reason == AbortReason::barrier_violated);
  CHECK(r.state.position == 0);
  CHECK_FALSE(r.state.message.empty());
  const SplittingRunner loose(s.solver, {0.4, 4}, {}, BarrierSpec{1e-3, 2 * rate, 8.0});
  const RunResult ok = loose.run(f0);
  CHECK(ok.state.reason == AbortReason::completed);
  for (const auto& row : ok.rows) CHECK(row.barrier_margin >= 0.0);
  CHECK_FALSE(ok.paper_regime);
}
