#pragma once

// The splitting construction on [0, T]: N equal intervals, collision on odd
// intervals [t_{i-1}, t_i), transport on even ones, both with the factor-2
// generator, and an x-mollification at every odd t_i.

#include <optional>
#include <string>
#include <vector>

#include "bsplit/diagnostics.hpp"
#include "bsplit/homogeneous.hpp"
#include "bsplit/transport.hpp"

namespace bsplit {

enum class IntervalKind { collision, transport };

struct SplittingSchedule {
  double T = 1.0;
  int N = 2;

  void validate() const;
  double h() const { return T / N; }
  double t(int i) const { return i * h(); }
  /// Kind of the interval [t_{i-1}, t_i), i = 1..N.
  static IntervalKind kind(int i) { return i % 2 == 1 ? IntervalKind::collision : IntervalKind::transport; }
  bool operator==(const SplittingSchedule&) const = default;
};

enum class AbortReason { completed, barrier_violated, blow_up_guard, non_finite };
std::string to_string(AbortReason r);

struct DiagnosticsConfig {
  /// Emit a row every this many intervals (rows around a mollification
  /// are always emitted together with their interval).
  int every = 1;
  /// Fitted lemma constants every this many rows; 0 disables.
  int lemma_every = 0;
  int lemma_samples = 6;
  std::vector<double> q_list{8.0};
  /// Keep a copy of the field every this many intervals; 0 keeps none.
  int snapshot_every = 0;
  /// Mollifier scale; 0 means the splitting step h.
  double mollifier_scale = 0.0;
  bool operator==(const DiagnosticsConfig&) const = default;
};

struct DiagnosticsRow {
  double time = 0.0;
  int position = 0;
  /// "initial", "collision", "mollify" or "transport".
  std::string kind;
  double mass = 0.0;
  Vec momentum{0.0, 0.0, 0.0};
  double energy = 0.0;
  double entropy = 0.0;
  std::vector<double> weighted_sup;
  double barrier_margin = 0.0;  // NaN without a barrier
  double negative_mass = 0.0;
  double min_density = 0.0;
  std::vector<double> lemma_constants;  // NaN where not computed
};

struct JumpRecord {
  int index = 0;  // odd i
  double time = 0.0;
  double jump = 0.0;
};

/// Field at schedule position p holds f(t_p); for odd p it is the limit from
/// the left, before the mollification.
struct RunState {
  DistributionField field;
  int position = 0;
  AbortReason reason = AbortReason::completed;
  std::string message;
};

struct RunResult {
  RunState state;
  std::vector<DiagnosticsRow> rows;
  std::vector<JumpRecord> jumps;
  /// (position, field) pairs at the snapshot cadence.
  std::vector<std::pair<int, DistributionField>> snapshots;
  bool paper_regime = false;
  double min_density = 0.0;
};

class SplittingRunner {
 public:
  SplittingRunner(const HomogeneousSolver& solver, SplittingSchedule schedule,
                  DiagnosticsConfig diag = {}, std::optional<BarrierSpec> barrier = {});

  const SplittingSchedule& schedule() const { return schedule_; }

  RunResult run(const DistributionField& f0) const;
  /// Continues from state.position up to N. Throws if the state's time does
  /// not sit on this schedule's partition.
  RunResult resume(const RunState& state) const;

 private:
  RunResult advance(RunState state) const;
  DiagnosticsRow row(const DistributionField& f, int position, const std::string& kind,
                     bool lemmas) const;
  void collide(DistributionField& f) const;

  const HomogeneousSolver& solver_;
  SplittingSchedule schedule_;
  DiagnosticsConfig diag_;
  std::optional<BarrierSpec> barrier_;
  std::optional<GWeight> g_;
};

/// Growth rate that makes the barrier tangent at t = 0:
/// max over all nodes of |2 Q(M+f0, M+f0)| / (delta g(v)). A barrier with
/// C1 below this value is violated immediately for small t.
double fitted_barrier_rate(const HomogeneousSolver& solver, const DistributionField& f0,
                           double delta, const GWeight& g);

}  // namespace bsplit
