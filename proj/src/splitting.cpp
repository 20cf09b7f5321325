#include "bsplit/splitting.hpp"

#include <cmath>
#include <exception>
#include <limits>

namespace bsplit {

void SplittingSchedule::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw Error("schedule horizon T must be positive");
  if (N < 2 || N % 2 != 0) throw Error("schedule needs an even number N >= 2 of intervals");
}

std::string to_string(AbortReason r) {
  switch (r) {
    case AbortReason::completed: return "completed";
    case AbortReason::barrier_violated: return "barrier-violated";
    case AbortReason::blow_up_guard: return "blow-up-guard";
    case AbortReason::non_finite: return "non-finite";
  }
  return "unknown";
}

SplittingRunner::SplittingRunner(const HomogeneousSolver& solver, SplittingSchedule schedule,
                                 DiagnosticsConfig diag, std::optional<BarrierSpec> barrier)
    : solver_(solver), schedule_(schedule), diag_(std::move(diag)), barrier_(barrier) {
  schedule_.validate();
  if (diag_.every < 1) throw Error("diagnostics cadence must be at least 1");
  if (diag_.mollifier_scale < 0.0) throw Error("mollifier scale must be nonnegative");
  if (barrier_) {
    barrier_->validate();
    g_.emplace(barrier_->q);
  }
}

DiagnosticsRow SplittingRunner::row(const DistributionField& f, int position,
                                    const std::string& kind, bool lemmas) const {
  DiagnosticsRow r;
  r.time = schedule_.t(position);
  r.position = position;
  r.kind = kind;
  const HydroSample h = hydro_totals(f);
  r.mass = h.mass;
  r.momentum = h.momentum;
  r.energy = h.energy;
  r.entropy = h.entropy;
  r.negative_mass = h.negative_mass;
  r.min_density = f.min_density();
  for (double q : diag_.q_list) r.weighted_sup.push_back(weighted_sup(f, q));
  r.barrier_margin = barrier_ ? barrier_margin(f, r.time, *barrier_, *g_).margin
                              : std::numeric_limits<double>::quiet_NaN();
  r.lemma_constants.assign(lemma_names().size(), std::numeric_limits<double>::quiet_NaN());
  if (lemmas) {
    LemmaSuiteConfig cfg;
    cfg.samples = diag_.lemma_samples;
    cfg.check_doubling = false;
    // The slice with the largest perturbation.
    std::size_t worst = 0;
    double top = -1.0;
    for (std::size_t ix = 0; ix < f.xgrid.size(); ++ix) {
      double s = 0.0;
      for (double x : f.slice(ix)) s = std::max(s, std::abs(x));
      if (s > top) {
        top = s;
        worst = ix;
      }
    }
    for (std::size_t k = 0; k < lemma_names().size(); ++k)
      r.lemma_constants[k] =
          lemma_check(solver_.model(), f.slice(worst), lemma_names()[k], cfg.samples, cfg)
              .fitted_constant;
  }
  return r;
}

void SplittingRunner::collide(DistributionField& f) const {
  const double h = schedule_.h();
  const std::size_t nx = f.xgrid.size();
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t ix = 0; ix < nx; ++ix) {
    try {
      solver_.step(f.slice(ix), h);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

RunResult SplittingRunner::run(const DistributionField& f0) const {
  if (f0.vgrid != solver_.model().grid()) throw Error("initial field and solver grids differ");
  RunState s;
  s.field = f0;
  s.field.time = 0.0;
  s.position = 0;
  return advance(std::move(s));
}

RunResult SplittingRunner::resume(const RunState& state) const {
  if (state.field.vgrid != solver_.model().grid()) throw Error("snapshot and solver grids differ");
  if (state.position < 0 || state.position > schedule_.N)
    throw Error("snapshot position lies outside the schedule");
  const double expected = schedule_.t(state.position);
  if (std::abs(state.field.time - expected) > 1e-9 * std::max(1.0, schedule_.T))
    throw Error("snapshot time does not match its schedule position (parity mismatch)");
  RunState s = state;
  s.reason = AbortReason::completed;
  s.message.clear();
  return advance(std::move(s));
}

RunResult SplittingRunner::advance(RunState s) const {
  RunResult out;
  const double h = schedule_.h();
  const MollifierSpec moll{diag_.mollifier_scale > 0.0 ? diag_.mollifier_scale : h};
  int rows_emitted = 0;
  auto emit = [&](const DistributionField& f, int position, const std::string& kind) {
    const bool lemmas = diag_.lemma_every > 0 && rows_emitted % diag_.lemma_every == 0;
    out.rows.push_back(row(f, position, kind, lemmas));
    ++rows_emitted;
  };
  double min_density = s.field.min_density();
  auto barrier_ok = [&](const DistributionField& f, int position) {
    if (!barrier_) return true;
    const BarrierMargin m = barrier_margin(f, schedule_.t(position), *barrier_, *g_);
    if (m.margin >= 0.0) return true;
    s.reason = AbortReason::barrier_violated;
    s.message = "barrier violated at t = " + std::to_string(schedule_.t(position)) +
                ", x node " + std::to_string(m.x_node) + ", v node " + std::to_string(m.v_node);
    return false;
  };

  emit(s.field, s.position, s.position == 0 ? "initial" : "resume");
  if (diag_.snapshot_every > 0) out.snapshots.emplace_back(s.position, s.field);
  bool stop = !barrier_ok(s.field, s.position);

  for (int i = s.position + 1; i <= schedule_.N && !stop; ++i) {
    DistributionField next = s.field;
    try {
      if (SplittingSchedule::kind(i) == IntervalKind::collision) {
        collide(next);
      } else {
        // The state at odd t_{i-1} is the left limit; mollify first.
        DistributionField m = mollify(next, moll);
        out.jumps.push_back({i - 1, schedule_.t(i - 1), mollification_jump(next, m)});
        if (i % diag_.every == 0) emit(m, i - 1, "mollify");
        next = transport_step(m, h);
      }
    } catch (const BlowUpError& e) {
      s.reason = AbortReason::blow_up_guard;
      s.message = e.what();
      break;
    }
    next.time = schedule_.t(i);
    if (!next.all_finite()) {
      s.reason = AbortReason::non_finite;
      s.message = "non-finite values after interval " + std::to_string(i);
      break;
    }
    s.field = std::move(next);
    s.position = i;
    min_density = std::min(min_density, s.field.min_density());
    const bool last = i == schedule_.N;
    if (i % diag_.every == 0 || last)
      emit(s.field, i,
           SplittingSchedule::kind(i) == IntervalKind::collision ? "collision" : "transport");
    if (diag_.snapshot_every > 0 && (i % diag_.snapshot_every == 0 || last))
      out.snapshots.emplace_back(i, s.field);
    stop = !barrier_ok(s.field, i);
  }
  out.paper_regime = barrier_ && barrier_->paper_regime(schedule_.T);
  out.min_density = min_density;
  out.state = std::move(s);
  return out;
}

double fitted_barrier_rate(const HomogeneousSolver& solver, const DistributionField& f0,
                           double delta, const GWeight& g) {
  if (!(delta > 0.0)) throw Error("barrier delta must be positive");
  if (f0.vgrid != solver.model().grid()) throw Error("field and solver grids differ");
  const std::size_t nv = f0.vgrid.size();
  std::vector<double> gv(nv);
  for (std::size_t iv = 0; iv < nv; ++iv) gv[iv] = g(f0.vgrid.node(iv));
  double rate = 0.0;
  for (std::size_t ix = 0; ix < f0.xgrid.size(); ++ix) {
    const auto r = solver.rhs(f0.slice(ix));
    for (std::size_t iv = 0; iv < nv; ++iv) rate = std::max(rate, std::abs(r[iv]) / (delta * gv[iv]));
  }
  return rate;
}

}  // namespace bsplit
