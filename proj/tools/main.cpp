// bsplit command-line driver.
//
//   bsplit run <config>
//   bsplit resume <snapshot> <config>
//   bsplit verify-lemmas <config>
//   bsplit diagnose <snapshot>
//   bsplit selftest
//
// Exit status: 0 when the command completed (a barrier violation during a run
// is a reported outcome), 1 on errors, 2 when a run produced non-finite
// values or tripped the blow-up guard, 3 when selftest checks fail.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bsplit/io.hpp"
#include "selftest.hpp"

namespace fs = std::filesystem;
using namespace bsplit;

namespace {

std::optional<BarrierSpec> resolve_barrier(const RunConfig& cfg, const HomogeneousSolver& solver,
                                           const DistributionField& f0) {
  if (!cfg.barrier.enabled) return std::nullopt;
  BarrierSpec b = cfg.barrier.spec;
  if (cfg.barrier.c1_auto) {
    const double rate = fitted_barrier_rate(solver, f0, b.delta, GWeight(b.q));
    b.C1 = std::max(cfg.barrier.c1_factor * rate, 1e-12);
    std::printf("barrier: fitted rate %.6g, C1 = %.6g\n", rate, b.C1);
  }
  return b;
}

void write_jumps(const std::vector<JumpRecord>& jumps, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "index,time,jump\n";
  out.precision(17);
  for (const auto& j : jumps) out << j.index << "," << j.time << "," << j.jump << "\n";
}

std::vector<JumpRecord> read_jumps(const fs::path& path) {
  std::vector<JumpRecord> out;
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || line != "index,time,jump") return out;
  while (std::getline(in, line)) {
    JumpRecord j;
    char c1 = 0, c2 = 0;
    std::istringstream ls(line);
    if (ls >> j.index >> c1 >> j.time >> c2 >> j.jump && c1 == ',' && c2 == ',') out.push_back(j);
  }
  return out;
}

// Keeps the stored rows and jumps before the resume position, so the files in
// the output directory describe one gap-free run.
void prepend_history(const RunConfig& cfg, int position, RunResult& res) {
  const fs::path dir = cfg.output_directory;
  if (!fs::exists(dir / "diagnostics.csv")) return;
  std::vector<double> qs;
  std::vector<DiagnosticsRow> old;
  try {
    old = parse_csv(dir / "diagnostics.csv", &qs);
  } catch (const Error& e) {
    std::fprintf(stderr, "warning: existing diagnostics.csv not merged: %s\n", e.what());
    return;
  }
  if (qs != cfg.diagnostics.q_list) {
    std::fprintf(stderr, "warning: existing diagnostics.csv has other q columns; replaced\n");
    return;
  }
  std::vector<DiagnosticsRow> rows;
  for (auto& r : old)
    if (r.position < position) rows.push_back(std::move(r));
  rows.insert(rows.end(), res.rows.begin(), res.rows.end());
  res.rows = std::move(rows);
  std::vector<JumpRecord> jumps;
  for (const auto& j : read_jumps(dir / "jumps.csv"))
    if (j.index < position) jumps.push_back(j);
  jumps.insert(jumps.end(), res.jumps.begin(), res.jumps.end());
  res.jumps = std::move(jumps);
}

int finish_run(const RunConfig& cfg, const RunResult& res, const std::optional<BarrierSpec>& barrier) {
  const fs::path dir = cfg.output_directory;
  const fs::path csv = dir / "diagnostics.csv";
  emit_csv(res.rows, cfg.diagnostics.q_list, csv);
  emit_charts(csv, dir);
  write_jumps(res.jumps, dir / "jumps.csv");
  auto snap = [&](const DistributionField& f, int pos, const fs::path& p) {
    write_snapshot({f, pos, cfg.physics.gamma, cfg.physics.s, cfg.perturbation.q}, p);
  };
  for (const auto& [pos, f] : res.snapshots) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%05d.bsplit", pos);
    snap(f, pos, dir / name);
  }
  snap(res.state.field, res.state.position, dir / "final.bsplit");

  std::ofstream report(dir / "report.txt", std::ios::trunc);
  auto both = [&](const std::string& line) {
    std::cout << line << "\n";
    report << line << "\n";
  };
  both("outcome: " + to_string(res.state.reason));
  if (!res.state.message.empty()) both("detail: " + res.state.message);
  both("final position: " + std::to_string(res.state.position) + " of " +
       std::to_string(cfg.schedule.N) + ", t = " + std::to_string(res.state.field.time));
  {
    char line[64];
    std::snprintf(line, sizeof line, "min density: %.6g", res.min_density);
    both(line);
  }
  if (barrier) {
    char line[160];
    std::snprintf(line, sizeof line, "barrier: delta %.6g, C1 %.6g, q %.6g, paper-regime %s",
                  barrier->delta, barrier->C1, barrier->q, res.paper_regime ? "yes" : "no");
    both(line);
  }
  for (const auto& w : cfg.warnings) both("warning: " + w);
  both("output: " + dir.string());
  switch (res.state.reason) {
    case AbortReason::completed:
    case AbortReason::barrier_violated: return 0;
    default: return 2;
  }
}

RunConfig load(const std::string& path) {
  RunConfig cfg = load_config(path);
  for (const auto& w : cfg.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  fs::create_directories(cfg.output_directory);
  std::ofstream(fs::path(cfg.output_directory) / "config.resolved") << serialize_config(cfg);
  return cfg;
}

struct Setup {
  VelocityGrid vgrid;
  SpaceGrid xgrid;
  std::unique_ptr<HomogeneousSolver> solver;
};

Setup setup(const RunConfig& cfg) {
  auto [vg, xg] = build_grids(cfg.grid);
  Setup s{vg, xg, nullptr};
  s.solver = std::make_unique<HomogeneousSolver>(vg, cfg.physics, cfg.quadrature, cfg.stepper);
  return s;
}

DistributionField initial_field(const RunConfig& cfg, const Setup& s) {
  DistributionField f0 = make_perturbation(cfg.perturbation, s.vgrid, s.xgrid);
  return cfg.project_initial ? project_moments(f0) : f0;
}

int cmd_run(const std::string& config) {
  const RunConfig cfg = load(config);
  const Setup s = setup(cfg);
  const DistributionField f0 = initial_field(cfg, s);
  const auto barrier = resolve_barrier(cfg, *s.solver, f0);
  SplittingRunner runner(*s.solver, cfg.schedule, cfg.diagnostics, barrier);
  return finish_run(cfg, runner.run(f0), barrier);
}

int cmd_resume(const std::string& snapshot, const std::string& config) {
  const RunConfig cfg = load(config);
  const Snapshot snap = read_snapshot(snapshot);
  check_snapshot_matches(snap, cfg);
  const Setup s = setup(cfg);
  // The barrier fit always refers to the configured initial data.
  const auto barrier =
      cfg.barrier.enabled ? resolve_barrier(cfg, *s.solver, initial_field(cfg, s)) : std::nullopt;
  SplittingRunner runner(*s.solver, cfg.schedule, cfg.diagnostics, barrier);
  RunState state;
  state.field = snap.field;
  state.position = snap.position;
  RunResult res = runner.resume(state);
  prepend_history(cfg, snap.position, res);
  return finish_run(cfg, res, barrier);
}

int cmd_verify_lemmas(const std::string& config, int samples) {
  const RunConfig cfg = load(config);
  const Setup s = setup(cfg);
  const DistributionField f0 = initial_field(cfg, s);
  LemmaSuiteConfig lc;
  lc.samples = samples;
  const auto reports = lemma_suite(s.solver->model(), f0.slice(0), lc);
  const fs::path path = fs::path(cfg.output_directory) / "lemmas.csv";
  std::ofstream out(path, std::ios::trunc);
  out.precision(17);
  out << "check,samples,fitted_constant,doubled_constant,worst_ratio,pass,note\n";
  bool all = true;
  for (const auto& r : reports) {
    std::printf("%-14s %s  fitted %.6g  doubled %.6g  worst %.6g  %s\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.fitted_constant, r.doubled_constant, r.worst_ratio,
                r.note.c_str());
    out << r.name << "," << r.samples << "," << r.fitted_constant << "," << r.doubled_constant
        << "," << r.worst_ratio << "," << (r.pass ? 1 : 0) << ",\"" << r.note << "\"\n";
    all = all && r.pass;
  }
  std::printf("%s\n", all ? "all checks stable" : "some checks unstable");
  return 0;
}

int cmd_diagnose(const std::string& snapshot) {
  const Snapshot snap = read_snapshot(snapshot);
  const DistributionField& f = snap.field;
  std::printf("snapshot: dim %d, n %d, R %g, spatial dims %d, n_x %d\n", f.vgrid.dim(),
              f.vgrid.n_per_axis(), f.vgrid.radius(), f.xgrid.spatial_dims(), f.xgrid.n_per_axis());
  std::printf("gamma %g, s %g, q %g, position %d, t %.17g\n", snap.gamma, snap.s, snap.q,
              snap.position, f.time);
  std::printf("finite: %s\n", f.all_finite() ? "yes" : "no");
  const HydroSample h = hydro_totals(f);
  std::printf("mass %.17g\nmomentum %.17g %.17g %.17g\nenergy %.17g\nentropy %.17g\n", h.mass,
              h.momentum[0], h.momentum[1], h.momentum[2], h.energy, h.entropy);
  std::printf("negative mass %.6g\nmin density %.6g\n", h.negative_mass, f.min_density());
  for (double q : {0.0, 4.0, 8.0, 12.0})
    std::printf("sup <v>^%g |f| = %.6g\n", q, weighted_sup(f, q));
  const HydroCheck hc = near_equilibrium_implies_hydro(f, snap.q);
  if (hc.ok)
    std::printf("hydrodynamic bounds: m0 %.6g M0 %.6g E0 %.6g H0 %.6g\n", hc.bounds.m0,
                hc.bounds.M0, hc.bounds.E0, hc.bounds.H0);
  else
    std::printf("hydrodynamic bounds: not implied (%s)\n", hc.reason.c_str());
  return f.all_finite() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Splitting solver for the spatially periodic non-cutoff Boltzmann equation"};
  app.require_subcommand(1);

  std::string config, snapshot;
  int samples = 25;
  auto* run = app.add_subcommand("run", "run the splitting scheme from a config");
  run->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  auto* resume = app.add_subcommand("resume", "continue a run from a snapshot");
  resume->add_option("snapshot", snapshot, "snapshot file")->required()->check(CLI::ExistingFile);
  resume->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  auto* lemmas = app.add_subcommand("verify-lemmas", "fit and check the inequality constants");
  lemmas->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  lemmas->add_option("--samples", samples, "sample family size")->check(CLI::PositiveNumber);
  auto* diagnose = app.add_subcommand("diagnose", "print diagnostics of a snapshot");
  diagnose->add_option("snapshot", snapshot, "snapshot file")->required()->check(CLI::ExistingFile);
  auto* selftest = app.add_subcommand("selftest", "run the built-in example checks");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config);
    if (*resume) return cmd_resume(snapshot, config);
    if (*lemmas) return cmd_verify_lemmas(config, samples);
    if (*diagnose) return cmd_diagnose(snapshot);
    if (*selftest) return run_selftest(std::cout) ? 0 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
