#pragma once

// Run configuration, snapshot files, diagnostics CSV and SVG charts.
//
// Config grammar, one statement per line:
//   [section]          starts a section
//   key = value        sets section.key
//   # comment          anywhere after optional whitespace, or after a value
// Keys are listed in config_keys(); list values are comma separated. Unknown
// and duplicate keys are errors, as are values of the wrong type.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bsplit/diagnostics.hpp"
#include "bsplit/homogeneous.hpp"
#include "bsplit/initial_data.hpp"
#include "bsplit/splitting.hpp"

namespace bsplit {

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct BarrierConfig {
  bool enabled = false;
  BarrierSpec spec;
  /// Replace spec.C1 by c1_factor times the rate fitted on f_0.
  bool c1_auto = false;
  double c1_factor = 2.0;
  bool operator==(const BarrierConfig&) const = default;
};

struct RunConfig {
  PhysParams physics;
  GridConfig grid;
  QuadratureSpec quadrature;
  SplittingSchedule schedule;
  StepperConfig stepper;
  BarrierConfig barrier;
  PerturbationSpec perturbation;
  bool project_initial = true;
  DiagnosticsConfig diagnostics;
  std::string output_directory = "out";

  /// gamma + 2s in [0, 2]; outside is a warning, recorded here.
  bool regime_ok = true;
  std::vector<std::string> warnings;

  bool operator==(const RunConfig& o) const;
  void validate() const;
};

/// Documented "section.key" names.
const std::vector<std::string>& config_keys();

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Every key, in a form parse_config reads back to an equal config.
std::string serialize_config(const RunConfig& cfg);

/// Binary snapshot "BSPLIT1". Layout, all scalars in the writer's byte order:
///   char[8]  magic "BSPLIT1\0"
///   uint32   endianness tag 0x01020304
///   int32    velocity dim, n_velocity, spatial_dims, n_space
///   float64  R, gamma, s, q, time
///   int64    schedule position
///   int32    parity (position mod 2)
///   uint64   value count = n_velocity^dim * n_space^spatial_dims
///   float64  values in DistributionField order (space major, then velocity
///            nodes lexicographic with the last axis fastest)
///   uint32   CRC-32 of every preceding byte
/// Readers accept either byte order.
struct Snapshot {
  DistributionField field;
  int position = 0;
  double gamma = 1.0;
  double s = 0.5;
  double q = 8.0;
};

void write_snapshot(const Snapshot& snap, const std::filesystem::path& path);
Snapshot read_snapshot(const std::filesystem::path& path);
/// Throws Error when the snapshot grids differ from the configured ones.
void check_snapshot_matches(const Snapshot& snap, const RunConfig& cfg);

/// CSV columns: time, position, kind, mass, momentum_x, momentum_y,
/// momentum_z, energy, entropy, sup_q<q> per configured q, barrier_margin,
/// negative_mass, min_density, c_<check> per lemma check. NaN is "nan".
std::vector<std::string> csv_columns(const std::vector<double>& q_list);
void emit_csv(const std::vector<DiagnosticsRow>& rows, const std::vector<double>& q_list,
              const std::filesystem::path& path);
/// Reads a file written by emit_csv; q_list is recovered from the header.
std::vector<DiagnosticsRow> parse_csv(const std::filesystem::path& path,
                                      std::vector<double>* q_list = nullptr);

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Self-contained SVG line chart; non-positive values are dropped on log
/// axes and a lone point is drawn as a marker.
std::string svg_chart(const ChartSpec& spec, const std::vector<ChartSeries>& series);

/// Writes decay.svg, barrier.svg and drift.svg into out_dir; returns paths.
std::vector<std::filesystem::path> emit_charts(const std::filesystem::path& csv,
                                               const std::filesystem::path& out_dir);

}  // namespace bsplit
