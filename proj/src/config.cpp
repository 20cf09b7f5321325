#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "bsplit/io.hpp"

namespace bsplit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key, int line) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError("key '" + key + "' expects a number, got '" + v + "'", line);
  return out;
}

long long to_integer(const std::string& v, const std::string& key, int line) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'", line);
  return out;
}

bool to_bool(const std::string& v, const std::string& key, int line) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError("key '" + key + "' expects true or false, got '" + v + "'", line);
}

std::string fmt(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

struct Key {
  std::function<void(RunConfig&, const std::string&, const std::string&, int)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Key number(T RunConfig::*sec, double T::*field) {
  return {[=](RunConfig& c, const std::string& v, const std::string& k, int l) {
            c.*sec.*field = to_double(v, k, l);
          },
          [=](const RunConfig& c) { return fmt(c.*sec.*field); }};
}

template <class T, class I>
Key integer(T RunConfig::*sec, I T::*field) {
  return {[=](RunConfig& c, const std::string& v, const std::string& k, int l) {
            c.*sec.*field = static_cast<I>(to_integer(v, k, l));
          },
          [=](const RunConfig& c) { return std::to_string(c.*sec.*field); }};
}

template <class T>
Key boolean(T RunConfig::*sec, bool T::*field) {
  return {[=](RunConfig& c, const std::string& v, const std::string& k, int l) {
            c.*sec.*field = to_bool(v, k, l);
          },
          [=](const RunConfig& c) { return std::string(c.*sec.*field ? "true" : "false"); }};
}

const std::map<std::string, Key>& key_table() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> t;
    using R = RunConfig;
    t["physics.gamma"] = number(&R::physics, &PhysParams::gamma);
    t["physics.s"] = number(&R::physics, &PhysParams::s);
    t["physics.kernel_const"] = number(&R::physics, &PhysParams::kernel_const);
    t["physics.dim"] = integer(&R::physics, &PhysParams::dim);
    t["grid.radius"] = number(&R::grid, &GridConfig::radius);
    t["grid.n_velocity"] = integer(&R::grid, &GridConfig::n_velocity);
    t["grid.spatial_dims"] = integer(&R::grid, &GridConfig::spatial_dims);
    t["grid.n_space"] = integer(&R::grid, &GridConfig::n_space);
    t["quadrature.n_radii"] = integer(&R::quadrature, &QuadratureSpec::n_radii);
    t["quadrature.r_min_factor"] = number(&R::quadrature, &QuadratureSpec::r_min_factor);
    t["quadrature.r_max_factor"] = number(&R::quadrature, &QuadratureSpec::r_max_factor);
    t["quadrature.n_directions"] = integer(&R::quadrature, &QuadratureSpec::n_directions);
    t["quadrature.n_hyperplane"] = integer(&R::quadrature, &QuadratureSpec::n_hyperplane);
    t["schedule.T"] = number(&R::schedule, &SplittingSchedule::T);
    t["schedule.N"] = integer(&R::schedule, &SplittingSchedule::N);
    t["stepper.scheme"] = {[](R& c, const std::string& v, const std::string&, int l) {
                             try {
                               c.stepper.scheme = parse_scheme(v);
                             } catch (const Error& e) {
                               throw ConfigError(e.what(), l);
                             }
                           },
                           [](const R& c) { return to_string(c.stepper.scheme); }};
    t["stepper.dt"] = number(&R::stepper, &StepperConfig::dt);
    t["stepper.max_dt_factor"] = number(&R::stepper, &StepperConfig::max_dt_factor);
    t["stepper.adaptive"] = boolean(&R::stepper, &StepperConfig::adaptive);
    t["stepper.conserve"] = boolean(&R::stepper, &StepperConfig::conserve);
    t["stepper.guard_factor"] = number(&R::stepper, &StepperConfig::guard_factor);
    t["stepper.guard_q"] = number(&R::stepper, &StepperConfig::guard_q);
    t["barrier.enabled"] = boolean(&R::barrier, &BarrierConfig::enabled);
    t["barrier.c1_auto"] = boolean(&R::barrier, &BarrierConfig::c1_auto);
    t["barrier.c1_factor"] = number(&R::barrier, &BarrierConfig::c1_factor);
    t["barrier.delta"] = {[](R& c, const std::string& v, const std::string& k, int l) {
                            c.barrier.spec.delta = to_double(v, k, l);
                          },
                          [](const R& c) { return fmt(c.barrier.spec.delta); }};
    t["barrier.C1"] = {[](R& c, const std::string& v, const std::string& k, int l) {
                         c.barrier.spec.C1 = to_double(v, k, l);
                       },
                       [](const R& c) { return fmt(c.barrier.spec.C1); }};
    t["barrier.q"] = {[](R& c, const std::string& v, const std::string& k, int l) {
                        c.barrier.spec.q = to_double(v, k, l);
                      },
                      [](const R& c) { return fmt(c.barrier.spec.q); }};
    t["perturbation.kind"] = {[](R& c, const std::string& v, const std::string&, int l) {
                                try {
                                  c.perturbation.kind = parse_perturbation_kind(v);
                                } catch (const Error& e) {
                                  throw ConfigError(e.what(), l);
                                }
                              },
                              [](const R& c) { return to_string(c.perturbation.kind); }};
    t["perturbation.epsilon"] = number(&R::perturbation, &PerturbationSpec::epsilon);
    t["perturbation.q"] = number(&R::perturbation, &PerturbationSpec::q);
    t["perturbation.spatial_modes"] = integer(&R::perturbation, &PerturbationSpec::spatial_modes);
    t["perturbation.seed"] = {[](R& c, const std::string& v, const std::string& k, int l) {
                                const long long s = to_integer(v, k, l);
                                if (s < 0) throw ConfigError("seed must be nonnegative", l);
                                c.perturbation.seed = static_cast<std::uint64_t>(s);
                              },
                              [](const R& c) { return std::to_string(c.perturbation.seed); }};
    t["perturbation.project"] = {[](R& c, const std::string& v, const std::string& k, int l) {
                                   c.project_initial = to_bool(v, k, l);
                                 },
                                 [](const R& c) {
                                   return std::string(c.project_initial ? "true" : "false");
                                 }};
    t["diagnostics.every"] = integer(&R::diagnostics, &DiagnosticsConfig::every);
    t["diagnostics.lemma_every"] = integer(&R::diagnostics, &DiagnosticsConfig::lemma_every);
    t["diagnostics.lemma_samples"] = integer(&R::diagnostics, &DiagnosticsConfig::lemma_samples);
    t["diagnostics.snapshot_every"] = integer(&R::diagnostics, &DiagnosticsConfig::snapshot_every);
    t["diagnostics.mollifier_scale"] = number(&R::diagnostics, &DiagnosticsConfig::mollifier_scale);
    t["diagnostics.q_list"] = {[](R& c, const std::string& v, const std::string& k, int l) {
                                 std::vector<double> out;
                                 std::stringstream ss(v);
                                 std::string item;
                                 while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), k, l));
                                 if (out.empty()) throw ConfigError("q_list may not be empty", l);
                                 c.diagnostics.q_list = out;
                               },
                               [](const R& c) {
                                 std::string s;
                                 for (std::size_t i = 0; i < c.diagnostics.q_list.size(); ++i)
                                   s += (i ? ", " : "") + fmt(c.diagnostics.q_list[i]);
                                 return s;
                               }};
    t["output.directory"] = {[](R& c, const std::string& v, const std::string&, int l) {
                               if (v.empty()) throw ConfigError("output directory may not be empty", l);
                               c.output_directory = v;
                             },
                             [](const R& c) { return c.output_directory; }};
    return t;
  }();
  return table;
}

}  // namespace

bool RunConfig::operator==(const RunConfig& o) const {
  return physics == o.physics && grid == o.grid && quadrature == o.quadrature &&
         schedule == o.schedule && stepper == o.stepper && barrier == o.barrier &&
         perturbation == o.perturbation && project_initial == o.project_initial &&
         diagnostics == o.diagnostics && output_directory == o.output_directory;
}

void RunConfig::validate() const {
  physics.validate();
  if (physics.dim != grid.dim) throw Error("physics.dim and grid dimension differ");
  build_grids(grid);
  quadrature.validate();
  schedule.validate();
  stepper.validate();
  if (barrier.enabled) {
    barrier.spec.validate();
    if (!(barrier.c1_factor > 0.0)) throw Error("barrier.c1_factor must be positive");
  }
  perturbation.validate();
  if (diagnostics.every < 1) throw Error("diagnostics.every must be at least 1");
  if (diagnostics.lemma_every < 0 || diagnostics.snapshot_every < 0)
    throw Error("diagnostics cadences must be nonnegative");
  if (diagnostics.lemma_samples < 1) throw Error("diagnostics.lemma_samples must be positive");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : key_table()) k.push_back(name);
    return k;
  }();
  return keys;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw, section;
  std::map<std::string, int> seen;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (const auto hash = s.find('#'); hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line);
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = key_table().find(full);
    if (it == key_table().end()) throw ConfigError("unknown key '" + full + "'", line);
    if (auto prev = seen.find(full); prev != seen.end())
      throw ConfigError("duplicate key '" + full + "' (first set on line " +
                            std::to_string(prev->second) + ")",
                        line);
    seen[full] = line;
    it->second.set(cfg, value, full, line);
  }
  cfg.grid.dim = cfg.physics.dim;
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what(), 0);
  }
  cfg.regime_ok = cfg.physics.regime_ok();
  if (!cfg.regime_ok) {
    std::ostringstream msg;
    msg << "gamma + 2s = " << cfg.physics.gamma + 2.0 * cfg.physics.s
        << " lies outside [0, 2], beyond the near-equilibrium theory";
    cfg.warnings.push_back(msg.str());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& [name, key] : key_table()) {
    const auto dot = name.find('.');
    const std::string sec = name.substr(0, dot);
    if (sec != section) {
      out << (section.empty() ? "" : "\n") << "[" << sec << "]\n";
      section = sec;
    }
    out << name.substr(dot + 1) << " = " << key.get(cfg) << "\n";
  }
  return out.str();
}

}  // namespace bsplit
