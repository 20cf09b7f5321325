#include "selftest.hpp"

#include <cmath>
#include <algorithm>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bsplit/io.hpp"
#include "bsplit/moments.hpp"
#include "bsplit/transport.hpp"

using namespace bsplit;

namespace {

struct Check {
  std::string name;
  std::function<bool()> fn;
};

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool throws_config(const std::string& text, const std::string& needle) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

void append_operator_checks(std::vector<Check>& c);
void append_diagnostic_checks(std::vector<Check>& c);

std::vector<Check> checks() {
  const double pi = std::numbers::pi;
  std::vector<Check> c;

  c.push_back({"config defaults and regime flag", [] {
                 const RunConfig a = parse_config("");
                 const RunConfig b = parse_config("[physics]\ngamma = 2\ns = 0.9\n");
                 return a.regime_ok && a.warnings.empty() && !b.regime_ok && b.warnings.size() == 1;
               }});
  c.push_back({"config duplicate and unknown keys", [] {
                 return throws_config("[grid]\nradius = 5\nradius = 6\n", "line 3") &&
                        throws_config("[grid]\nradius = 5\nradius = 6\n", "grid.radius") &&
                        throws_config("[grid]\nbogus = 1\n", "grid.bogus") &&
                        throws_config("[grid]\nn_velocity = many\n", "integer");
               }});
  c.push_back({"config serialize roundtrip", [] {
                 RunConfig a = parse_config(
                     "[physics]\ngamma = 0.3\ns = 0.25\n[diagnostics]\nq_list = 4, 8.5\n"
                     "[perturbation]\nkind = rough-indicator\nepsilon = 0.003\n");
                 return parse_config(serialize_config(a)) == a;
               }});

  c.push_back({"equilibrium is a fixed point", [] {
                 HomogeneousSolver solver(VelocityGrid(2, 4.0, 8), PhysParams{1.0, 0.5, 1.0, 2}, {},
                                          {});
                 std::vector<double> f(solver.model().grid().size(), 0.0);
                 solver.step(f, 0.5);
                 return max_abs_diff(f, std::vector<double>(f.size(), 0.0)) == 0.0;
               }});

  c.push_back({"perturbation: zero amplitude and linearity", [] {
                 const VelocityGrid vg(3, 5.0, 10);
                 const SpaceGrid xg(1, 4);
                 PerturbationSpec s;
                 s.epsilon = 1e-3;
                 const auto a = make_perturbation(s, vg, xg);
                 s.epsilon = 2e-3;
                 const auto b = make_perturbation(s, vg, xg);
                 s.epsilon = 0.0;
                 const auto z = make_perturbation(s, vg, xg);
                 double lin = 0.0;
                 for (std::size_t i = 0; i < a.values.size(); ++i)
                   lin = std::max(lin, std::abs(b.values[i] - 2.0 * a.values[i]));
                 bool zero = true;
                 for (double x : z.values) zero = zero && x == 0.0;
                 return zero && lin <= 1e-18;
               }});
  c.push_back({"perturbation envelope for every kind", [] {
                 const VelocityGrid vg(3, 5.0, 10);
                 const SpaceGrid xg(1, 4);
                 for (auto kind : {PerturbationKind::separable_smooth, PerturbationKind::random_fourier,
                                   PerturbationKind::rough_indicator}) {
                   PerturbationSpec s;
                   s.kind = kind;
                   if (!validate_envelope(make_perturbation(s, vg, xg), 1e-2, 8.0).ok) return false;
                 }
                 return true;
               }});
  c.push_back({"envelope check boundary cases", [] {
                 const VelocityGrid vg(2, 4.0, 8);
                 DistributionField f(vg, SpaceGrid());
                 if (!validate_envelope(f, 1e-2, 8.0).ok) return false;
                 for (std::size_t i = 0; i < vg.size(); ++i)
                   f.values[i] = 1e-2 / bracket_weight(vg.node(i), 8.0);
                 if (validate_envelope(f, 1e-2, 8.0).ok) return false;
                 for (auto& x : f.values) x *= 0.99;
                 return validate_envelope(f, 1e-2, 8.0).ok;
               }});
  c.push_back({"moment projection idempotent", [] {
                 const VelocityGrid vg(3, 5.0, 10);
                 PerturbationSpec s;
                 s.kind = PerturbationKind::random_fourier;
                 const auto f = make_perturbation(s, vg, SpaceGrid(1, 4));
                 const auto p = project_moments(f);
                 const auto pp = project_moments(p);
                 const Moments m = field_moments(p);
                 double res = 0.0;
                 for (double x : m.value) res = std::max(res, std::abs(x));
                 return res < 1e-12 && max_abs_diff(p.values, pp.values) < 1e-12;
               }});

  c.push_back({"transport plane wave", [pi] {
                 const VelocityGrid vg(2, 4.0, 8);
                 const SpaceGrid xg(1, 16);
                 DistributionField f(vg, xg);
                 const int k = 3;
                 const double tau = 0.37;
                 for (std::size_t ix = 0; ix < xg.size(); ++ix)
                   for (std::size_t iv = 0; iv < vg.size(); ++iv)
                     f.at(ix, iv) = std::cos(2 * pi * k * xg.position(ix)[0]) * maxwellian(vg.node(iv), 2);
                 const auto g = transport_step(f, tau);
                 double err = 0.0;
                 for (std::size_t ix = 0; ix < xg.size(); ++ix)
                   for (std::size_t iv = 0; iv < vg.size(); ++iv) {
                     const double x = xg.position(ix)[0] - 2.0 * tau * vg.node(iv)[0];
                     err = std::max(err, std::abs(g.at(ix, iv) -
                                                  std::cos(2 * pi * k * x) * maxwellian(vg.node(iv), 2)));
                   }
                 return err < 1e-12;
               }});
  c.push_back({"transport group property", [] {
                 const VelocityGrid vg(2, 4.0, 8);
                 PerturbationSpec s;
                 s.kind = PerturbationKind::random_fourier;
                 s.spatial_modes = 3;
                 const auto f = make_perturbation(s, vg, SpaceGrid(2, 8));
                 const auto a = transport_step(transport_step(f, 0.13), 0.29);
                 const auto b = transport_step(f, 0.42);
                 return max_abs_diff(a.values, b.values) < 1e-12;
               }});
  c.push_back({"mollifier leaves constants alone", [] {
                 const VelocityGrid vg(2, 4.0, 8);
                 DistributionField f(vg, SpaceGrid(1, 16));
                 for (std::size_t ix = 0; ix < 16; ++ix)
                   for (std::size_t iv = 0; iv < vg.size(); ++iv) f.at(ix, iv) = 1e-3 * iv;
                 const auto m = mollify(f, {0.3});
                 return mollification_jump(f, m) < 1e-15 && linf_nonexpansive_check(f, {0.3});
               }});

  c.push_back({"anisotropic distance", [] {
                 const Vec v{0.3, -1.2, 0.7}, w{1.1, 0.4, -0.5};
                 const double c = std::cos(0.7), s = std::sin(0.7);
                 auto rot = [&](const Vec& u) { return Vec{c * u[0] - s * u[1], s * u[0] + c * u[1], u[2]}; };
                 return aniso_distance(v, v) == 0.0 && aniso_distance(v, w) > 0.0 &&
                        aniso_distance(v, w) == aniso_distance(w, v) &&
                        std::abs(aniso_distance(rot(v), rot(w)) - aniso_distance(v, w)) < 1e-14;
               }});
  c.push_back({"barrier is nondecreasing", [] {
                 const BarrierSpec b{1e-3, 2.0, 8.0};
                 double prev = 0.0;
                 for (int i = 0; i <= 100; ++i) {
                   const double u = b.U(0.05 * i);
                   if (u < prev) return false;
                   prev = u;
                 }
                 const GWeight g(8.0);
                 return std::abs(g.radial(2.0) - std::pow(2.0, -8.0)) < 1e-15 && g.radial(0.0) <= 2.0 &&
                        g.radial(0.0) > 0.0;
               }});
  c.push_back({"monitor recovers t^-2", [] {
                 std::vector<double> t, y;
                 for (int i = 1; i <= 40; ++i) {
                   t.push_back(0.1 * i);
                   y.push_back(3.0 / (t.back() * t.back()));
                 }
                 const TrendReport r = equilibration_monitor(t, y);
                 return std::abs(r.exponent - 2.0) < 0.1 && r.monotone_fraction == 1.0;
               }});

  c.push_back({"good plus bad recomposes Q_s", [] {
                 const VelocityGrid vg(2, 6.0, 16);
                 const CollisionModel model(vg, PhysParams{1.0, 0.5, 1.0, 2});
                 std::vector<double> f(vg.size());
                 for (std::size_t i = 0; i < vg.size(); ++i)
                   f[i] = 0.5e-3 * GWeight(8.0)(vg.node(i));
                 const GoodBad gb = good_bad_split(model, f, Vec{4.0, 0.0, 0.0}, GWeight(8.0));
                 return std::abs(gb.good + gb.bad - gb.total) <= 1e-10 * std::abs(gb.total);
               }});
  c.push_back({"entropy does not increase", [] {
                 const VelocityGrid vg(2, 6.0, 16);
                 HomogeneousSolver solver(vg, PhysParams{1.0, 0.5, 1.0, 2}, {}, {});
                 PerturbationSpec s;
                 auto f = project_moments(make_perturbation(s, vg, SpaceGrid()));
                 const StepReport r = solver.step(f.slice(0), 0.1);
                 for (std::size_t i = 1; i < r.entropy.size(); ++i)
                   if (r.entropy[i] > r.entropy[i - 1] + 1e-4) return false;
                 return r.entropy.back() <= r.entropy.front();
               }});
  c.push_back({"splitting logs one jump per collision interval", [] {
                 const VelocityGrid vg(2, 4.0, 8);
                 HomogeneousSolver solver(vg, PhysParams{1.0, 0.5, 1.0, 2}, {}, {});
                 PerturbationSpec s;
                 auto f0 = project_moments(make_perturbation(s, vg, SpaceGrid(1, 4)));
                 SplittingRunner runner(solver, {0.2, 6});
                 const RunResult r = runner.run(f0);
                 const Moments m0 = field_moments(f0), m1 = field_moments(r.state.field);
                 double drift = 0.0;
                 for (int l = 0; l < 5; ++l) drift = std::max(drift, std::abs(m1.value[l] - m0.value[l]));
                 return r.state.reason == AbortReason::completed && r.jumps.size() == 3 && drift < 1e-14;
               }});
  c.push_back({"resume equals a full run", [] {
                 const VelocityGrid vg(2, 4.0, 8);
                 HomogeneousSolver solver(vg, PhysParams{1.0, 0.5, 1.0, 2}, {}, {});
                 PerturbationSpec s;
                 auto f0 = project_moments(make_perturbation(s, vg, SpaceGrid(1, 4)));
                 const RunResult full = SplittingRunner(solver, {0.2, 4}).run(f0);
                 const RunResult half = SplittingRunner(solver, {0.1, 2}).run(f0);
                 const RunResult rest = SplittingRunner(solver, {0.2, 4}).resume(half.state);
                 return max_abs_diff(full.state.field.values, rest.state.field.values) <= 1e-12;
               }});
  append_operator_checks(c);
  append_diagnostic_checks(c);
  return c;
}

double grid_mass(const VelocityGrid& g, std::span<const double> f) {
  double m = 0.0;
  for (double x : f) m += x * g.cell_volume();
  return m;
}

void append_operator_checks(std::vector<Check>& c) {
  const double pi = std::numbers::pi;

  c.push_back({"Maxwellian values and grid mass", [pi] {
                 const VelocityGrid g(3, 6.0, 24);
                 double mass = 0.0;
                 for (std::size_t i = 0; i < g.size(); ++i) mass += maxwellian(g.node(i), 3);
                 mass *= g.cell_volume();
                 const Vec v{0.4, -1.1, 2.0};
                 return std::abs(maxwellian(Vec{0, 0, 0}, 3) - std::pow(2 * pi, -1.5)) < 1e-15 &&
                        maxwellian(v, 3) == maxwellian(Vec{-v[0], -v[1], -v[2]}, 3) &&
                        std::abs(mass - 1.0) < 1e-6;
               }});
  c.push_back({"bracket weight and grid construction", [] {
                 const VelocityGrid a(3, 6.0, 12), b(3, 8.0, 16);
                 bool inside = true;
                 for (std::size_t i = 0; i < b.size(); ++i)
                   for (double x : b.node(i)) inside = inside && std::abs(x) <= 8.0;
                 return bracket_weight(Vec{0, 0, 0}, 5.0) == 1.0 &&
                        std::abs(bracket_weight(Vec{1, 0, 0}, 2.0) - 2.0) < 1e-15 &&
                        std::abs(bracket_weight(Vec{3, 4, 0}, 1.0) - std::sqrt(26.0)) < 1e-14 &&
                        a.spacing() == 1.0 && SpaceGrid(0, 1).size() == 1 && b.size() == 4096 && inside;
               }});
  c.push_back({"angular cross-section", [] {
                 const AngularCrossSection xs{0.5, 3, true};
                 const double th = 1e-4;
                 // The chosen formula is 2^{d-1+2s} theta^{-(d-1)-2s} for small angles.
                 const double ratio = angular_b(std::cos(th), xs) / std::pow(th, -3.0) / 8.0;
                 return angular_b(-0.5, xs) == 0.0 &&
                        std::abs(angular_b(0.0, xs) - 2.8284271247) < 1e-9 &&
                        std::abs(ratio - 1.0) < 1e-3;
               }});
  c.push_back({"kernel K_f: zero, sign, symmetry", [] {
                 const VelocityGrid g(3, 4.0, 8);
                 const CollisionModel m(g, PhysParams{});
                 const std::vector<double> zeros(g.size(), 0.0);
                 std::vector<double> f(g.size());
                 for (std::size_t i = 0; i < g.size(); ++i)
                   f[i] = 0.01 * std::sin(double(i)) * maxwellian(g.node(i), 3);
                 const Density Z{0.0, &g, zeros, {}}, F{1.0, &g, f, {}};
                 std::mt19937_64 rng(5);
                 std::uniform_real_distribution<double> u(-2.5, 2.5);
                 bool ok = m.kf(Z, Vec{0, 0, 0}, Vec{1, 0, 0}) == 0.0;
                 for (int k = 0; k < 100 && ok; ++k) {
                   const Vec v{u(rng), u(rng), u(rng)}, w{u(rng), u(rng), u(rng)};
                   ok = m.kernel_symmetry_check(F, v, w) && m.kf(F, v, v + w) >= 0.0 &&
                        std::abs(m.kf(F, v, v + w) - m.kf(F, v, v - w)) <=
                            1e-12 * std::abs(m.kf(F, v, v + w));
                 }
                 return ok;
               }});
  c.push_back({"cancellation constant converges", [] {
                 const PhysParams p;
                 const AngularCrossSection xs{0.5, 3, true};
                 const double a = cancellation_constant(p, xs, 2000).value;
                 const double b = cancellation_constant(p, xs, 4000).value;
                 return a > 0.0 && std::abs(a - b) < 5e-3 * b;
               }});
  c.push_back({"non-singular part", [pi] {
                 const VelocityGrid g(3, 4.0, 8);
                 PhysParams p0;
                 p0.gamma = 0.0;
                 const CollisionModel m0(g, p0);
                 const Density M{1.0, nullptr, {}, {}};
                 return std::abs(maxwell_convolution(0.0, 1.0, 3) - 2 * std::sqrt(2 / pi)) < 1e-10 &&
                        std::abs(m0.convolution(M, 0) - m0.convolution(M, 300)) < 1e-12 * m0.convolution(M, 0);
               }});
  c.push_back({"Q_s identities and Q(M, M) = 0", [] {
                 const VelocityGrid g(3, 6.0, 12);
                 const CollisionModel m(g, PhysParams{});
                 const Density M{1.0, nullptr, {}, {}};
                 const TestFunction one = [](const Vec&) { return 1.0; };
                 const TestFunction maxw = [](const Vec& v) { return maxwellian(v, 3); };
                 bool ok = std::abs(m.q_s(M, one, Vec{0.5, 0.2, -1.0})) < 1e-12 &&
                           m.q_s(M, maxw, Vec{0, 0, 0}) < 0.0;
                 for (int k = 0; k < 10 && ok; ++k) {
                   const std::size_t node = g.linear({3 + (k % 6), 4 + (k * 7) % 5, 6 - k % 3});
                   ok = std::abs(m.q_total(M, maxw, node)) < 2e-2 * std::abs(m.q_s(M, maxw, g.node(node)));
                 }
                 return ok;
               }});
  c.push_back({"kernel and convolution bounds degenerate cases", [] {
                 const VelocityGrid g(3, 4.0, 8);
                 const CollisionModel m(g, PhysParams{});
                 const std::vector<double> zeros(g.size(), 0.0);
                 const Density Z{0.0, &g, zeros, {}};
                 const KernelBoundReport k = m.kernel_bound_check(Z, 100, 0.5);
                 std::vector<double> f(g.size());
                 for (std::size_t i = 0; i < g.size(); ++i)
                   f[i] = std::cos(0.3 * double(i)) * 1e-3 / bracket_weight(g.node(i), 8.0);
                 const ConvolutionBoundReport r = m.convolution_bound_check(f, 1.0, 100, 0.0, 8.0);
                 return k.near_moment == 0.0 && k.far_mass == 0.0 &&
                        m.convolution_bound_check(zeros, 1.0, 3, 1.0, 8.0).lhs == 0.0 &&
                        std::abs(r.lhs - grid_mass(g, f)) < 1e-15;
               }});
  c.push_back({"perturbative rhs: zero, moments, linear response", [] {
                 const VelocityGrid g(2, 5.0, 12);
                 PhysParams p;
                 p.dim = 2;
                 const CollisionModel m(g, p);
                 const PerturbativeRhs rhs(m);
                 const std::size_t n = g.size();
                 std::vector<double> psi(n), out(n);
                 for (std::size_t i = 0; i < n; ++i) {
                   const Vec v = g.node(i);
                   psi[i] = (v[0] - 0.5 * v[0] * v[1]) * maxwellian(v, 2);
                 }
                 rhs(std::vector<double>(n, 0.0), out);
                 bool ok = std::all_of(out.begin(), out.end(), [](double x) { return x == 0.0; });
                 auto scaled = [&](double eps) {
                   std::vector<double> f(n), r(n);
                   for (std::size_t i = 0; i < n; ++i) f[i] = eps * psi[i];
                   rhs(f, r);
                   for (auto& x : r) x /= eps;
                   return r;
                 };
                 const auto r1 = scaled(1e-2), r2 = scaled(5e-3), r3 = scaled(2.5e-3);
                 const double d12 = max_abs_diff(r1, r2), d23 = max_abs_diff(r2, r3);
                 ok = ok && std::abs(d12 / d23 - 2.0) < 1e-3;
                 std::vector<double> f(n);
                 for (std::size_t i = 0; i < n; ++i) f[i] = 1e-2 * psi[i];
                 rhs(f, out);
                 double l1 = 0.0;
                 for (double x : out) l1 += std::abs(x) * g.cell_volume();
                 const Moments mo = slice_moments(g, out);
                 for (int k = 0; k < mo.count; ++k) ok = ok && std::abs(mo.value[k]) < 0.25 * l1;
                 return ok;
               }});
  c.push_back({"stability heuristic scaling", [] {
                 PhysParams p;
                 const double half = stability_heuristic(VelocityGrid(3, 6.0, 32), p) /
                                     stability_heuristic(VelocityGrid(3, 6.0, 16), p);
                 p.s = 0.99;
                 const double quarter = stability_heuristic(VelocityGrid(3, 6.0, 32), p) /
                                        stability_heuristic(VelocityGrid(3, 6.0, 16), p);
                 return std::abs(half - 0.5) < 0.05 && std::abs(quarter - 0.25) < 0.03;
               }});
  c.push_back({"RK4 is fourth order", [] {
                 const VelocityGrid g(2, 5.0, 12);
                 PhysParams p;
                 p.dim = 2;
                 const double dt0 = 2 * stability_heuristic(g, p);
                 auto run = [&](double dt) {
                   StepperConfig cfg;
                   cfg.scheme = Scheme::rk4;
                   cfg.dt = dt;
                   cfg.conserve = false;
                   HomogeneousSolver solver(g, p, {}, cfg);
                   std::vector<double> f(g.size());
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     const Vec v = g.node(i);
                     f[i] = 1e-2 * (v[0] * v[1] - 0.3 * v[0]) * maxwellian(v, 2);
                   }
                   solver.step(f, 4 * dt0);
                   return f;
                 };
                 const auto ref = run(dt0 / 8);
                 return std::log2(max_abs_diff(run(dt0), ref) / max_abs_diff(run(dt0 / 2), ref)) >= 3.5;
               }});
  c.push_back({"mollifier: mean, spike, random fields", [] {
                 const VelocityGrid vg(2, 4.0, 4);
                 DistributionField spike(vg, SpaceGrid(1, 32));
                 spike.at(5, 3) = 1.0;
                 const auto m = mollify(spike, {0.1});
                 double top = 0.0, mean = 0.0;
                 for (std::size_t ix = 0; ix < 32; ++ix) {
                   top = std::max(top, std::abs(m.at(ix, 3)));
                   mean += m.at(ix, 3);
                 }
                 bool ok = top < 1.0 && std::abs(mean - 1.0) < 1e-14;
                 std::mt19937_64 rng(1);
                 std::uniform_real_distribution<double> u(-1.0, 1.0);
                 for (int k = 0; k < 100 && ok; ++k) {
                   DistributionField f(vg, SpaceGrid(2, 8));
                   for (auto& x : f.values) x = u(rng);
                   ok = linf_nonexpansive_check(f, {0.3});
                 }
                 return ok;
               }});
  c.push_back({"projection linear and idempotent on a slice", [] {
                 const VelocityGrid g(3, 4.0, 8);
                 const MomentProjector P(g);
                 std::vector<double> a(g.size()), b(g.size()), sum(g.size());
                 for (std::size_t i = 0; i < g.size(); ++i) {
                   a[i] = 1e-3 * std::sin(1.7 * double(i));
                   b[i] = 1e-3 * std::cos(0.9 * double(i));
                   sum[i] = 2 * a[i] + b[i];
                 }
                 P.project(a);
                 P.project(b);
                 P.project(sum);
                 double lin = 0.0;
                 for (std::size_t i = 0; i < g.size(); ++i)
                   lin = std::max(lin, std::abs(sum[i] - 2 * a[i] - b[i]));
                 auto again = a;
                 P.project(again);
                 return lin < 1e-15 && max_abs_diff(again, a) < 1e-12;
               }});
}

void append_diagnostic_checks(std::vector<Check>& c) {
  const double pi = std::numbers::pi;

  c.push_back({"hydrodynamics of the Maxwellian", [pi] {
                 const VelocityGrid vg(3, 6.0, 16);
                 DistributionField f(vg, SpaceGrid());
                 const HydroSample h = hydro_totals(f);
                 const double H = -1.5 * std::log(2 * pi) - 1.5;
                 for (std::size_t i = 0; i < vg.size(); ++i)
                   f.values[i] = 1e-3 * std::exp(-norm_sq(vg.node(i))) * (1 + vg.node(i)[0]);
                 const HydroSample h1 = hydro_totals(f);
                 for (auto& x : f.values) x *= 2;
                 const HydroSample h2 = hydro_totals(f);
                 auto twice = [](double a2, double a1) { return std::abs(a2 - 2 * a1) <= 1e-9 * std::abs(a1); };
                 const bool linear = twice(h2.mass - h.mass, h1.mass - h.mass) &&
                                     twice(h2.energy - h.energy, h1.energy - h.energy) &&
                                     twice(h2.momentum[0], h1.momentum[0]);
                 return std::abs(h.mass - 1.0) < 1e-4 && std::abs(h.energy - 3.0) < 1e-3 &&
                        std::abs(h.entropy - H) < 1e-3 && linear;
               }});
  c.push_back({"hydrodynamic bounds", [] {
                 const VelocityGrid vg(3, 6.0, 12);
                 DistributionField f(vg, SpaceGrid());
                 const HydroCheck zero = near_equilibrium_implies_hydro(f, 8.0);
                 const HydroSample h = hydro_totals(f);
                 bool ok = zero.ok && std::abs(zero.bounds.m0 - h.mass) < 1e-14 &&
                           std::abs(zero.bounds.M0 - h.mass) < 1e-14 &&
                           std::abs(zero.bounds.E0 - h.energy) < 1e-13 &&
                           std::abs(zero.bounds.H0 - h.entropy) < 1e-13;
                 for (std::size_t i = 0; i < vg.size(); ++i)
                   f.values[i] = 0.5 / bracket_weight(vg.node(i), 8.0);
                 const HydroCheck half = near_equilibrium_implies_hydro(f, 8.0);
                 ok = ok && half.ok && half.bounds.m0 > 0.0 && std::isfinite(half.bounds.H0);
                 std::fill(f.values.begin(), f.values.end(), 0.0);
                 f.values[77] = 1.0;
                 const HydroCheck bad = near_equilibrium_implies_hydro(f, 8.0);
                 return ok && !bad.ok && bad.v_node == 77;
               }});
  c.push_back({"weighted sup norm", [] {
                 const VelocityGrid vg(3, 4.0, 8);
                 DistributionField f(vg, SpaceGrid());
                 bool ok = weighted_sup(f, 8.0) == 0.0;
                 for (std::size_t i = 0; i < vg.size(); ++i)
                   f.values[i] = 1e-2 / bracket_weight(vg.node(i), 8.0);
                 ok = ok && std::abs(weighted_sup(f, 8.0) - 1e-2) < 1e-16;
                 for (std::size_t i = 0; i < vg.size(); ++i)
                   f.values[i] = norm(vg.node(i)) > 1.0 ? 1e-3 : 0.0;
                 return ok && weighted_sup(f, 4.0) < weighted_sup(f, 8.0);
               }});
  c.push_back({"barrier margin", [] {
                 const VelocityGrid vg(2, 4.0, 8);
                 DistributionField f(vg, SpaceGrid(1, 2));
                 const BarrierSpec b{1e-3, 2.0, 8.0};
                 const GWeight g(8.0);
                 double gmin = HUGE_VAL;
                 for (std::size_t i = 0; i < vg.size(); ++i) gmin = std::min(gmin, g(vg.node(i)));
                 const double m0 = barrier_margin(f, 0.0, b, g).margin;
                 for (std::size_t i = 0; i < vg.size(); ++i) f.at(1, i) = b.U(0.3) * g(vg.node(i));
                 return std::abs(m0 - b.delta * gmin) < 1e-20 && m0 > 0.0 &&
                        std::abs(barrier_margin(f, 0.3, b, g).margin) < 1e-18;
               }});
  c.push_back({"good region is empty near the origin", [] {
                 const VelocityGrid vg(2, 6.0, 12);
                 PhysParams p;
                 p.dim = 2;
                 const CollisionModel model(vg, p);
                 const std::vector<double> f(vg.size(), 0.0);
                 const GoodBad gb = good_bad_split(model, f, Vec{2.0, 0.0, 0.0}, GWeight(10.0));
                 return good_bad_scale(10.0) == 0.005 && gb.good_mask_empty && gb.good == 0.0 &&
                        std::abs(gb.bad - gb.total) <= 1e-12 * std::abs(gb.total);
               }});
  c.push_back({"anisotropic distance examples", [] {
                 std::mt19937_64 rng(2);
                 std::uniform_real_distribution<double> u(-3.0, 3.0);
                 bool ok = std::abs(aniso_distance(Vec{1, 0, 0}, Vec{0, 1, 0}) - std::sqrt(2.0)) < 1e-15;
                 for (int k = 0; k < 100 && ok; ++k) {
                   const Vec v{u(rng), u(rng), u(rng)}, w{u(rng), u(rng), u(rng)};
                   ok = aniso_distance(v, w) == aniso_distance(w, v);
                 }
                 return ok;
               }});
  c.push_back({"seminorm: constants and scaling", [] {
                 const VelocityGrid vg(2, 3.0, 12);
                 PhysParams p;
                 p.dim = 2;
                 std::vector<double> g(vg.size()), g2(vg.size());
                 for (std::size_t i = 0; i < vg.size(); ++i) {
                   g[i] = std::exp(-norm_sq(vg.node(i)));
                   g2[i] = 2 * g[i];
                 }
                 const double a = ns_gamma_seminorm_sq(vg, g, p);
                 return ns_gamma_seminorm_sq(vg, std::vector<double>(vg.size(), 3.0), p) == 0.0 &&
                        std::abs(ns_gamma_seminorm_sq(vg, g2, p) - 4 * a) < 1e-12 * a;
               }});
  c.push_back({"cancellation check for the Maxwellian", [] {
                 const VelocityGrid vg(3, 4.0, 8);
                 const CollisionModel model(vg, PhysParams{});
                 const InequalityReport r = lemma_check(model, {}, "cancellation", 6, {});
                 return r.pass && r.fitted_constant < 0.02;
               }});
  c.push_back({"commutator with q = 0 vanishes", [] {
                 const VelocityGrid vg(2, 4.0, 8);
                 PhysParams p;
                 p.dim = 2;
                 const CollisionModel model(vg, p);
                 const Density M{1.0, nullptr, {}, {}};
                 const TestFunction g = [](const Vec& v) { return std::exp(-norm_sq(v - Vec{0.5, 0, 0})); };
                 const TestFunction wg = [g](const Vec& v) { return bracket_weight(v, 0.0) * g(v); };
                 double worst = 0.0;
                 for (std::size_t i = 0; i < vg.size(); i += 7)
                   worst = std::max(worst, std::abs(model.q_s(M, g, vg.node(i)) - model.q_s(M, wg, vg.node(i))));
                 return worst == 0.0;
               }});
  c.push_back({"monitor: zero trajectory and synthetic decay", [] {
                 std::vector<double> t, zero(20, 0.0), y;
                 for (int i = 1; i <= 20; ++i) {
                   t.push_back(i);
                   y.push_back(0.7 * std::pow(double(i), -2.0));
                 }
                 const TrendReport z = equilibration_monitor(t, zero);
                 const TrendReport r = equilibration_monitor(t, y);
                 return z.monotone_fraction == 1.0 && std::abs(r.exponent - 2.0) < 0.1;
               }});
  c.push_back({"homogeneous hard-potential run decays", [] {
                 const VelocityGrid vg(2, 5.0, 12);
                 PhysParams p;
                 p.dim = 2;
                 StepperConfig cfg;
                 cfg.dt = 0.125;
                 HomogeneousSolver solver(vg, p, {}, cfg);
                 PerturbationSpec s;
                 s.epsilon = 5e-2;
                 auto f = project_moments(make_perturbation(s, vg, SpaceGrid()));
                 std::vector<double> t, y;
                 for (int k = 1; k <= 12; ++k) {
                   solver.step(f.slice(0), 0.25);
                   t.push_back(0.25 * k);
                   y.push_back(weighted_sup(f, 8.0));
                 }
                 return equilibration_monitor(t, y).exponent > 0.0;
               }});
  c.push_back({"splitting: N = 2 sequence, flat data, zero resume", [] {
                 const VelocityGrid vg(2, 4.0, 8);
                 HomogeneousSolver solver(vg, PhysParams{1.0, 0.5, 1.0, 2}, {}, {});
                 const SpaceGrid xg(1, 4);
                 const DistributionField zero(vg, xg);
                 const RunResult z = SplittingRunner(solver, {0.2, 2}).run(zero);
                 bool ok = std::all_of(z.state.field.values.begin(), z.state.field.values.end(),
                                       [](double x) { return x == 0.0; });
                 ok = ok && z.rows.size() == 4 && z.rows[1].kind == "collision" &&
                      z.rows[2].kind == "mollify" && z.rows[3].kind == "transport";
                 PerturbationSpec s;
                 const auto one = make_perturbation(s, vg, SpaceGrid());
                 DistributionField flat(vg, xg);
                 for (std::size_t ix = 0; ix < xg.size(); ++ix)
                   for (std::size_t iv = 0; iv < vg.size(); ++iv) flat.at(ix, iv) = one.values[iv];
                 const SplittingRunner runner(solver, {0.4, 4});
                 const RunResult rf = runner.run(flat);
                 for (const auto& j : rf.jumps) ok = ok && j.jump < 1e-15;
                 const RunResult same = runner.resume(rf.state);
                 ok = ok && same.state.field.values == rf.state.field.values;
                 // A resumed series starts where the stored one stopped.
                 const RunResult half = SplittingRunner(solver, {0.2, 2}).run(flat);
                 const RunResult rest = runner.resume(half.state);
                 return ok && rest.rows.front().position == half.rows.back().position &&
                        rest.rows[1].position == half.rows.back().position + 1;
               }});
}

}  // namespace

bool run_selftest(std::ostream& out) {
  int failed = 0;
  for (const auto& chk : checks()) {
    bool ok = false;
    std::string why;
    try {
      ok = chk.fn();
    } catch (const std::exception& e) {
      why = std::string(" (") + e.what() + ")";
    }
    out << (ok ? "pass  " : "FAIL  ") << chk.name << why << "\n";
    if (!ok) ++failed;
  }
  out << (failed == 0 ? "selftest passed" : std::to_string(failed) + " selftest checks failed")
      << std::endl;
  return failed == 0;
}
