#include "bsplit/initial_data.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "bsplit/moments.hpp"

namespace bsplit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Portable uniform draws: the standard distributions are not specified
// bit-for-bit across library implementations.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : gen_(seed) {}
  double operator()(double lo = 0.0, double hi = 1.0) {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 gen_;
};

// One term c X(x) psi(v).
struct Mode {
  double weight = 1.0;
  std::array<double, 3> k_x{0, 0, 0};
  double phase_x = 0.0;
  Vec k_a{0, 0, 0}, k_b{0, 0, 0};
  double phase_a = 0.0, phase_b = 0.0;
};

double maxwell_peak(const VelocityGrid& g, double q) {
  double peak = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec v = g.node(i);
    peak = std::max(peak, maxwellian(v, g.dim()) * bracket_weight(v, q));
  }
  return peak;
}

Vec random_wave(Uniform& u, int dim, double lo, double hi) {
  Vec k{0, 0, 0};
  for (int a = 0; a < dim; ++a) k[a] = u(lo, hi) * (u() < 0.5 ? -1.0 : 1.0);
  return k;
}

}  // namespace

std::string to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::separable_smooth: return "separable-smooth";
    case PerturbationKind::random_fourier: return "random-fourier";
    case PerturbationKind::rough_indicator: return "rough-indicator";
  }
  return "unknown";
}

PerturbationKind parse_perturbation_kind(const std::string& name) {
  if (name == "separable-smooth") return PerturbationKind::separable_smooth;
  if (name == "random-fourier") return PerturbationKind::random_fourier;
  if (name == "rough-indicator") return PerturbationKind::rough_indicator;
  throw Error("unknown perturbation kind '" + name + "'");
}

void PerturbationSpec::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw Error("perturbation amplitude must be >= 0");
  if (!(q >= 0.0)) throw Error("perturbation decay exponent must be >= 0");
  if (spatial_modes < 1) throw Error("spatial_modes must be at least 1");
}

EnvelopeCheck validate_envelope(const DistributionField& field, double eps, double q) {
  EnvelopeCheck out;
  for (std::size_t i = 0; i < field.vgrid.size(); ++i) {
    const double w = bracket_weight(field.vgrid.node(i), q);
    for (std::size_t ix = 0; ix < field.xgrid.size(); ++ix) {
      const double val = w * std::abs(field.at(ix, i));
      const double rel = eps > 0.0 ? val / eps : (val > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      if (rel > out.worst || (ix == 0 && i == 0)) {
        out.worst = rel;
        out.x_node = ix;
        out.v_node = i;
      }
      if (!(val < eps)) out.ok = out.ok && val == 0.0 && eps == 0.0;
    }
  }
  return out;
}

DistributionField make_perturbation(const PerturbationSpec& spec, const VelocityGrid& vgrid,
                                    const SpaceGrid& xgrid) {
  spec.validate();
  DistributionField field(vgrid, xgrid);
  if (spec.epsilon == 0.0) return field;
  const int dim = vgrid.dim();
  const int sdims = xgrid.spatial_dims();
  Uniform u(spec.seed);
  std::vector<Mode> modes;
  if (spec.kind == PerturbationKind::random_fourier) {
    double total = 0.0;
    for (int m = 0; m < spec.spatial_modes; ++m) {
      Mode md;
      md.weight = u(0.2, 1.0);
      md.k_x[0] = m + 1;
      for (int a = 1; a < sdims; ++a) md.k_x[a] = std::floor(u(0.0, m + 2.0));
      md.phase_x = u(0.0, kTwoPi);
      md.k_a = random_wave(u, dim, 0.3, 1.2);
      md.k_b = random_wave(u, dim, 0.3, 1.2);
      md.phase_a = u(0.0, kTwoPi);
      md.phase_b = u(0.0, kTwoPi);
      total += md.weight;
      modes.push_back(md);
    }
    for (Mode& md : modes) md.weight /= total;
  } else {
    Mode md;
    md.k_x[0] = spec.spatial_modes;
    md.phase_x = u(0.0, kTwoPi);
    md.k_a = random_wave(u, dim, 0.4, 0.9);
    md.k_b = random_wave(u, dim, 0.4, 0.9);
    md.phase_a = u(0.0, kTwoPi);
    md.phase_b = u(0.0, kTwoPi);
    modes.push_back(md);
  }
  const bool rough = spec.kind == PerturbationKind::rough_indicator;
  // Indicator geometry for the rough kind: balls well inside |v| < R.
  const double r_ball = std::min(1.5, 0.3 * vgrid.radius());
  const Vec c_a{0.5 * r_ball, 0.0, 0.0};
  const Vec c_b{-0.7 * r_ball, 0.4 * r_ball, 0.0};

  const double peak = maxwell_peak(vgrid, spec.q);
  const std::size_t nv = vgrid.size();
  for (std::size_t iv = 0; iv < nv; ++iv) {
    const Vec v = vgrid.node(iv);
    const double w = std::pow(1.0 + norm_sq(v), -0.5 * spec.q);
    const double mu = maxwellian(v, dim) / peak;
    for (std::size_t ix = 0; ix < xgrid.size(); ++ix) {
      const auto x = xgrid.position(ix);
      double val = 0.0;
      for (const Mode& md : modes) {
        const double kx = md.k_x[0] * x[0] + md.k_x[1] * x[1] + md.k_x[2] * x[2];
        double X, a, b;
        if (rough) {
          X = sdims == 0 ? 1.0 : (std::cos(kTwoPi * kx + md.phase_x) > 0.0 ? 1.0 : 0.0);
          a = norm_sq(v - c_a) < r_ball * r_ball ? 1.0 : 0.0;
          b = norm_sq(v - c_b) < r_ball * r_ball ? -1.0 : (norm(v) < 0.5 * r_ball ? 1.0 : 0.0);
        } else {
          X = sdims == 0 ? 1.0 : 0.5 * (1.0 + std::cos(kTwoPi * kx + md.phase_x));
          a = 0.5 * (1.0 + std::sin(dot(md.k_a, v) + md.phase_a));
          b = std::cos(dot(md.k_b, v) + md.phase_b);
        }
        val += md.weight * X * (0.45 * a * w + 0.45 * b * mu);
      }
      field.at(ix, iv) = spec.epsilon * val;
    }
  }
  const EnvelopeCheck env = validate_envelope(field, spec.epsilon, spec.q);
  if (!env.ok) {
    std::ostringstream msg;
    msg << "internal error: perturbation leaves the envelope at v node " << env.v_node;
    throw Error(msg.str());
  }
  if (field.min_density() < 0.0)
    throw Error("perturbation amplitude too large: M + f_0 becomes negative");
  return field;
}

DistributionField project_moments(const DistributionField& field) {
  DistributionField out = field;
  project_field_moments(out);
  return out;
}

}  // namespace bsplit
