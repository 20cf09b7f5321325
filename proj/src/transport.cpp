#include "bsplit/transport.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>

namespace bsplit {

namespace {

// FFTW planning is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

int wave_number(int j, int n) {
  if (2 * j < n) return j;
  if (2 * j > n) return j - n;
  return 0;  // Nyquist
}

}  // namespace

DistributionField transport_step(const DistributionField& field, double tau) {
  if (!(tau >= 0.0)) throw Error("transport time must be nonnegative");
  const int dims = field.xgrid.spatial_dims();
  if (dims == 0 || tau == 0.0) return field;
  if (dims > field.vgrid.dim()) throw Error("spatial_dims may not exceed the velocity dimension");
  const int n = field.xgrid.n_per_axis();
  const std::size_t nv = field.vgrid.size();
  const std::size_t nx = field.xgrid.size();
  const std::size_t last = static_cast<std::size_t>(n / 2 + 1);
  const std::size_t nk = nx / n * last;

  std::vector<int> shape(dims, n);
  std::vector<double> real(field.values);
  std::vector<std::complex<double>> spec(nk * nv);
  auto* cspec = reinterpret_cast<fftw_complex*>(spec.data());
  Plan forward, backward;
  {
    std::lock_guard lock(planner_mutex());
    // Transform all velocity nodes at once: stride nv between spatial points.
    forward.reset(fftw_plan_many_dft_r2c(dims, shape.data(), static_cast<int>(nv), real.data(),
                                         nullptr, static_cast<int>(nv), 1, cspec, nullptr,
                                         static_cast<int>(nv), 1, FFTW_ESTIMATE));
    backward.reset(fftw_plan_many_dft_c2r(dims, shape.data(), static_cast<int>(nv), cspec,
                                          nullptr, static_cast<int>(nv), 1, real.data(), nullptr,
                                          static_cast<int>(nv), 1, FFTW_ESTIMATE));
  }
  if (!forward || !backward) throw Error("FFT planning failed");
  fftw_execute_dft_r2c(forward.get(), real.data(), cspec);

  std::vector<Vec> v = field.vgrid.nodes();
  const double scale = 1.0 / static_cast<double>(nx);
  const double two_pi = 2.0 * std::numbers::pi;
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < nk; ++c) {
    // Unravel the half-spectrum index: last axis has n/2 + 1 entries.
    std::size_t rest = c;
    int k[3] = {0, 0, 0};
    k[dims - 1] = wave_number(static_cast<int>(rest % last), n);
    rest /= last;
    for (int a = dims - 2; a >= 0; --a) {
      k[a] = wave_number(static_cast<int>(rest % n), n);
      rest /= n;
    }
    if (k[0] == 0 && k[1] == 0 && k[2] == 0) {
      for (std::size_t iv = 0; iv < nv; ++iv) spec[c * nv + iv] *= scale;
      continue;
    }
    for (std::size_t iv = 0; iv < nv; ++iv) {
      double kv = 0.0;
      for (int a = 0; a < dims; ++a) kv += k[a] * v[iv][a];
      const double theta = -two_pi * 2.0 * tau * kv;
      spec[c * nv + iv] *= std::polar(scale, theta);
    }
  }
  fftw_execute_dft_c2r(backward.get(), cspec, real.data());
  DistributionField out(field.vgrid, field.xgrid, field.time);
  out.values = std::move(real);
  return out;
}

void MollifierSpec::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error("mollifier scale must be positive");
}

MollifierKernel mollifier_kernel(const SpaceGrid& grid, const MollifierSpec& spec) {
  spec.validate();
  MollifierKernel k;
  const int dims = grid.spatial_dims();
  const double dx = grid.spacing();
  const int reach = static_cast<int>(std::floor(spec.h / dx));
  const int lo[3] = {-reach, dims > 1 ? -reach : 0, dims > 2 ? -reach : 0};
  const int hi[3] = {reach, dims > 1 ? reach : 0, dims > 2 ? reach : 0};
  double total = 0.0;
  for (int a = lo[0]; a <= hi[0]; ++a)
    for (int b = lo[1]; b <= hi[1]; ++b)
      for (int c = lo[2]; c <= hi[2]; ++c) {
        const double r2 = (double(a) * a + double(b) * b + double(c) * c) * dx * dx /
                          (spec.h * spec.h);
        if (r2 >= 1.0) continue;
        const double w = std::exp(-1.0 / (1.0 - r2));
        k.offsets.push_back({a, b, c});
        k.weights.push_back(w);
        total += w;
      }
  for (double& w : k.weights) w /= total;
  return k;
}

DistributionField mollify(const DistributionField& field, const MollifierSpec& spec) {
  spec.validate();
  if (field.xgrid.spatial_dims() == 0) return field;
  const MollifierKernel k = mollifier_kernel(field.xgrid, spec);
  const std::size_t nv = field.vgrid.size();
  const std::size_t nx = field.xgrid.size();
  DistributionField out(field.vgrid, field.xgrid, field.time);
#pragma omp parallel for schedule(static)
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const auto idx = field.xgrid.index(ix);
    double* dst = out.values.data() + ix * nv;
    for (std::size_t m = 0; m < k.offsets.size(); ++m) {
      const auto& o = k.offsets[m];
      const std::size_t src =
          field.xgrid.linear({idx[0] - o[0], idx[1] - o[1], idx[2] - o[2]});
      const double* s = field.values.data() + src * nv;
      const double w = k.weights[m];
      for (std::size_t iv = 0; iv < nv; ++iv) dst[iv] += w * s[iv];
    }
  }
  return out;
}

double mollification_jump(const DistributionField& field, const DistributionField& mollified) {
  if (!field.same_grids(mollified)) throw Error("mollification jump needs matching grids");
  double out = 0.0;
  for (std::size_t i = 0; i < field.values.size(); ++i)
    out = std::max(out, std::abs(field.values[i] - mollified.values[i]));
  return out;
}

bool linf_nonexpansive_check(const DistributionField& field, const MollifierSpec& spec) {
  const DistributionField m = mollify(field, spec);
  const std::size_t nv = field.vgrid.size();
  for (std::size_t iv = 0; iv < nv; ++iv) {
    double before = 0.0, after = 0.0;
    for (std::size_t ix = 0; ix < field.xgrid.size(); ++ix) {
      before = std::max(before, std::abs(field.at(ix, iv)));
      after = std::max(after, std::abs(m.at(ix, iv)));
    }
    if (after > before * (1.0 + 1e-14)) return false;
  }
  return true;
}

}  // namespace bsplit
