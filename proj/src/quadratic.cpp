#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <numbers>

#include "bsplit/collision.hpp"

namespace bsplit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMaxKernelBytes = std::size_t{3} << 30;

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (!p) throw Error("FFT buffer allocation failed");
  return FftwBuffer<T>(p);
}

// Cubic interpolation of f at node + shift, with shift a fixed offset in units
// of the spacing. Nodes outside the grid count as zero, and so does any point
// beyond the ghost layer.
struct CubicShift {
  int base[3] = {0, 0, 0};
  double w[3][4] = {{1, 0, 0, 0}, {1, 0, 0, 0}, {1, 0, 0, 0}};
  double x[3] = {0, 0, 0};

  CubicShift(const Vec& shift, int dim) {
    for (int a = 0; a < dim; ++a) {
      x[a] = shift[a];
      const double fl = std::floor(shift[a]);
      base[a] = static_cast<int>(fl) - 1;
      detail::cubic_weights(shift[a] - fl, w[a]);
    }
  }

  double apply(const double* f, const std::array<int, 3>& idx, int n, int dim) const {
    for (int a = 0; a < dim; ++a) {
      const double pos = idx[a] + x[a];
      if (!(pos > -1.0 && pos < n)) return 0.0;
    }
    double acc = 0.0;
    const std::size_t sn = static_cast<std::size_t>(n);
    for (int p = 0; p < 4; ++p) {
      const int i = idx[0] + base[0] + p;
      if (i < 0 || i >= n) continue;
      for (int q = 0; q < 4; ++q) {
        const int j = idx[1] + base[1] + q;
        if (j < 0 || j >= n) continue;
        if (dim == 2) {
          acc += w[0][p] * w[1][q] * f[i * sn + j];
          continue;
        }
        const double* row = f + (i * sn + j) * sn;
        double line = 0.0;
        for (int r = 0; r < 4; ++r) {
          const int k = idx[2] + base[2] + r;
          if (k >= 0 && k < n) line += w[2][r] * row[k];
        }
        acc += w[0][p] * w[1][q] * line;
      }
    }
    return acc;
  }
};

}  // namespace

struct QuadraticTerm::Impl {
  const CollisionModel& model;
  int dim;
  int n;
  int L;
  std::size_t n_real = 1;
  std::size_t n_complex = 1;
  DirectionSet dirs;
  std::vector<std::size_t> rings;       // ring indices with a nonzero kernel
  std::vector<double> ring_factor;      // weight_k t_k^{d-2}
  std::vector<std::complex<double>> kernels;  // [direction][ring] spectra
  std::vector<CubicShift> shifts;       // [direction][j][+-]
  GridConvolution conv;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Impl(const CollisionModel& m)
      : model(m),
        dim(m.grid().dim()),
        n(m.grid().n_per_axis()),
        L(2 * m.grid().n_per_axis()),
        // A 2D half circle needs more than the 3D polar count.
        dirs(DirectionSet::half_sphere(
            m.grid().dim(), (m.grid().dim() == 2 ? 8 : 1) * m.spec().n_directions)),
        conv(m.grid(), m.params().gamma) {
    const VelocityGrid& grid = m.grid();
    const RingRadii& rr = m.rings();
    const double h = grid.spacing();
    for (int a = 0; a < dim; ++a) n_real *= static_cast<std::size_t>(L);
    n_complex = n_real / L * (L / 2 + 1);
    // Rings wider than the grid diagonal plus one tent never meet two nodes.
    const double reach = (std::sqrt(static_cast<double>(dim)) * n + 1.0) * h;
    for (std::size_t k = 0; k < rr.size(); ++k) {
      if (rr.t[k] > reach) continue;
      rings.push_back(k);
      ring_factor.push_back(rr.weight[k] * (dim == 3 ? rr.t[k] : 1.0));
    }
    const std::size_t bytes =
        dirs.size() * rings.size() * n_complex * sizeof(std::complex<double>);
    if (bytes > kMaxKernelBytes) throw Error("quadratic collision kernels exceed the memory cap");

    auto real = fftw_buffer<double>(n_real);
    auto spec = fftw_buffer<fftw_complex>(n_complex);
    std::vector<int> shape(dim, L);
    forward = fftw_plan_dft_r2c(dim, shape.data(), real.get(), spec.get(), FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r(dim, shape.data(), spec.get(), real.get(), FFTW_ESTIMATE);
    if (!forward || !backward) throw Error("FFT planning failed");

    kernels.resize(dirs.size() * rings.size() * n_complex);
    const double dw = m.hyperplane_spacing();
    for (std::size_t di = 0; di < dirs.size(); ++di) {
      const Direction& dir = dirs[di];
      for (std::size_t r = 0; r < rings.size(); ++r) {
        std::fill(real.get(), real.get() + n_real, 0.0);
        const double t = rr.t[rings[r]];
        auto deposit = [&](const Vec& p, double w) { deposit_tent(real.get(), p, h, w); };
        if (dim == 2) {
          deposit(t * dir.e1, 1.0);
          deposit(-t * dir.e1, 1.0);
        } else {
          const int mm = std::max(8, static_cast<int>(std::ceil(kTwoPi * t / dw)));
          const double dphi = kTwoPi / mm;
          for (int i = 0; i < mm; ++i) {
            const double phi = (i + 0.5) * dphi;
            deposit(t * std::cos(phi) * dir.e1 + t * std::sin(phi) * dir.e2, dphi);
          }
        }
        fftw_execute_dft_r2c(forward, real.get(), spec.get());
        auto* dst = kernels.data() + (di * rings.size() + r) * n_complex;
        for (std::size_t c = 0; c < n_complex; ++c) dst[c] = {spec[c][0], spec[c][1]};
      }
      for (std::size_t j = 0; j < m.radial().size(); ++j) {
        const Vec step = (m.radial().rho[j] / h) * dir.sigma;
        shifts.emplace_back(step, dim);
        shifts.emplace_back(-1.0 * step, dim);
      }
    }
  }

  ~Impl() {
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }

  // Adds w times the multilinear tent of a sample at offset p to the circular
  // array indexed by -delta, so that a convolution with f yields
  // sum_m f[m] kernel(m - i).
  void deposit_tent(double* buf, const Vec& p, double h, double w) const {
    int lo[3] = {0, 0, 0};
    double wt[3][2] = {{1, 0}, {1, 0}, {1, 0}};
    for (int a = 0; a < dim; ++a) {
      const double x = p[a] / h;
      const double fl = std::floor(x);
      lo[a] = static_cast<int>(fl);
      wt[a][0] = 1.0 - (x - fl);
      wt[a][1] = x - fl;
    }
    const int taps2 = dim == 3 ? 2 : 1;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < taps2; ++k) {
          const int d[3] = {lo[0] + i, lo[1] + j, dim == 3 ? lo[2] + k : 0};
          bool inside = true;
          std::size_t idx = 0;
          for (int a = 0; a < dim; ++a) {
            if (std::abs(d[a]) > n - 1) inside = false;
            idx = idx * L + static_cast<std::size_t>(((-d[a]) % L + L) % L);
          }
          if (!inside) continue;
          buf[idx] += w * wt[0][i] * wt[1][j] * (dim == 3 ? wt[2][k] : 1.0);
        }
  }

  std::size_t padded_index(const std::array<int, 3>& idx) const {
    std::size_t out = 0;
    for (int a = 0; a < dim; ++a) out = out * L + static_cast<std::size_t>(idx[a]);
    return out;
  }

  void evaluate(std::span<const double> f, std::span<double> out) const {
    const VelocityGrid& grid = model.grid();
    const std::size_t nv = grid.size();
    const std::size_t nr = model.radial().size();
    const std::size_t nk = rings.size();
    const RingRadii& rr = model.rings();
    std::vector<std::array<int, 3>> index(nv);
    std::vector<std::size_t> padded(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      index[i] = grid.index(i);
      padded[i] = padded_index(index[i]);
    }

    auto real = fftw_buffer<double>(n_real);
    auto fhat = fftw_buffer<fftw_complex>(n_complex);
    auto prod = fftw_buffer<fftw_complex>(n_complex);
    std::fill(real.get(), real.get() + n_real, 0.0);
    for (std::size_t i = 0; i < nv; ++i) real[padded[i]] = f[i];
    fftw_execute_dft_r2c(forward, real.get(), fhat.get());

    std::vector<double> P(nk * nv), acc(nv, 0.0), g(nr), E(nk);
    const double scale = 1.0 / static_cast<double>(n_real);
    for (std::size_t di = 0; di < dirs.size(); ++di) {
      for (std::size_t r = 0; r < nk; ++r) {
        const auto* K = kernels.data() + (di * nk + r) * n_complex;
        for (std::size_t c = 0; c < n_complex; ++c) {
          const std::complex<double> z = std::complex<double>(fhat[c][0], fhat[c][1]) * K[c];
          prod[c][0] = z.real();
          prod[c][1] = z.imag();
        }
        fftw_execute_dft_c2r(backward, prod.get(), real.get());
        for (std::size_t i = 0; i < nv; ++i) P[r * nv + i] = scale * real[padded[i]];
      }
      const CubicShift* sh = shifts.data() + di * nr * 2;
      for (std::size_t i = 0; i < nv; ++i) {
        const double fv = f[i];
        bool any = false;
        for (std::size_t j = 0; j < nr; ++j) {
          const double s = sh[2 * j].apply(f.data(), index[i], n, dim) +
                           sh[2 * j + 1].apply(f.data(), index[i], n, dim) - 2.0 * fv;
          g[j] = model.radial_coefficient(j) * s;
          any = any || g[j] != 0.0;
        }
        if (!any) continue;
        double sum = 0.0;
        for (std::size_t r = 0; r < nk; ++r) {
          const std::size_t k = rings[r];
          double e = 0.0;
          for (std::size_t j = 0; j < nr && rr.first_ring[j] <= static_cast<int>(k); ++j)
            e += g[j] * model.ring_power(k, j);
          sum += ring_factor[r] * e * P[r * nv + i];
        }
        acc[i] += dirs[di].weight * sum;
      }
    }
    std::vector<double> cf(nv);
    conv.apply(f, cf);
    const double C = model.cancellation().value;
    for (std::size_t i = 0; i < nv; ++i)
      out[i] = 2.0 * (model.kernel_prefactor() * acc[i] + C * cf[i] * f[i]);
  }
};

QuadraticTerm::QuadraticTerm(const CollisionModel& model) : impl_(std::make_unique<Impl>(model)) {}

QuadraticTerm::~QuadraticTerm() = default;

void QuadraticTerm::operator()(std::span<const double> f, std::span<double> out) const {
  const std::size_t nv = impl_->model.grid().size();
  if (f.size() != nv || out.size() != nv) throw Error("collision slice size mismatch");
  impl_->evaluate(f, out);
}

}  // namespace bsplit
