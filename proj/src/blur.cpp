#include "ssg/error.hpp"
#include "ssg/imaging.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

namespace ssg {

namespace {

// FFTW planning is not thread-safe; execution on new arrays is.
std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}

} // namespace

struct BlurOperator::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Plans(std::size_t N) {
    const int n = static_cast<int>(N);
    const std::size_t nc = N * (N / 2 + 1);
    std::lock_guard lock(planner_mutex());
    double *in = fftw_alloc_real(N * N);
    fftw_complex *out = fftw_alloc_complex(nc);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward = fftw_plan_dft_r2c_2d(n, n, in, out, flags);
    backward = fftw_plan_dft_c2r_2d(n, n, out, in, flags);
    fftw_free(in);
    fftw_free(out);
    if (!forward || !backward) throw std::runtime_error("BlurOperator: FFTW planning failed");
  }
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

BlurOperator::BlurOperator(const ImageGrid &psf, std::size_t N) : N_(N), kernel_(N) {
  if (N < 2) throw DimensionError("BlurOperator: N must be >= 2");
  const std::size_t m = psf.side();
  if (m == 0 || m % 2 == 0) throw DimensionError("BlurOperator: psf side must be odd");
  double total = 0.0;
  for (double v : psf.data()) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("BlurOperator: psf entries must be finite and >= 0");
    total += v;
  }
  if (!(total > 0.0)) throw DomainError("BlurOperator: psf sums to zero");

  // Centre the kernel at offset (0,0) on the N x N torus; entries that
  // wrap onto the same offset accumulate.
  const auto c = static_cast<long>(m / 2);
  const auto n = static_cast<long>(N);
  for (std::size_t b = 0; b < m; ++b) {
    for (std::size_t a = 0; a < m; ++a) {
      const long i = ((static_cast<long>(a) - c) % n + n) % n;
      const long j = ((static_cast<long>(b) - c) % n + n) % n;
      kernel_.at(i, j) += psf.at(a, b) / total;
    }
  }

  plans_ = std::make_unique<Plans>(N);
  const std::size_t nc = N * (N / 2 + 1);
  spectrum_.assign(2 * nc, 0.0);
  Vector in = kernel_.data();
  fftw_execute_dft_r2c(plans_->forward, in.data(), reinterpret_cast<fftw_complex *>(spectrum_.data()));
}

BlurOperator::~BlurOperator() = default;

Vector BlurOperator::filter(std::span<const double> x, bool adjoint) const {
  if (x.size() != N_ * N_) throw DimensionError("BlurOperator: image size does not match the operator");
  const std::size_t nc = N_ * (N_ / 2 + 1);
  Vector in(x.begin(), x.end());
  std::vector<std::complex<double>> spec(nc);
  auto *sp = reinterpret_cast<fftw_complex *>(spec.data());
  fftw_execute_dft_r2c(plans_->forward, in.data(), sp);
  const auto *h = reinterpret_cast<const std::complex<double> *>(spectrum_.data());
  for (std::size_t q = 0; q < nc; ++q) spec[q] *= adjoint ? std::conj(h[q]) : h[q];
  Vector out(N_ * N_);
  fftw_execute_dft_c2r(plans_->backward, sp, out.data());
  const double inv = 1.0 / static_cast<double>(N_ * N_);
  for (double &v : out) v *= inv;
  return out;
}

Vector BlurOperator::apply(std::span<const double> x) const { return filter(x, false); }
Vector BlurOperator::apply_adjoint(std::span<const double> x) const { return filter(x, true); }

ImageGrid gaussian_psf(std::size_t m, double sigma) {
  if (m == 0 || m % 2 == 0) throw DimensionError("gaussian_psf: side must be odd");
  if (!(sigma > 0.0)) throw DomainError("gaussian_psf: sigma must be > 0");
  ImageGrid k(m);
  const double c = static_cast<double>(m / 2);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      const double di = static_cast<double>(i) - c, dj = static_cast<double>(j) - c;
      k.at(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
    }
  }
  return k;
}

ImageGrid delta_psf() { return ImageGrid(1, 1.0); }

} // namespace ssg
