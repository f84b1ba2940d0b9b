#pragma once

#include "ssg/metric.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>

namespace ssg {

/// N x N image. Pixel (i, j), 0-based, lives at linear index i + N j, so
/// i runs fastest; j is the row when the image is displayed or written out.
class ImageGrid {
public:
  ImageGrid() = default;
  explicit ImageGrid(std::size_t N, double fill = 0.0);
  ImageGrid(std::size_t N, Vector data);

  std::size_t side() const { return N_; }
  std::size_t size() const { return data_.size(); }
  double &at(std::size_t i, std::size_t j) { return data_[i + N_ * j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i + N_ * j]; }
  std::span<const double> view() const { return data_; }
  std::span<double> view() { return data_; }
  const Vector &data() const { return data_; }
  Vector &data() { return data_; }

  double min() const;
  double max() const;

private:
  std::size_t N_ = 0;
  Vector data_;
};

/// Side length of an image stored as a flat vector; throws if n is not a
/// perfect square >= 4.
std::size_t side_of(std::size_t n);

/// Periodic convolution with a nonnegative point spread function, applied
/// through real-to-complex FFTs. The kernel is normalized to unit sum,
/// which gives H e = H^T e = e.
class BlurOperator {
public:
  /// `psf` is an m x m kernel (m odd) stored with the same indexing as
  /// ImageGrid; its centre pixel (m/2, m/2) maps to offset (0, 0).
  BlurOperator(const ImageGrid &psf, std::size_t N);
  ~BlurOperator();
  BlurOperator(const BlurOperator &) = delete;
  BlurOperator &operator=(const BlurOperator &) = delete;

  std::size_t side() const { return N_; }
  /// Kernel as embedded in the N x N torus (after normalization).
  const ImageGrid &embedded_kernel() const { return kernel_; }

  Vector apply(std::span<const double> x) const;
  Vector apply_adjoint(std::span<const double> x) const;

private:
  Vector filter(std::span<const double> x, bool adjoint) const;

  struct Plans;
  std::size_t N_;
  ImageGrid kernel_;
  std::unique_ptr<Plans> plans_;
  Vector spectrum_; // interleaved (re, im), N x (N/2+1)
};

/// Gaussian kernel truncated to m x m (m odd), not normalized.
ImageGrid gaussian_psf(std::size_t m, double sigma);
/// 1x1 unit kernel: H = I.
ImageGrid delta_psf();

inline Vector apply_H(const BlurOperator &op, std::span<const double> x) { return op.apply(x); }
inline Vector apply_Ht(const BlurOperator &op, std::span<const double> x) { return op.apply_adjoint(x); }

/// Forward differences with periodic wrap:
/// block l = (x_{i+1,j} - x_{i,j}, x_{i,j+1} - x_{i,j}), stored at [2l, 2l+1].
Vector grad_op(std::span<const double> x);
/// A^T y for the operator above (the negative discrete divergence).
Vector div_op(std::span<const double> y);
/// Isotropic total variation: sum of block norms of grad_op(x).
double tv_value(std::span<const double> x);

/// Poisson data-fidelity term with its blur and scalar background.
struct KLData {
  Vector g;
  std::shared_ptr<const BlurOperator> H;
  double b = 0.0;
};

/// Checks sizes, g >= 0, b >= 0, and g > 0 when b = 0.
void validate(const KLData &d);

/// sum_i g_i log(g_i / (Hx+b)_i) + (Hx)_i + b - g_i, with 0 log 0 = 0.
/// Throws DomainError if (Hx+b)_i <= 0 while g_i > 0.
double kl_value(std::span<const double> x, const KLData &d);

/// grad = H^T e - H^T v, v_i = g_i / (Hx+b)_i. Both parts are returned.
struct KLGradient {
  Vector grad;
  Vector Ht_e;
  Vector Ht_v;
};
KLGradient kl_grad(std::span<const double> x, const KLData &d);

struct SimulatedData {
  ImageGrid g;
  /// Count-domain multiplier: counts = Poisson(scale * H x_true + b).
  double scale = 1.0;
  /// Background in the data domain, b / scale; the value to use in KLData.
  double background = 0.0;
};

/// Multiply x_true by the intensity factor I_max, blur, add b, draw Poisson
/// counts with a seeded mt19937_64, and divide by I_max again.
SimulatedData simulate_data(const ImageGrid &x_true, const BlurOperator &op, double I_max, double b,
                            std::uint64_t seed);

enum class PhantomKind { Disks, Blocks, Ramp };

PhantomKind parse_phantom_kind(const std::string &s);
std::string to_string(PhantomKind k);

/// Piecewise-constant test image with values exactly spanning [lo, hi].
///  - disks: body disk with brighter and darker inclusions (head-phantom-like)
///  - blocks: three rectangles of different levels on a zero background
///  - ramp: four vertical bands stepping from lo to hi
ImageGrid synth_phantom(PhantomKind kind, std::size_t N, double lo, double hi);

} // namespace ssg
