#include "ssg/error.hpp"
#include "ssg/imaging.hpp"

#include <algorithm>
#include <cmath>

namespace ssg {

ImageGrid::ImageGrid(std::size_t N, double fill) : N_(N), data_(N * N, fill) {}

ImageGrid::ImageGrid(std::size_t N, Vector data) : N_(N), data_(std::move(data)) {
  if (data_.size() != N * N) throw DimensionError("ImageGrid: data size is not N*N");
}

double ImageGrid::min() const { return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end()); }
double ImageGrid::max() const { return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end()); }

std::size_t side_of(std::size_t n) {
  const auto N = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (N * N != n || N < 2) throw DimensionError("image vector length " + std::to_string(n) + " is not N*N with N >= 2");
  return N;
}

Vector grad_op(std::span<const double> x) {
  const std::size_t N = side_of(x.size());
  Vector y(2 * x.size());
  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t jn = j + 1 == N ? 0 : j + 1;
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t in = i + 1 == N ? 0 : i + 1;
      const std::size_t l = i + N * j;
      y[2 * l] = x[in + N * j] - x[l];
      y[2 * l + 1] = x[i + N * jn] - x[l];
    }
  }
  return y;
}

Vector div_op(std::span<const double> y) {
  if (y.size() % 2 != 0) throw DimensionError("div_op: dual vector length must be even");
  const std::size_t N = side_of(y.size() / 2);
  Vector x(N * N);
  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t jp = j == 0 ? N - 1 : j - 1;
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t ip = i == 0 ? N - 1 : i - 1;
      const std::size_t l = i + N * j;
      x[l] = -y[2 * l] + y[2 * (ip + N * j)] - y[2 * l + 1] + y[2 * (i + N * jp) + 1];
    }
  }
  return x;
}

double tv_value(std::span<const double> x) {
  const Vector d = grad_op(x);
  double tv = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) tv += std::hypot(d[2 * l], d[2 * l + 1]);
  return tv;
}

} // namespace ssg
