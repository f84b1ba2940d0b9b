#include "ssg/error.hpp"
#include "ssg/imaging.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <cmath>

namespace ssg {

SimulatedData simulate_data(const ImageGrid &x_true, const BlurOperator &op, double I_max, double b,
                            std::uint64_t seed) {
  if (x_true.side() != op.side()) throw DimensionError("simulate_data: image and operator sizes differ");
  if (!(I_max > 0.0) || !std::isfinite(I_max)) throw DomainError("simulate_data: I_max must be > 0");
  if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("simulate_data: background must be >= 0");
  if (x_true.min() < 0.0) throw DomainError("simulate_data: x_true must be nonnegative");
  if (!(x_true.max() > 0.0)) throw DomainError("simulate_data: x_true is identically zero");

  SimulatedData out;
  out.scale = I_max;
  out.background = b / out.scale;

  const Vector blurred = op.apply(x_true.view());
  // boost's Poisson sampler (inversion below mean 10, PTRS above) is fully
  // specified, so a seed reproduces the same counts on every platform.
  boost::random::mt19937_64 rng(seed);
  Vector g(blurred.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double mean = std::max(0.0, out.scale * blurred[i]) + b;
    double count = 0.0;
    if (mean > 0.0) {
      boost::random::poisson_distribution<std::int64_t, double> pois(mean);
      count = static_cast<double>(pois(rng));
    }
    g[i] = count / out.scale;
  }
  out.g = ImageGrid(x_true.side(), std::move(g));
  return out;
}

} // namespace ssg
