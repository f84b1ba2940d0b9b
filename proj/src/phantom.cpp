#include "ssg/error.hpp"
#include "ssg/imaging.hpp"

#include <cmath>

namespace ssg {

PhantomKind parse_phantom_kind(const std::string &s) {
  if (s == "disks") return PhantomKind::Disks;
  if (s == "blocks") return PhantomKind::Blocks;
  if (s == "ramp") return PhantomKind::Ramp;
  throw ConfigError("unknown phantom kind '" + s + "' (expected disks, blocks or ramp)");
}

std::string to_string(PhantomKind k) {
  switch (k) {
  case PhantomKind::Disks: return "disks";
  case PhantomKind::Blocks: return "blocks";
  case PhantomKind::Ramp: return "ramp";
  }
  return "?";
}

namespace {

struct Disk {
  double cx, cy, r, level;
};

// Levels in [0,1]; later disks paint over earlier ones.
constexpr Disk kDisks[] = {
  {0.0, 0.0, 0.9, 0.5},     // body
  {-0.35, 0.0, 0.3, 1.0},   // bright inclusion
  {0.4, 0.3, 0.2, 0.25},    // dark inclusion
  {0.3, -0.45, 0.15, 0.8},  //
  {0.0, 0.55, 0.1, 0.0},    // hole
};

struct Rect {
  double x0, x1, y0, y1, level;
};

constexpr Rect kBlocks[] = {
  {0.10, 0.45, 0.15, 0.60, 1.0},
  {0.55, 0.90, 0.20, 0.50, 0.4},
  {0.30, 0.80, 0.65, 0.90, 0.7},
};

double level_at(PhantomKind kind, std::size_t i, std::size_t j, std::size_t N) {
  // pixel centre in [0,1]^2
  const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(N);
  const double v = (static_cast<double>(j) + 0.5) / static_cast<double>(N);
  double level = 0.0;
  switch (kind) {
  case PhantomKind::Disks:
    for (const Disk &d : kDisks) {
      const double dx = 2.0 * u - 1.0 - d.cx, dy = 2.0 * v - 1.0 - d.cy;
      if (dx * dx + dy * dy <= d.r * d.r) level = d.level;
    }
    break;
  case PhantomKind::Blocks:
    for (const Rect &r : kBlocks) {
      if (u >= r.x0 && u <= r.x1 && v >= r.y0 && v <= r.y1) level = r.level;
    }
    break;
  case PhantomKind::Ramp:
    level = std::floor(4.0 * static_cast<double>(i) / static_cast<double>(N)) / 3.0;
    break;
  }
  return level;
}

} // namespace

ImageGrid synth_phantom(PhantomKind kind, std::size_t N, double lo, double hi) {
  if (N < 8) throw DimensionError("synth_phantom: N must be >= 8");
  if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw DomainError("synth_phantom: intensity range must satisfy 0 <= lo < hi");
  }
  ImageGrid img(N);
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t i = 0; i < N; ++i) img.at(i, j) = lo + (hi - lo) * level_at(kind, i, j, N);
  }
  return img;
}

} // namespace ssg
