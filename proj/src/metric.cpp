#include "ssg/metric.hpp"

#include "ssg/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ssg {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char *what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": size " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

} // namespace

DiagMetric::DiagMetric(Vector proposed, double bound) : entries_(std::move(proposed)), bound_(bound) {
  if (!std::isfinite(bound_) || bound_ < 1.0) {
    throw DomainError("DiagMetric: bound must be finite and >= 1");
  }
  const double lo = 1.0 / bound_;
  for (double &d : entries_) {
    if (!std::isfinite(d)) {
      throw DomainError("DiagMetric: non-finite diagonal entry");
    }
    d = std::clamp(d, lo, bound_);
  }
}

DiagMetric DiagMetric::identity(std::size_t n) { return DiagMetric(Vector(n, 1.0), 1.0); }

double DiagMetric::max_entry() const {
  return entries_.empty() ? 0.0 : *std::max_element(entries_.begin(), entries_.end());
}

Vector DiagMetric::apply(std::span<const double> x) const {
  require_same_size(x.size(), size(), "DiagMetric::apply");
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = entries_[i] * x[i];
  return z;
}

Vector DiagMetric::apply_inverse(std::span<const double> x) const {
  require_same_size(x.size(), size(), "DiagMetric::apply_inverse");
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] / entries_[i];
  return z;
}

double energy_norm(std::span<const double> x, const DiagMetric &D) {
  require_same_size(x.size(), D.size(), "energy_norm");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += D[i] * x[i] * x[i];
  return std::sqrt(s);
}

double inverse_energy_norm(std::span<const double> x, const DiagMetric &D) {
  require_same_size(x.size(), D.size(), "inverse_energy_norm");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * x[i] / D[i];
  return std::sqrt(s);
}

double euclidean_norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vector project_nonneg_scaled(std::span<const double> x, const DiagMetric &D) {
  require_same_size(x.size(), D.size(), "project_nonneg_scaled");
  return project_nonneg(x);
}

Vector project_nonneg(std::span<const double> x) {
  Vector z(x.size());
  std::transform(x.begin(), x.end(), z.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
  return z;
}

} // namespace ssg
