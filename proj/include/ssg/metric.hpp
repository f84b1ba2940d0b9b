#pragma once

#include <span>
#include <vector>

namespace ssg {

using Vector = std::vector<double>;

/// Diagonal scaling matrix whose entries live in [1/L, L].
///
/// The clamp is applied once at construction, so every DiagMetric in
/// circulation satisfies ||D|| <= L and ||D^{-1}|| <= L.
class DiagMetric {
public:
  /// Clamps each proposed entry into [1/bound, bound].
  /// Throws DomainError on non-finite entries or bound < 1.
  DiagMetric(Vector proposed, double bound);

  static DiagMetric identity(std::size_t n);

  std::size_t size() const { return entries_.size(); }
  double bound() const { return bound_; }
  std::span<const double> entries() const { return entries_; }
  double operator[](std::size_t i) const { return entries_[i]; }

  /// Largest diagonal entry (the induced infinity norm).
  double max_entry() const;

  /// z = D x
  Vector apply(std::span<const double> x) const;
  /// z = D^{-1} x
  Vector apply_inverse(std::span<const double> x) const;

private:
  Vector entries_;
  double bound_;
};

/// sqrt(x^T D x)
double energy_norm(std::span<const double> x, const DiagMetric &D);
/// sqrt(x^T D^{-1} x), the norm in which the scaled projection is taken.
double inverse_energy_norm(std::span<const double> x, const DiagMetric &D);

double euclidean_norm(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);

/// Projection onto the nonnegative orthant in the D^{-1} metric. For a
/// diagonal D this is componentwise max(0, x_i) whatever the entries are.
Vector project_nonneg_scaled(std::span<const double> x, const DiagMetric &D);
Vector project_nonneg(std::span<const double> x);

} // namespace ssg
