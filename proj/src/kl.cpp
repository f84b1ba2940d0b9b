#include "ssg/error.hpp"
#include "ssg/imaging.hpp"

#include <cmath>
#include <string>

namespace ssg {

void validate(const KLData &d) {
  if (!d.H) throw DomainError("KLData: missing blur operator");
  if (d.g.size() != d.H->side() * d.H->side()) throw DimensionError("KLData: data size does not match the operator");
  if (!(d.b >= 0.0) || !std::isfinite(d.b)) throw DomainError("KLData: background must be finite and >= 0");
  for (double v : d.g) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("KLData: data must be finite and >= 0");
    if (d.b == 0.0 && v == 0.0) throw DomainError("KLData: zero-count pixels need a positive background");
  }
}

namespace {

Vector forward_model(std::span<const double> x, const KLData &d) {
  Vector m = d.H->apply(x);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] += d.b;
    if (d.g[i] > 0.0 && !(m[i] > 0.0)) {
      throw DomainError("KL: (Hx+b)_" + std::to_string(i) + " <= 0 where g > 0");
    }
  }
  return m;
}

} // namespace

double kl_value(std::span<const double> x, const KLData &d) {
  const Vector m = forward_model(x, d);
  double f = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double gi = d.g[i];
    if (gi > 0.0) f += gi * std::log(gi / m[i]);
    f += m[i] - gi;
  }
  return f;
}

KLGradient kl_grad(std::span<const double> x, const KLData &d) {
  const Vector m = forward_model(x, d);
  Vector v(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) v[i] = d.g[i] > 0.0 ? d.g[i] / m[i] : 0.0;
  KLGradient out;
  out.Ht_e = d.H->apply_adjoint(Vector(m.size(), 1.0));
  out.Ht_v = d.H->apply_adjoint(v);
  out.grad.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out.grad[i] = out.Ht_e[i] - out.Ht_v[i];
  return out;
}

} // namespace ssg
