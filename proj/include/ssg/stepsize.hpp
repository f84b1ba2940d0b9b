#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ssg {

/// Polynomial parameter schedule
///
///   tau_k   = t1 + t2 k
///   alpha_k = 1 / (t3 + t4 k)
///   gamma_k = t5 / k^(1 + t6),  gamma_0 = t5
///
/// with the scaling bound L_k = sqrt(1 + gamma_k).
struct PolySchedule {
  double t1 = 1.0;
  double t2 = 0.0;
  double t3 = 1.0;
  double t4 = 0.0;
  double t5 = 0.0;
  double t6 = 1.0;

  bool operator==(const PolySchedule &) const = default;
};

struct ScheduleValues {
  double alpha;
  double tau;
  double gamma;
  double L;
};

/// Throws DomainError when any value is non-finite (e.g. t3 = t4 = 0) or
/// violates alpha > 0, tau > 0, gamma >= 0.
ScheduleValues eval_schedule(const PolySchedule &s, std::size_t k);

// Single components, for callers that use only part of the schedule
// (the level rule never reads alpha).
double schedule_tau(const PolySchedule &s, std::size_t k);
double schedule_gamma(const PolySchedule &s, std::size_t k);
double schedule_bound(const PolySchedule &s, std::size_t k);

struct ScheduleViolation {
  std::string condition;
  std::string detail;
};

struct ScheduleReport {
  /// Decay exponent p of alpha_k (0 when alpha is constant).
  double p_alpha = 0.0;
  /// Growth exponent of tau_k (0 when tau is constant).
  double p_tau = 0.0;
  /// Decay exponent q of gamma_k; +inf when gamma is identically zero.
  double q_gamma = 0.0;
  std::vector<ScheduleViolation> violations;

  bool valid() const { return violations.empty(); }
  std::string summary() const;
};

/// Structural check of the prefixed-sequence hypotheses:
/// alpha_k = O(k^-p) with 1/2 < p <= 1, tau_k growing like k^p, and
/// gamma_k = O(k^-q) with q > 1. Each failed condition is listed by name.
ScheduleReport validate_square_summable(const PolySchedule &s);

/// Check for the adaptive-level variant: alpha is not used, only
/// tau_k -> infinity and summable gamma_k are required.
ScheduleReport validate_level_schedule(const PolySchedule &s);

// Classic stepsize rules, kept for comparison runs. No convergence
// certificate is attached to them.
namespace rule {
struct Constant {
  double alpha;
};
/// c (f(x) - f*) / max{1, |u|^2}
struct Polyak {
  double c;
  double f_star;
};
/// alpha_k = scale / (offset + k)^exponent, exponent in (0, 1]
struct Ermoliev {
  double scale = 1.0;
  double offset = 1.0;
  double exponent = 1.0;
};
/// (f(x) - f_est) / max{1, |u|^2}
struct Dynamic {
  double f_estimate;
};
} // namespace rule

using ClassicRule = std::variant<rule::Constant, rule::Polyak, rule::Ermoliev, rule::Dynamic>;

void validate_rule(const ClassicRule &r);
double classic_step(const ClassicRule &r, std::size_t k, double f_x, double grad_norm_sq);

/// prod_{j=0..K} (1 + gamma_j). Throws std::overflow_error when the
/// product leaves the double range.
double theta_partial_product(std::span<const double> gammas, std::size_t K);
double theta_partial_product(const std::function<double(std::size_t)> &gamma, std::size_t K);

} // namespace ssg
