#include "ssg/stepsize.hpp"

#include "ssg/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ssg {

ScheduleValues eval_schedule(const PolySchedule &s, std::size_t k) {
  const double kk = static_cast<double>(k);
  ScheduleValues v{};
  v.tau = s.t1 + s.t2 * kk;
  v.alpha = 1.0 / (s.t3 + s.t4 * kk);
  v.gamma = k == 0 ? s.t5 : s.t5 / std::pow(kk, 1.0 + s.t6);
  v.L = std::sqrt(1.0 + v.gamma);
  if (!std::isfinite(v.alpha) || !std::isfinite(v.tau) || !std::isfinite(v.gamma) || !std::isfinite(v.L)) {
    throw DomainError("schedule value is not finite at k=" + std::to_string(k));
  }
  if (v.alpha <= 0.0 || v.tau <= 0.0 || v.gamma < 0.0) {
    throw DomainError("schedule requires alpha_k > 0, tau_k > 0, gamma_k >= 0 (k=" + std::to_string(k) + ")");
  }
  return v;
}

double schedule_tau(const PolySchedule &s, std::size_t k) {
  const double tau = s.t1 + s.t2 * static_cast<double>(k);
  if (!std::isfinite(tau) || !(tau > 0.0)) throw DomainError("tau_k must be finite and > 0");
  return tau;
}

double schedule_gamma(const PolySchedule &s, std::size_t k) {
  const double g = k == 0 ? s.t5 : s.t5 / std::pow(static_cast<double>(k), 1.0 + s.t6);
  if (!std::isfinite(g) || g < 0.0) throw DomainError("gamma_k must be finite and >= 0");
  return g;
}

double schedule_bound(const PolySchedule &s, std::size_t k) { return std::sqrt(1.0 + schedule_gamma(s, k)); }

namespace {

void check_signs(const PolySchedule &s, ScheduleReport &rep, bool uses_alpha) {
  auto bad = [&](const char *cond, const char *detail) { rep.violations.push_back({cond, detail}); };
  if (s.t1 <= 0.0 || s.t2 < 0.0) bad("tau_k > 0", "need t1 > 0 and t2 >= 0");
  if (uses_alpha && (s.t3 <= 0.0 || s.t4 < 0.0)) bad("alpha_k > 0", "need t3 > 0 and t4 >= 0");
  if (s.t5 < 0.0 || s.t6 < 0.0) bad("gamma_k >= 0", "need t5 >= 0 and t6 >= 0");
}

void fill_exponents(const PolySchedule &s, ScheduleReport &rep) {
  rep.p_alpha = s.t4 > 0.0 ? 1.0 : 0.0;
  rep.p_tau = s.t2 > 0.0 ? 1.0 : 0.0;
  rep.q_gamma = s.t5 > 0.0 ? 1.0 + s.t6 : std::numeric_limits<double>::infinity();
}

void check_gamma(ScheduleReport &rep) {
  if (!(rep.q_gamma > 1.0)) {
    rep.violations.push_back({"sum gamma_k < inf", "gamma_k = O(k^-q) needs q > 1 (t6 > 0)"});
  }
}

} // namespace

std::string ScheduleReport::summary() const {
  std::ostringstream os;
  os << "p_alpha=" << p_alpha << " p_tau=" << p_tau << " q_gamma=" << q_gamma;
  if (valid()) {
    os << " (valid)";
  } else {
    for (const auto &v : violations) os << "\n  violated: " << v.condition << " -- " << v.detail;
  }
  return os.str();
}

ScheduleReport validate_square_summable(const PolySchedule &s) {
  ScheduleReport rep;
  check_signs(s, rep, true);
  fill_exponents(s, rep);
  // alpha_k = 1/(t3 + t4 k): p = 1 when t4 > 0, otherwise constant.
  if (!(rep.p_alpha > 0.5)) {
    rep.violations.push_back({"sum alpha_k^2 < inf", "alpha_k is constant (t4 = 0)"});
  }
  if (!(rep.p_alpha > 0.0)) {
    rep.violations.push_back({"alpha_k -> 0", "alpha_k is constant (t4 = 0)"});
  }
  // eps_k <= D^2 / (2 tau_k) must decay like k^-p for sum alpha_k eps_k < inf.
  if (rep.p_tau < rep.p_alpha || rep.p_tau == 0.0) {
    rep.violations.push_back({"sum alpha_k eps_k < inf", "tau_k must grow like k^p (t2 > 0)"});
  }
  check_gamma(rep);
  return rep;
}

ScheduleReport validate_level_schedule(const PolySchedule &s) {
  ScheduleReport rep;
  check_signs(s, rep, false);
  fill_exponents(s, rep);
  if (rep.p_tau == 0.0) {
    rep.violations.push_back({"tau_k -> inf", "tau_k is constant (t2 = 0), so eps_k does not vanish"});
  }
  check_gamma(rep);
  return rep;
}

void validate_rule(const ClassicRule &r) {
  std::visit(
    [](const auto &v) {
      using T = std::decay_t<decltype(v)>;
      if constexpr (std::is_same_v<T, rule::Constant>) {
        if (!(v.alpha > 0.0) || !std::isfinite(v.alpha)) throw ConfigError("constant rule needs alpha > 0");
      } else if constexpr (std::is_same_v<T, rule::Polyak>) {
        if (!(v.c > 0.0 && v.c < 2.0)) throw ConfigError("Polyak rule needs c in (0, 2)");
      } else if constexpr (std::is_same_v<T, rule::Ermoliev>) {
        if (!(v.scale > 0.0) || !(v.offset > 0.0) || !(v.exponent > 0.0 && v.exponent <= 1.0)) {
          throw ConfigError("Ermoliev rule needs scale > 0, offset > 0, exponent in (0, 1]");
        }
      }
    },
    r);
}

double classic_step(const ClassicRule &r, std::size_t k, double f_x, double grad_norm_sq) {
  validate_rule(r);
  return std::visit(
    [&](const auto &v) -> double {
      using T = std::decay_t<decltype(v)>;
      if constexpr (std::is_same_v<T, rule::Constant>) {
        return v.alpha;
      } else if constexpr (std::is_same_v<T, rule::Ermoliev>) {
        return v.scale / std::pow(v.offset + static_cast<double>(k), v.exponent);
      } else {
        if (!(grad_norm_sq >= 0.0)) throw DomainError("classic_step: invalid subgradient norm");
        if constexpr (std::is_same_v<T, rule::Polyak>) {
          if (f_x < v.f_star) throw DomainError("Polyak rule: f(x) < f*, the supplied optimum is inconsistent");
          return v.c * (f_x - v.f_star) / std::max(1.0, grad_norm_sq);
        } else {
          return (f_x - v.f_estimate) / std::max(1.0, grad_norm_sq);
        }
      }
    },
    r);
}

double theta_partial_product(const std::function<double(std::size_t)> &gamma, std::size_t K) {
  // Accumulate in log space, so the overflow check does not depend on
  // the order in which large and small factors arrive.
  double log_theta = 0.0;
  for (std::size_t j = 0; j <= K; ++j) {
    const double g = gamma(j);
    if (g < 0.0 || !std::isfinite(g)) throw DomainError("theta_partial_product: gamma_j must be finite and >= 0");
    log_theta += std::log1p(g);
  }
  if (log_theta >= std::log(std::numeric_limits<double>::max())) {
    throw std::overflow_error("theta_partial_product: product exceeds double range");
  }
  return std::exp(log_theta);
}

double theta_partial_product(std::span<const double> gammas, std::size_t K) {
  if (K >= gammas.size()) throw DimensionError("theta_partial_product: K beyond sequence length");
  return theta_partial_product([&](std::size_t j) { return gammas[j]; }, K);
}

} // namespace ssg
