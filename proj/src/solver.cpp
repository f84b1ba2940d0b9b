#include "ssg/solver.hpp"

#include "ssg/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ssg {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector project_with(const ProblemOracle &oracle, std::span<const double> z, const DiagMetric &D) {
  return oracle.project ? oracle.project(z, D) : project_nonneg_scaled(z, D);
}

// x <- P(x - alpha_eff D u); the oracle answer at x is consumed.
void advance(IterState &st, double alpha_eff, const DiagMetric &D, const ProblemOracle &oracle) {
  if (!std::isfinite(alpha_eff) || alpha_eff < 0.0) {
    throw DomainError("step: stepsize must be finite and >= 0 (k=" + std::to_string(st.k) + ")");
  }
  if (D.size() != st.x.size() || st.u.size() != st.x.size()) {
    throw DimensionError("step: metric, subgradient and iterate sizes differ");
  }
  Vector z(st.x.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = st.x[i] - alpha_eff * D[i] * st.u[i];
  Vector next = project_with(oracle, z, D);
  if (next.size() != st.x.size()) throw DimensionError("step: projection changed the dimension");
  for (double v : next) {
    if (!std::isfinite(v)) throw DomainError("step: projection returned a non-finite point");
  }
  st.x = std::move(next);
  st.D = D;
  st.k += 1;
  st.drawn = false;
}

IterRecord base_record(const IterState &st) {
  IterRecord r;
  r.k = st.k;
  r.time_s = seconds_since(st.started);
  r.f = st.f;
  if (st.drawn) {
    r.eps = st.eps;
    r.u_norm = euclidean_norm(st.u);
  }
  return r;
}

} // namespace

IterState::IterState(Vector x0)
  : x(std::move(x0)), D(DiagMetric::identity(x.size())), started(std::chrono::steady_clock::now()) {}

void draw(IterState &st, const ProblemOracle &oracle) {
  if (st.drawn) return;
  st.f = oracle.f_value(st.x);
  if (!std::isfinite(st.f)) throw DomainError("oracle: f(x) is not finite at k=" + std::to_string(st.k));
  Subgradient g = oracle.eps_subgradient(st.x, st.k);
  if (g.u.size() != st.x.size()) throw DimensionError("oracle: subgradient has the wrong size");
  for (double v : g.u) {
    if (!std::isfinite(v)) throw DomainError("oracle: non-finite subgradient at k=" + std::to_string(st.k));
  }
  if (!std::isfinite(g.eps) || g.eps < 0.0) throw DomainError("oracle: eps must be finite and >= 0");
  st.u = std::move(g.u);
  st.eps = g.eps;
  st.drawn = true;
}

IterState step_scaled(IterState st, double alpha, const DiagMetric &D, const ProblemOracle &oracle) {
  draw(st, oracle);
  IterRecord r = base_record(st);
  r.alpha = r.alpha_eff = alpha;
  r.L = D.bound();
  st.trace.push_back(r);
  advance(st, alpha, D, oracle);
  return st;
}

IterState step_normalized(IterState st, double alpha, const DiagMetric &D, const ProblemOracle &oracle) {
  draw(st, oracle);
  const double eff = alpha / std::max(1.0, energy_norm(st.u, D));
  IterRecord r = base_record(st);
  r.alpha = alpha;
  r.alpha_eff = eff;
  r.L = D.bound();
  st.trace.push_back(r);
  advance(st, eff, D, oracle);
  return st;
}

LevelState LevelState::start(double B, double nu1, double nu2, double delta0) {
  if (!(B > 0.0) || !std::isfinite(B)) throw ConfigError("level rule: path bound B must be > 0");
  if (!(nu1 > 0.0 && nu1 < 1.0) || !(nu2 > 0.0 && nu2 < 1.0)) {
    throw ConfigError("level rule: nu1 and nu2 must lie in (0, 1)");
  }
  if (!(delta0 > 0.0) || !std::isfinite(delta0)) throw ConfigError("level rule: delta0 must be > 0");
  LevelState s;
  s.B = B;
  s.nu1 = nu1;
  s.nu2 = nu2;
  s.delta = delta0;
  return s;
}

LevelUpdate ssl_update(LevelState lv, double f_x, std::size_t k) {
  LevelUpdate out;
  lv.f_rec = std::min(lv.f_rec, f_x);
  if (!std::isfinite(lv.f_rec_at_update)) {
    // first call: k(0) is the current iteration
    lv.k_l = k;
    lv.f_rec_at_update = lv.f_rec;
  }
  if (f_x < lv.f_rec_at_update - lv.nu1 * lv.delta) {
    lv.k_l = k;
    lv.sigma = 0.0;
    lv.l += 1;
    lv.f_rec_at_update = lv.f_rec;
    out.sufficient_descent = true;
  } else if (lv.sigma > lv.B) {
    lv.k_l = k;
    lv.sigma = 0.0;
    lv.delta *= lv.nu2;
    lv.l += 1;
    lv.f_rec_at_update = lv.f_rec;
    out.path_exceeded = true;
  }
  lv.f_lev = lv.f_rec_at_update - lv.delta;
  out.level = lv;
  return out;
}

double ssl_stepsize(double f_x, double f_lev, double u_norm_D) {
  const double a = (f_x - f_lev) / std::max(1.0, u_norm_D);
  if (!std::isfinite(a)) throw DomainError("level rule: stepsize is not finite");
  return a;
}

std::pair<IterState, LevelState> ssl_step(IterState st, LevelState lv, const DiagMetric &D,
                                          const ProblemOracle &oracle) {
  draw(st, oracle);
  const double scale = std::max(1.0, energy_norm(st.u, D));
  const double alpha = ssl_stepsize(st.f, lv.f_lev, scale);
  IterRecord r = base_record(st);
  r.alpha = alpha;
  r.alpha_eff = alpha / scale;
  r.delta_l = lv.delta;
  r.f_lev = lv.f_lev;
  r.L = D.bound();
  st.trace.push_back(r);
  advance(st, alpha / scale, D, oracle);
  lv.sigma += alpha;
  return {std::move(st), lv};
}

const char *to_string(RunStatus s) {
  switch (s) {
  case RunStatus::MaxIter: return "max_iter";
  case RunStatus::Converged: return "converged";
  case RunStatus::Diverged: return "diverged";
  }
  return "unknown";
}

RunResult run(const ProblemOracle &oracle, const Strategy &strategy, const MetricBuilder &metric,
              const StopRule &stop, Vector x0, const Observer &observer) {
  RunResult res;
  res.heuristic = std::holds_alternative<ClassicStrategy>(strategy);
  if (const auto *c = std::get_if<ClassicStrategy>(&strategy)) validate_rule(c->rule);

  IterState st(std::move(x0));
  std::optional<LevelState> level;
  std::size_t calm_f = 0, calm_x = 0;
  double f_prev = kNaN;
  bool finished = false;

  auto emit = [&](const StepView &v) {
    if (observer) observer(v);
  };

  while (true) {
    if (finished || st.k >= stop.max_iter) {
      st.f = oracle.f_value(st.x);
      IterRecord r = base_record(st);
      r.u_norm = kNaN;
      r.eps = kNaN;
      if (level) {
        r.delta_l = level->delta;
        r.f_lev = level->f_lev;
      }
      st.trace.push_back(r);
      emit(StepView{st.k, st.x, {}, kNaN, st.f, nullptr, kNaN, kNaN, kNaN, st.trace.back()});
      break;
    }

    draw(st, oracle);
    const double u_norm = euclidean_norm(st.u);
    if (u_norm > stop.rho_max) {
      IterRecord r = base_record(st);
      st.trace.push_back(r);
      res.status = RunStatus::Diverged;
      res.diverged_at = st.k;
      res.message = "subgradient norm " + std::to_string(u_norm) + " exceeds cap " + std::to_string(stop.rho_max) +
                    " at k=" + std::to_string(st.k);
      break;
    }

    double L = 1.0;
    if (const auto *s = std::get_if<ScheduleStrategy>(&strategy)) L = eval_schedule(s->schedule, st.k).L;
    if (const auto *s = std::get_if<LevelStrategy>(&strategy)) L = schedule_bound(s->bounds, st.k);
    const DiagMetric D = metric ? metric(st.k, st.x, L) : DiagMetric::identity(st.x.size());
    if (D.bound() > L * (1.0 + 1e-12)) throw DomainError("metric builder exceeded the scaling bound L_k");

    IterRecord r = base_record(st);
    r.L = L;
    double alpha = kNaN, eff = kNaN;
    if (const auto *s = std::get_if<ScheduleStrategy>(&strategy)) {
      alpha = eval_schedule(s->schedule, st.k).alpha;
      eff = s->normalized ? alpha / std::max(1.0, energy_norm(st.u, D)) : alpha;
    } else if (const auto *s = std::get_if<LevelStrategy>(&strategy)) {
      if (!level) {
        const double B = s->params.B.value_or(0.9 * u_norm * std::sqrt(D.max_entry()));
        const double d0 = s->params.delta0.value_or(0.9 * st.f);
        level = LevelState::start(B, s->params.nu1, s->params.nu2, d0);
      }
      level = ssl_update(*level, st.f, st.k).level;
      const double scale = std::max(1.0, energy_norm(st.u, D));
      alpha = ssl_stepsize(st.f, level->f_lev, scale);
      eff = alpha / scale;
      r.delta_l = level->delta;
      r.f_lev = level->f_lev;
    } else {
      const auto &c = std::get<ClassicStrategy>(strategy);
      alpha = eff = classic_step(c.rule, st.k, st.f, u_norm * u_norm);
    }
    r.alpha = alpha;
    r.alpha_eff = eff;
    st.trace.push_back(r);
    emit(StepView{st.k, st.x, st.u, st.eps, st.f, &D, alpha, eff, L, st.trace.back()});

    const Vector x_old = st.x;
    const double f_now = st.f;
    advance(st, eff, D, oracle);
    if (level) level->sigma += alpha;

    if (stop.f_rel_tol > 0.0 && std::isfinite(f_prev)) {
      calm_f = std::abs(f_now - f_prev) <= stop.f_rel_tol * std::abs(f_prev) ? calm_f + 1 : 0;
    }
    if (stop.x_rel_tol > 0.0) {
      double dx = 0.0;
      for (std::size_t i = 0; i < x_old.size(); ++i) dx += (st.x[i] - x_old[i]) * (st.x[i] - x_old[i]);
      calm_x = std::sqrt(dx) <= stop.x_rel_tol * euclidean_norm(x_old) ? calm_x + 1 : 0;
    }
    f_prev = f_now;
    if ((stop.f_rel_tol > 0.0 && calm_f >= stop.window) || (stop.x_rel_tol > 0.0 && calm_x >= stop.window)) {
      res.status = RunStatus::Converged;
      finished = true;
    }
  }

  res.trace = std::move(st.trace);
  res.x = std::move(st.x);
  res.level = level;
  return res;
}

} // namespace ssg
