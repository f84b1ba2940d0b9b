#include "ssg/spdhg.hpp"

#include "ssg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssg {

double DualVar::max_block_norm() const {
  double m = 0.0;
  for (std::size_t l = 0; l < blocks(); ++l) m = std::max(m, std::hypot(y[2 * l], y[2 * l + 1]));
  return m;
}

DualStep dual_update(const DualVar &y, std::span<const double> x, double tau, double beta) {
  if (y.y.size() != 2 * x.size()) throw DimensionError("dual_update: dual size must be twice the primal size");
  if (!(tau > 0.0) || !(beta >= 0.0) || !std::isfinite(tau) || !std::isfinite(beta)) {
    throw DomainError("dual_update: need tau > 0 and beta >= 0");
  }
  const Vector Ax = grad_op(x);
  DualStep out{DualVar{Vector(y.y.size())}, ShrinkFactors{Vector(x.size())}};
  const double bt = beta * tau;
  for (std::size_t l = 0; l < x.size(); ++l) {
    const double a = y.y[2 * l] + bt * Ax[2 * l];
    const double b = y.y[2 * l + 1] + bt * Ax[2 * l + 1];
    if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("dual_update: non-finite input");
    const double s = 1.0 / std::max(1.0, std::hypot(a, b));
    out.s.s[l] = s;
    out.y.y[2 * l] = s * a;
    out.y.y[2 * l + 1] = s * b;
  }
  return out;
}

double epsilon_of_dual(std::span<const double> x, const DualVar &y_plus, double beta) {
  if (y_plus.y.size() != 2 * x.size()) throw DimensionError("epsilon_of_dual: dual size must be twice the primal size");
  const Vector Ax = grad_op(x);
  double gap = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) {
    gap += std::hypot(Ax[2 * l], Ax[2 * l + 1]) - (y_plus.y[2 * l] * Ax[2 * l] + y_plus.y[2 * l + 1] * Ax[2 * l + 1]);
  }
  const double sigma = beta * gap;
  if (sigma < -1e-10 * std::max(1.0, beta * tv_value(x))) {
    throw DomainError("epsilon_of_dual: negative gap, the dual point is not feasible");
  }
  return std::max(0.0, sigma);
}

AuxDecomp update_aux(AuxDecomp aux, std::span<const double> x, const ShrinkFactors &s, double tau, double beta) {
  const std::size_t n = x.size();
  if (aux.p.size() != n || aux.q.size() != n || aux.r.size() != n || s.s.size() != n) {
    throw DimensionError("update_aux: size mismatch");
  }
  const std::size_t N = side_of(n);
  const double w = beta * beta * tau;
  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t jm = j == 0 ? N - 1 : j - 1;
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t im = i == 0 ? N - 1 : i - 1;
      const std::size_t l = i + N * j;
      const double add = w * x[l];
      aux.p[l] = (aux.p[l] + add) * s.s[l];
      aux.q[l] = (aux.q[l] + add) * s.s[im + N * j];
      aux.r[l] = (aux.r[l] + add) * s.s[i + N * jm];
    }
  }
  return aux;
}

Vector positive_part(const AuxDecomp &aux, std::span<const double> Ht_e) {
  if (Ht_e.size() != aux.p.size()) throw DimensionError("positive_part: size mismatch");
  Vector V(Ht_e.size());
  for (std::size_t l = 0; l < V.size(); ++l) {
    V[l] = Ht_e[l] + 2.0 * aux.p[l] + aux.q[l] + aux.r[l];
    if (!(V[l] > 0.0)) throw DomainError("positive_part: nonpositive entry; H^T e > 0 is violated");
  }
  return V;
}

DiagMetric build_scaling(std::span<const double> x, std::span<const double> V, double L) {
  if (x.size() != V.size()) throw DimensionError("build_scaling: size mismatch");
  Vector d(x.size());
  for (std::size_t l = 0; l < d.size(); ++l) {
    if (!(V[l] > 0.0)) throw DomainError("build_scaling: V must be positive");
    d[l] = x[l] / V[l];
  }
  return DiagMetric(std::move(d), L);
}

Vector primal_update(std::span<const double> x, const DiagMetric &D, double alpha, std::span<const double> grad_f0,
                     const DualVar &y_plus, double beta) {
  const std::size_t n = x.size();
  if (D.size() != n || grad_f0.size() != n || y_plus.y.size() != 2 * n) {
    throw DimensionError("primal_update: size mismatch");
  }
  const Vector Aty = div_op(y_plus.y);
  Vector z(n);
  for (std::size_t l = 0; l < n; ++l) {
    const double u = grad_f0[l] + beta * Aty[l];
    if (!std::isfinite(u)) throw DomainError("primal_update: non-finite gradient");
    z[l] = x[l] - alpha * D[l] * u;
  }
  return project_nonneg(z);
}

double DeblurProblem::objective(std::span<const double> x) const { return kl_value(x, kl) + beta * tv_value(x); }

Vector flat_start(const KLData &kl) {
  const double mean = std::accumulate(kl.g.begin(), kl.g.end(), 0.0) / static_cast<double>(kl.g.size());
  const double level = std::max(mean - kl.b, 1e-3 * mean);
  return Vector(kl.g.size(), level > 0.0 ? level : 1.0);
}

SpdhgEngine::SpdhgEngine(const DeblurProblem &problem, PolySchedule schedule, bool scaling, double eps_floor)
  : problem_(problem), schedule_(schedule), scaling_(scaling), eps_floor_(eps_floor),
    y_(DualVar::zeros(problem.size())), aux_(AuxDecomp::zeros(problem.size())) {
  validate(problem_.kl);
  if (!(problem_.beta >= 0.0)) throw ConfigError("SPDHG: beta must be >= 0");
  if (!(eps_floor_ >= 0.0)) throw ConfigError("SPDHG: eps_floor must be >= 0");
}

Subgradient SpdhgEngine::evaluate(std::span<const double> x, std::size_t k) {
  if (k != next_k_) throw std::logic_error("SpdhgEngine: oracle queried out of order");
  ++next_k_;
  const double beta = problem_.beta;
  tau_ = schedule_tau(schedule_, k);

  DualStep d = dual_update(y_, x, tau_, beta);
  y_ = std::move(d.y);
  s_ = std::move(d.s);
  aux_ = update_aux(std::move(aux_), x, s_, tau_, beta);

  KLGradient kg = kl_grad(x, problem_.kl);
  grad_ = std::move(kg.grad);
  Ht_e_ = std::move(kg.Ht_e);
  V_ = positive_part(aux_, Ht_e_);

  sigma_ = epsilon_of_dual(x, y_, beta);
  const Vector Aty = div_op(y_.y);
  Subgradient out{Vector(x.size()), sigma_};
  for (std::size_t l = 0; l < x.size(); ++l) out.u[l] = grad_[l] + beta * Aty[l];
  return out;
}

ProblemOracle SpdhgEngine::oracle() {
  ProblemOracle o;
  o.f_value = [this](std::span<const double> x) { return problem_.objective(x); };
  o.eps_subgradient = [this](std::span<const double> x, std::size_t k) { return evaluate(x, k); };
  const double floor = eps_floor_;
  o.project = [floor](std::span<const double> z, const DiagMetric &) {
    Vector x(z.begin(), z.end());
    for (double &v : x) v = std::max(v, floor);
    return x;
  };
  return o;
}

MetricBuilder SpdhgEngine::metric() {
  if (!scaling_) {
    return [](std::size_t, std::span<const double> x, double) { return DiagMetric::identity(x.size()); };
  }
  return [this](std::size_t, std::span<const double> x, double L) { return build_scaling(x, V_, L); };
}

SpdhgResult spdhg_run(const DeblurProblem &problem, const SpdhgParams &params, const Observer &observer) {
  if (params.y0) {
    if (params.y0->size() != 2 * problem.size()) throw DimensionError("SPDHG: y0 has the wrong size");
    if (std::any_of(params.y0->begin(), params.y0->end(), [](double v) { return v != 0.0; })) {
      throw ConfigError("SPDHG: the split-gradient recursion requires y0 = 0");
    }
  }
  if (params.enforce_schedule) {
    const ScheduleReport rep = params.mode == SpdhgMode::Schedule ? validate_square_summable(params.schedule)
                                                                  : validate_level_schedule(params.schedule);
    if (!rep.valid()) throw ConfigError("SPDHG: schedule rejected: " + rep.summary());
  }
  Vector x0 = params.x0 ? *params.x0 : flat_start(problem.kl);
  if (x0.size() != problem.size()) throw DimensionError("SPDHG: x0 has the wrong size");
  for (double &v : x0) {
    if (!(v >= 0.0)) throw DomainError("SPDHG: x0 must be nonnegative");
    v = std::max(v, params.eps_floor);
  }

  SpdhgEngine engine(problem, params.schedule, params.scaling, params.eps_floor);
  Strategy strategy;
  if (params.mode == SpdhgMode::Schedule) {
    strategy = ScheduleStrategy{params.schedule, false};
  } else {
    strategy = LevelStrategy{params.level, params.schedule};
  }
  SpdhgResult out;
  out.run = run(engine.oracle(), strategy, engine.metric(), params.stop, std::move(x0), observer);
  out.y = engine.dual();
  out.aux = engine.aux();
  return out;
}

} // namespace ssg
