#pragma once

#include "ssg/imaging.hpp"
#include "ssg/metric.hpp"
#include "ssg/solver.hpp"
#include "ssg/stepsize.hpp"

#include <optional>

namespace ssg {

/// Dual variable in R^{2n}: n blocks y_l = (y[2l], y[2l+1]).
struct DualVar {
  Vector y;

  static DualVar zeros(std::size_t n) { return DualVar{Vector(2 * n, 0.0)}; }
  std::size_t blocks() const { return y.size() / 2; }
  /// Largest block norm.
  double max_block_norm() const;
};

/// s_l = 1 / max{1, |ytilde_l|}, one factor per pixel.
struct ShrinkFactors {
  Vector s;
};

/// Recursive vectors whose combination 2p + q + r is the positive part of
/// beta A^T y^{k+1}. All start at zero.
struct AuxDecomp {
  Vector p, q, r;

  static AuxDecomp zeros(std::size_t n) { return AuxDecomp{Vector(n, 0.0), Vector(n, 0.0), Vector(n, 0.0)}; }
};

struct DualStep {
  DualVar y;
  ShrinkFactors s;
};

/// ytilde = y + beta tau A x, then blockwise radial projection onto the
/// unit ball. This is the resolvent of the indicator of the product of
/// balls.
DualStep dual_update(const DualVar &y, std::span<const double> x, double tau, double beta);

/// sigma = beta TV(x) - beta (y+)^T A x for feasible y+. The pair
/// (beta A^T y+, sigma) is an eps-subgradient of beta TV at x.
/// Throws DomainError when the value is below -1e-10 (infeasible y+);
/// tiny negative round-off is clamped to zero.
double epsilon_of_dual(std::span<const double> x, const DualVar &y_plus, double beta);

/// p_l <- (p_l + beta^2 tau x_l) s_{i,j}
/// q_l <- (q_l + beta^2 tau x_l) s_{i-1,j}
/// r_l <- (r_l + beta^2 tau x_l) s_{i,j-1}     (indices wrap periodically)
AuxDecomp update_aux(AuxDecomp aux, std::span<const double> x, const ShrinkFactors &s, double tau, double beta);

/// V = H^T e + 2p + q + r. Throws DomainError on a nonpositive entry.
Vector positive_part(const AuxDecomp &aux, std::span<const double> Ht_e);

/// Diagonal entries clamp(x_l / V_l, 1/L, L).
DiagMetric build_scaling(std::span<const double> x, std::span<const double> V, double L);

/// P_{>=0}(x - alpha D (grad_f0 + beta A^T y+))
Vector primal_update(std::span<const double> x, const DiagMetric &D, double alpha, std::span<const double> grad_f0,
                     const DualVar &y_plus, double beta);

/// min_{x >= 0} KL(x) + beta TV(x)
struct DeblurProblem {
  KLData kl;
  double beta = 0.0;

  std::size_t size() const { return kl.g.size(); }
  double objective(std::span<const double> x) const;
};

/// Constant image carrying the data's mean above the background,
/// floored at 1e-3 of the data mean.
Vector flat_start(const KLData &kl);

enum class SpdhgMode { Schedule, Level };

struct SpdhgParams {
  SpdhgMode mode = SpdhgMode::Schedule;
  /// tau_k, gamma_k (both modes) and alpha_k (schedule mode).
  PolySchedule schedule;
  /// false: D_k = I (the unscaled method).
  bool scaling = true;
  LevelParams level;
  StopRule stop;
  /// Defaults to flat_start.
  std::optional<Vector> x0;
  /// Must be zero when given.
  std::optional<Vector> y0;
  /// Lower bound imposed by the projection; 0 is the plain orthant.
  double eps_floor = 0.0;
  /// Reject schedules that fail the mode's convergence hypotheses.
  bool enforce_schedule = true;
};

/// Live state of one SPDHG run. The oracle it hands out performs the dual
/// step, the auxiliary update and the gradient evaluation for iteration k;
/// the metric builder then reads the positive part computed there.
class SpdhgEngine {
public:
  SpdhgEngine(const DeblurProblem &problem, PolySchedule schedule, bool scaling, double eps_floor = 0.0);

  ProblemOracle oracle();
  MetricBuilder metric();

  const DualVar &dual() const { return y_; }
  const AuxDecomp &aux() const { return aux_; }
  const ShrinkFactors &shrink() const { return s_; }
  const Vector &positive() const { return V_; }
  const Vector &grad_f0() const { return grad_; }
  const Vector &Ht_e() const { return Ht_e_; }
  double tau() const { return tau_; }
  double sigma() const { return sigma_; }

private:
  Subgradient evaluate(std::span<const double> x, std::size_t k);

  const DeblurProblem &problem_;
  PolySchedule schedule_;
  bool scaling_;
  double eps_floor_;
  std::size_t next_k_ = 0;
  DualVar y_;
  AuxDecomp aux_;
  ShrinkFactors s_;
  Vector V_, grad_, Ht_e_;
  double tau_ = 0.0;
  double sigma_ = 0.0;
};

struct SpdhgResult {
  RunResult run;
  DualVar y;
  AuxDecomp aux;
};

/// Runs the scaled primal-dual method in schedule or level mode.
/// Throws ConfigError for a nonzero y0 or (when enforced) a schedule that
/// fails the mode's hypotheses.
SpdhgResult spdhg_run(const DeblurProblem &problem, const SpdhgParams &params, const Observer &observer = {});

} // namespace ssg
