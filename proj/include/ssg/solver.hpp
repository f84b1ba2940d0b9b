#pragma once

#include "ssg/metric.hpp"
#include "ssg/stepsize.hpp"

#include <chrono>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ssg {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// An element u of the eps-subdifferential of f at x.
struct Subgradient {
  Vector u;
  double eps = 0.0;
};

/// Callbacks describing min_{x in X} f(x).
struct ProblemOracle {
  std::function<double(std::span<const double>)> f_value;
  /// (x, k) -> (u, eps) with f(z) >= f(x) + u^T (z - x) - eps for all z.
  std::function<Subgradient(std::span<const double>, std::size_t)> eps_subgradient;
  /// Projection onto X in the D^{-1} metric. Defaults to the nonnegative orthant.
  std::function<Vector(std::span<const double>, const DiagMetric &)> project;
  std::optional<double> f_star;
};

struct IterRecord {
  std::size_t k = 0;
  double time_s = 0.0;
  double f = kNaN;
  double eps = kNaN;
  /// Stepsize as produced by the rule (before any normalization).
  double alpha = kNaN;
  /// Stepsize actually multiplying D u.
  double alpha_eff = kNaN;
  double u_norm = kNaN;
  double delta_l = kNaN;
  double f_lev = kNaN;
  double L = kNaN;
};

/// Iterate plus the last oracle answer. `drawn` marks that f, u, eps
/// belong to the current x (iteration k).
struct IterState {
  explicit IterState(Vector x0);

  Vector x;
  std::size_t k = 0;
  double f = kNaN;
  Vector u;
  double eps = 0.0;
  bool drawn = false;
  DiagMetric D;
  std::vector<IterRecord> trace;
  std::chrono::steady_clock::time_point started;
};

/// Queries the oracle at state.x unless it was already queried for this k.
/// Throws DomainError if u or f is not finite or eps < 0.
void draw(IterState &state, const ProblemOracle &oracle);

/// x+ = P_{X,D^{-1}}(x - alpha D u), with (u, eps) drawn at x.
IterState step_scaled(IterState state, double alpha, const DiagMetric &D, const ProblemOracle &oracle);

/// Same projection, with u replaced by u / max(1, |u|_D).
IterState step_normalized(IterState state, double alpha, const DiagMetric &D, const ProblemOracle &oracle);

/// Bookkeeping of the adaptive level rule.
struct LevelState {
  double B = 0.0;
  double nu1 = 0.5;
  double nu2 = 0.5;
  /// Best value seen so far.
  double f_rec = std::numeric_limits<double>::infinity();
  /// Record value at the iteration k(l) of the last level update.
  double f_rec_at_update = std::numeric_limits<double>::infinity();
  double delta = 0.0;
  std::size_t l = 0;
  std::size_t k_l = 0;
  /// Path length accumulated since the last level update.
  double sigma = 0.0;
  double f_lev = kNaN;

  /// Throws ConfigError unless B > 0, nu1, nu2 in (0,1), delta0 > 0.
  static LevelState start(double B, double nu1, double nu2, double delta0);
};

struct LevelUpdate {
  LevelState level;
  bool sufficient_descent = false;
  bool path_exceeded = false;
};

/// Record update, level update tests and target level for iteration k.
/// Ties in the descent test fall through to the path test.
LevelUpdate ssl_update(LevelState level, double f_x, std::size_t k);

/// (f(x) - f_lev) / max(1, |u|_D)
double ssl_stepsize(double f_x, double f_lev, double u_norm_D);

/// One level-rule iterate: alpha from the current target level, the
/// normalized scaled projection step, and sigma += alpha.
std::pair<IterState, LevelState> ssl_step(IterState state, LevelState level, const DiagMetric &D,
                                          const ProblemOracle &oracle);

// ---------------------------------------------------------------------------
// Driver

struct ScheduleStrategy {
  PolySchedule schedule;
  bool normalized = false;
};

struct LevelParams {
  double nu1 = 0.5;
  double nu2 = 0.5;
  /// Default: 0.9 |u^0| ||D_0||_inf^{1/2}
  std::optional<double> B;
  /// Default: 0.9 f(x^0)
  std::optional<double> delta0;
};

struct LevelStrategy {
  LevelParams params;
  /// Only gamma_k (hence L_k) is read from this schedule.
  PolySchedule bounds;
};

struct ClassicStrategy {
  ClassicRule rule;
};

using Strategy = std::variant<ScheduleStrategy, LevelStrategy, ClassicStrategy>;

/// (k, x^k, L_k) -> D_k. Called after the oracle has been queried at x^k.
using MetricBuilder = std::function<DiagMetric(std::size_t, std::span<const double>, double)>;

struct StopRule {
  std::size_t max_iter = 3000;
  /// Stop once |f_k - f_{k-1}| <= f_rel_tol |f_{k-1}| for `window`
  /// consecutive iterations. 0 disables.
  double f_rel_tol = 0.0;
  /// Same test on |x_{k+1} - x_k| / |x_k|. 0 disables.
  double x_rel_tol = 0.0;
  std::size_t window = 10;
  /// Abort when |u| exceeds this cap.
  double rho_max = 1e12;
};

enum class RunStatus { MaxIter, Converged, Diverged };

const char *to_string(RunStatus s);

/// What an observer sees at iteration k, before x^{k+1} is formed. On the
/// final call (the last iterate) u is empty and D is null.
struct StepView {
  std::size_t k;
  std::span<const double> x;
  std::span<const double> u;
  double eps;
  double f;
  const DiagMetric *D;
  double alpha;
  double alpha_eff;
  double L;
  const IterRecord &record;
};

using Observer = std::function<void(const StepView &)>;

struct RunResult {
  std::vector<IterRecord> trace;
  Vector x;
  RunStatus status = RunStatus::MaxIter;
  /// True for classic rules, which carry no convergence certificate.
  bool heuristic = false;
  std::string message;
  std::optional<LevelState> level;
  std::optional<std::size_t> diverged_at;
};

RunResult run(const ProblemOracle &oracle, const Strategy &strategy, const MetricBuilder &metric,
              const StopRule &stop, Vector x0, const Observer &observer = {});

} // namespace ssg
