#include "ssg/error.hpp"
#include "ssg/solver.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ssg;

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// f(x) = |x1| + |x2| on the orthant; u = sign(x).
ProblemOracle l1_oracle() {
  ProblemOracle o;
  o.f_value = [](std::span<const double> x) { return std::abs(x[0]) + std::abs(x[1]); };
  o.eps_subgradient = [](std::span<const double> x, std::size_t) {
    return Subgradient{{sgn(x[0]), sgn(x[1])}, 0.0};
  };
  return o;
}

/// f(x) = |x1 - 2| + |x2 + 1| + (x1 - x2)^2 / 2 on the orthant.
double kinked(const Vector &x) { return std::abs(x[0] - 2.0) + std::abs(x[1] + 1.0) + 0.5 * std::pow(x[0] - x[1], 2); }

ProblemOracle kinked_oracle() {
  ProblemOracle o;
  o.f_value = [](std::span<const double> x) { return kinked(Vector(x.begin(), x.end())); };
  o.eps_subgradient = [](std::span<const double> x, std::size_t) {
    const double d = x[0] - x[1];
    return Subgradient{{sgn(x[0] - 2.0) + d, sgn(x[1] + 1.0) - d}, 0.0};
  };
  return o;
}

/// f(x) = |x| on X = [-1, 1].
ProblemOracle abs_interval_oracle() {
  ProblemOracle o;
  o.f_value = [](std::span<const double> x) { return std::abs(x[0]); };
  o.eps_subgradient = [](std::span<const double> x, std::size_t) { return Subgradient{{sgn(x[0])}, 0.0}; };
  o.project = [](std::span<const double> z, const DiagMetric &) { return Vector{std::clamp(z[0], -1.0, 1.0)}; };
  return o;
}

oracle::GridMin kinked_minimum() {
  return oracle::grid_min([](const oracle::Vec &x) { return kinked(x); }, 0.0, 6.0, 0.0, 6.0);
}

} // namespace

TEST(StepScaled, ClosedFormStep) {
  IterState st(Vector{1.0, 1.0});
  st = step_scaled(std::move(st), 0.5, DiagMetric::identity(2), l1_oracle());
  EXPECT_EQ(st.x, (Vector{0.5, 0.5}));
  EXPECT_EQ(st.k, 1u);
  ASSERT_EQ(st.trace.size(), 1u);
  EXPECT_EQ(st.trace[0].f, 2.0);
  EXPECT_EQ(st.trace[0].alpha, 0.5);
  EXPECT_DOUBLE_EQ(st.trace[0].u_norm, std::sqrt(2.0));
}

TEST(StepScaled, DiagonalMetricStep) {
  IterState st(Vector{1.0, 1.0});
  st = step_scaled(std::move(st), 0.5, DiagMetric({2.0, 1.0}, 2.0), l1_oracle());
  EXPECT_EQ(st.x, (Vector{0.0, 0.5}));
}

TEST(StepScaled, RejectsNonFiniteSubgradient) {
  ProblemOracle o = l1_oracle();
  o.eps_subgradient = [](std::span<const double>, std::size_t) { return Subgradient{{NAN, 0.0}, 0.0}; };
  EXPECT_THROW(step_scaled(IterState(Vector{1.0, 1.0}), 0.1, DiagMetric::identity(2), o), DomainError);
  o.eps_subgradient = [](std::span<const double>, std::size_t) { return Subgradient{{1.0, 0.0}, -1.0}; };
  EXPECT_THROW(step_scaled(IterState(Vector{1.0, 1.0}), 0.1, DiagMetric::identity(2), o), DomainError);
}

TEST(StepScaled, RejectsBadProjection) {
  ProblemOracle o = l1_oracle();
  o.project = [](std::span<const double>, const DiagMetric &) { return Vector{INFINITY, 0.0}; };
  EXPECT_THROW(step_scaled(IterState(Vector{1.0, 1.0}), 0.1, DiagMetric::identity(2), o), DomainError);
}

// The minimizers form the segment x1 - x2 = 1, 1 <= x1 <= 2, with f* = 2.5.
TEST(StepScaled, ScheduleRunApproachesGridMinimum) {
  const auto best = kinked_minimum();
  ASSERT_NEAR(best.f, 2.5, 1e-9);
  const Vector x0{5.0, 5.0};
  IterState st(x0);
  const PolySchedule s{1, 0, 1, 0.2, 0, 1};
  ASSERT_TRUE(validate_square_summable(PolySchedule{1, 1, 1, 0.2, 0, 1}).valid());
  for (std::size_t k = 0; k < 50; ++k) st = step_scaled(std::move(st), eval_schedule(s, k).alpha, DiagMetric::identity(2), kinked_oracle());
  EXPECT_LE(kinked(st.x) - best.f, (kinked(x0) - best.f) / 10.0);
  EXPECT_NEAR(st.x[0] - st.x[1], 1.0, 0.1);
}

TEST(StepNormalized, SmallSubgradientMatchesScaledStep) {
  ProblemOracle o;
  o.f_value = [](std::span<const double>) { return 0.0; };
  o.eps_subgradient = [](std::span<const double>, std::size_t) { return Subgradient{{0.3, 0.4}, 0.0}; };
  const DiagMetric D = DiagMetric::identity(2);
  const IterState a = step_scaled(IterState(Vector{2.0, 3.0}), 0.7, D, o);
  const IterState b = step_normalized(IterState(Vector{2.0, 3.0}), 0.7, D, o);
  EXPECT_EQ(a.x, b.x);
}

TEST(StepNormalized, NormalizationArithmetic) {
  ProblemOracle o;
  o.f_value = [](std::span<const double>) { return 0.0; };
  o.eps_subgradient = [](std::span<const double>, std::size_t) { return Subgradient{{3.0, 4.0}, 0.0}; };
  const IterState st = step_normalized(IterState(Vector{10.0, 10.0}), 1.0, DiagMetric::identity(2), o);
  EXPECT_DOUBLE_EQ(st.x[0], 9.4);
  EXPECT_DOUBLE_EQ(st.x[1], 9.2);
  EXPECT_DOUBLE_EQ(st.trace[0].alpha_eff, 0.2);
}

TEST(StepNormalized, DisplacementAndEffectiveStepBounds) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0.0, 3.0);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 10;
    const double L = 1.0 + 20.0 * ud(rng);
    Vector d(n), x(n), u(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = std::exp((2.0 * ud(rng) - 1.0) * std::log(L));
      x[i] = std::abs(nd(rng));
      u[i] = nd(rng);
    }
    const DiagMetric D(d, L);
    ProblemOracle o;
    o.f_value = [](std::span<const double>) { return 0.0; };
    o.eps_subgradient = [u](std::span<const double>, std::size_t) { return Subgradient{u, 0.0}; };
    const double alpha = 0.1 + 2.0 * ud(rng);
    const IterState st = step_normalized(IterState(x), alpha, D, o);
    Vector dx(n);
    for (std::size_t i = 0; i < n; ++i) dx[i] = st.x[i] - x[i];
    EXPECT_LE(inverse_energy_norm(dx, D), alpha * std::sqrt(L) * (1 + 1e-12));
    const double rho = euclidean_norm(u);
    const double eff = st.trace[0].alpha_eff;
    EXPECT_LE(eff, alpha);
    EXPECT_GE(eff, alpha / std::max(1.0, std::sqrt(L) * rho) * (1 - 1e-12));
  }
}

TEST(SslUpdate, SufficientDescent) {
  LevelState lv = LevelState::start(5.0, 0.5, 0.5, 2.0);
  lv.f_rec = lv.f_rec_at_update = 10.0;
  lv.sigma = 1.0;
  const auto up = ssl_update(lv, 8.9, 7);
  EXPECT_TRUE(up.sufficient_descent);
  EXPECT_FALSE(up.path_exceeded);
  EXPECT_EQ(up.level.delta, 2.0);
  EXPECT_EQ(up.level.sigma, 0.0);
  EXPECT_EQ(up.level.l, 1u);
  EXPECT_EQ(up.level.k_l, 7u);
  EXPECT_EQ(up.level.f_rec, 8.9);
  EXPECT_DOUBLE_EQ(up.level.f_lev, 6.9);
}

TEST(SslUpdate, PathBoundExceeded) {
  LevelState lv = LevelState::start(5.0, 0.5, 0.5, 2.0);
  lv.f_rec = lv.f_rec_at_update = 10.0;
  lv.sigma = 5.1;
  const auto up = ssl_update(lv, 9.5, 3);
  EXPECT_FALSE(up.sufficient_descent);
  EXPECT_TRUE(up.path_exceeded);
  EXPECT_EQ(up.level.delta, 1.0);
  EXPECT_EQ(up.level.sigma, 0.0);
  EXPECT_EQ(up.level.l, 1u);
  // the record 9.5 becomes the new reference value
  EXPECT_DOUBLE_EQ(up.level.f_lev, 8.5);
}

TEST(SslUpdate, NoUpdate) {
  LevelState lv = LevelState::start(5.0, 0.5, 0.5, 2.0);
  lv.f_rec = lv.f_rec_at_update = 10.0;
  lv.sigma = 5.0;
  const auto up = ssl_update(lv, 9.5, 3);
  EXPECT_FALSE(up.sufficient_descent);
  EXPECT_FALSE(up.path_exceeded);
  EXPECT_EQ(up.level.l, 0u);
  EXPECT_EQ(up.level.sigma, 5.0);
  EXPECT_DOUBLE_EQ(up.level.f_lev, 8.0);
}

TEST(SslUpdate, TieFallsThroughToPathTest) {
  LevelState lv = LevelState::start(5.0, 0.5, 0.5, 2.0);
  lv.f_rec = lv.f_rec_at_update = 10.0;
  lv.sigma = 6.0;
  const auto up = ssl_update(lv, 9.0, 1);
  EXPECT_FALSE(up.sufficient_descent);
  EXPECT_TRUE(up.path_exceeded);
}

TEST(SslUpdate, FirstCallAnchorsAtInitialValue) {
  const auto up = ssl_update(LevelState::start(1.0, 0.5, 0.5, 3.0), 12.0, 0);
  EXPECT_EQ(up.level.f_rec, 12.0);
  EXPECT_EQ(up.level.f_rec_at_update, 12.0);
  EXPECT_EQ(up.level.l, 0u);
  EXPECT_DOUBLE_EQ(up.level.f_lev, 9.0);
}

TEST(LevelState, StartValidates) {
  EXPECT_THROW(LevelState::start(0.0, 0.5, 0.5, 1.0), ConfigError);
  EXPECT_THROW(LevelState::start(1.0, 1.0, 0.5, 1.0), ConfigError);
  EXPECT_THROW(LevelState::start(1.0, 0.5, 0.0, 1.0), ConfigError);
  EXPECT_THROW(LevelState::start(1.0, 0.5, 0.5, -1.0), ConfigError);
}

TEST(SslStep, StepsizeFormula) {
  EXPECT_DOUBLE_EQ(ssl_stepsize(5.0, 4.0, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(ssl_stepsize(5.0, 4.0, 0.5), 1.0);
  EXPECT_THROW(ssl_stepsize(INFINITY, 4.0, 1.0), DomainError);
}

TEST(SslStep, PositiveAtRecord) {
  const double delta = 1.0;
  for (double un : {0.1, 1.0, 7.0}) {
    const double a = ssl_stepsize(3.0, 3.0 - delta, un);
    EXPECT_GE(a, delta / std::max(1.0, un));
    EXPECT_GT(a, 0.0);
  }
}

TEST(SslStep, AbsoluteValueOnInterval) {
  const ProblemOracle o = abs_interval_oracle();
  IterState st(Vector{0.8});
  LevelState lv = LevelState::start(0.9, 0.5, 0.5, 0.72);
  const DiagMetric D = DiagMetric::identity(1);
  double best = INFINITY;
  for (std::size_t k = 0; k < 1000; ++k) {
    draw(st, o);
    best = std::min(best, st.f);
    lv = ssl_update(lv, st.f, st.k).level;
    std::tie(st, lv) = ssl_step(std::move(st), lv, D, o);
  }
  EXPECT_LT(best, 1e-3);
  EXPECT_LT(lv.delta, 0.72);
}

TEST(SslStep, BookkeepingIsExact) {
  const ProblemOracle o = kinked_oracle();
  IterState st(Vector{4.0, 3.0});
  draw(st, o);
  LevelState lv = LevelState::start(0.9 * euclidean_norm(st.u), 0.5, 0.5, 0.9 * st.f);
  const DiagMetric D = DiagMetric::identity(2);
  double running_min = INFINITY, path = 0.0;
  for (std::size_t k = 0; k < 300; ++k) {
    draw(st, o);
    running_min = std::min(running_min, st.f);
    const auto up = ssl_update(lv, st.f, st.k);
    lv = up.level;
    EXPECT_EQ(lv.f_rec, running_min);
    if (up.sufficient_descent || up.path_exceeded) path = 0.0;
    EXPECT_EQ(lv.sigma, path);
    const double f_lev = lv.f_lev;
    const double scale = std::max(1.0, energy_norm(st.u, D));
    std::tie(st, lv) = ssl_step(std::move(st), lv, D, o);
    path += (st.trace.back().f - f_lev) / scale;
    EXPECT_GT(lv.delta, 0.0);
  }
}

TEST(Run, ZeroGammaScheduleIsUnscaled) {
  const PolySchedule s{1, 0, 1, 0.5, 0, 1};
  MetricBuilder wild = [](std::size_t, std::span<const double> x, double L) {
    return DiagMetric(Vector(x.size(), 50.0), L);
  };
  StopRule stop;
  stop.max_iter = 40;
  const RunResult a = run(kinked_oracle(), ScheduleStrategy{s, false}, wild, stop, Vector{5.0, 5.0});
  const RunResult b = run(kinked_oracle(), ScheduleStrategy{s, false}, {}, stop, Vector{5.0, 5.0});
  EXPECT_EQ(a.x, b.x);
  for (const IterRecord &r : a.trace) {
    if (std::isfinite(r.L)) {
      EXPECT_EQ(r.L, 1.0);
    }
  }
}

TEST(Run, PolyakIsHeuristicAndConverges) {
  ProblemOracle o = l1_oracle();
  StopRule stop;
  stop.max_iter = 100;
  const RunResult r = run(o, ClassicStrategy{rule::Polyak{1.0, 0.0}}, {}, stop, Vector{3.0, 2.0});
  EXPECT_TRUE(r.heuristic);
  EXPECT_LT(std::abs(r.x[0]) + std::abs(r.x[1]), 1e-6);
}

TEST(Run, LevelAndScheduleReachGridOptimum) {
  const auto best = kinked_minimum();
  StopRule stop;
  stop.max_iter = 3000;
  const RunResult sched =
      run(kinked_oracle(), ScheduleStrategy{PolySchedule{1, 0, 1, 0.5, 0, 1}, false}, {}, stop, Vector{5.0, 5.0});
  const RunResult lvl = run(kinked_oracle(), LevelStrategy{LevelParams{}, PolySchedule{1, 1, 1, 0, 0, 1}}, {}, stop,
                            Vector{5.0, 5.0});
  auto best_f = [](const RunResult &r) {
    double m = INFINITY;
    for (const IterRecord &rec : r.trace) m = std::min(m, rec.f);
    return m;
  };
  EXPECT_LE(best_f(sched) - best.f, 1e-3);
  EXPECT_LE(best_f(lvl) - best.f, 1e-3);
  ASSERT_TRUE(lvl.level.has_value());
  EXPECT_GT(lvl.level->l, 0u);
}

TEST(Run, DivergenceGuard) {
  ProblemOracle o;
  o.f_value = [](std::span<const double> x) { return x[0]; };
  o.eps_subgradient = [](std::span<const double>, std::size_t k) {
    return Subgradient{{std::pow(10.0, double(k))}, 0.0};
  };
  StopRule stop;
  stop.max_iter = 100;
  stop.rho_max = 1e6;
  const RunResult r = run(o, ScheduleStrategy{PolySchedule{1, 0, 1e9, 0, 0, 1}, false}, {}, stop, Vector{1.0});
  EXPECT_EQ(r.status, RunStatus::Diverged);
  ASSERT_TRUE(r.diverged_at.has_value());
  EXPECT_EQ(*r.diverged_at, 7u);
}

TEST(Run, ZeroBudgetRecordsOnlyStart) {
  StopRule stop;
  stop.max_iter = 0;
  std::size_t calls = 0;
  const RunResult r = run(kinked_oracle(), ScheduleStrategy{PolySchedule{}, false}, {}, stop, Vector{1.0, 1.0},
                          [&](const StepView &v) {
                            ++calls;
                            EXPECT_TRUE(v.u.empty());
                            EXPECT_EQ(v.D, nullptr);
                          });
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].k, 0u);
  EXPECT_EQ(calls, 1u);
  EXPECT_EQ(r.x, (Vector{1.0, 1.0}));
}

TEST(Run, RelativeChangeStop) {
  StopRule stop;
  stop.max_iter = 100000;
  stop.f_rel_tol = 1e-9;
  stop.window = 5;
  const RunResult r = run(l1_oracle(), ClassicStrategy{rule::Polyak{1.0, 0.0}}, {}, stop, Vector{3.0, 2.0});
  EXPECT_EQ(r.status, RunStatus::Converged);
  EXPECT_LT(r.trace.back().k, 1000u);
}

TEST(Run, MetricAboveBoundRejected) {
  MetricBuilder bad = [](std::size_t, std::span<const double> x, double) {
    return DiagMetric(Vector(x.size(), 3.0), 3.0);
  };
  StopRule stop;
  stop.max_iter = 3;
  EXPECT_THROW(run(kinked_oracle(), ScheduleStrategy{PolySchedule{1, 0, 1, 1, 0, 1}, false}, bad, stop,
                   Vector{1.0, 1.0}),
               DomainError);
}

TEST(Run, TimesAndIndicesIncrease) {
  StopRule stop;
  stop.max_iter = 50;
  const RunResult r = run(kinked_oracle(), ScheduleStrategy{PolySchedule{1, 0, 1, 1, 0, 1}, true}, {}, stop,
                          Vector{5.0, 5.0});
  ASSERT_EQ(r.trace.size(), 51u);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_EQ(r.trace[i].k, r.trace[i - 1].k + 1);
    EXPECT_GE(r.trace[i].time_s, r.trace[i - 1].time_s);
  }
}
