#include "ssg/error.hpp"
#include "ssg/spdhg.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

using namespace ssg;

namespace {

struct Small {
  std::size_t N;
  ImageGrid psf;
  DeblurProblem problem;
};

// Blurred random image with 10% multiplicative noise and background b.
Small make_small(std::size_t N, double beta, std::uint64_t seed, double b = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Small s{N, gaussian_psf(3, 0.8), {}};
  auto H = std::make_shared<const BlurOperator>(s.psf, N);
  Vector x(N * N);
  for (double &v : x) v = 5.0 + 20.0 * ud(rng);
  Vector g = H->apply(x);
  for (double &v : g) v = (v + b) * (0.9 + 0.2 * ud(rng));
  s.problem.kl = KLData{g, H, b};
  s.problem.beta = beta;
  return s;
}

oracle::PdhgSetup setup_for(const Small &s, const PolySchedule &t, bool level) {
  oracle::PdhgSetup o;
  o.N = s.N;
  o.g = s.problem.kl.g;
  o.b = s.problem.kl.b;
  o.beta = s.problem.beta;
  const oracle::Vec psf = s.psf.data();
  const std::size_t N = s.N;
  o.H = [psf, N](const oracle::Vec &x) { return oracle::convolve(psf, 3, N, x, false); };
  o.Ht = [psf, N](const oracle::Vec &x) { return oracle::convolve(psf, 3, N, x, true); };
  o.t1 = t.t1;
  o.t2 = t.t2;
  o.t3 = t.t3;
  o.t4 = t.t4;
  o.level = level;
  return o;
}

double max_abs_diff(const Vector &a, const Vector &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const Vector &a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

} // namespace

TEST(DualUpdate, HandComputedTwoByTwo) {
  // x = [[0, 3], [0, 0]] in (i, j) order: x(1,0) = 3.
  const Vector x{0.0, 3.0, 0.0, 0.0};
  const DualStep d = dual_update(DualVar::zeros(4), x, 0.5, 0.2);
  // A x at l=0: (3, 0) -> ytilde = (0.3, 0), inside the ball.
  EXPECT_DOUBLE_EQ(d.y.y[0], 0.3);
  EXPECT_DOUBLE_EQ(d.y.y[1], 0.0);
  EXPECT_EQ(d.s.s[0], 1.0);
  // l=1: (0 - 3, 0 - 3) -> (-0.3, -0.3).
  EXPECT_DOUBLE_EQ(d.y.y[2], -0.3);
  EXPECT_DOUBLE_EQ(d.y.y[3], -0.3);

  const DualStep e = dual_update(DualVar::zeros(4), x, 5.0, 1.0);
  // l=1: (-15, -15), norm 15 sqrt 2.
  EXPECT_NEAR(e.s.s[1], 1.0 / (15.0 * std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(e.y.y[2], -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(e.y.max_block_norm(), 1.0, 1e-15);
}

TEST(DualUpdate, IsTheBallProjection) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 2.0);
  const std::size_t n = 16;
  Vector x(n);
  DualVar y = DualVar::zeros(n);
  for (double &v : x) v = std::abs(nd(rng));
  for (std::size_t l = 0; l < n; ++l) {
    const double a = nd(rng), b = nd(rng), r = std::max(1.0, std::hypot(a, b));
    y.y[2 * l] = a / r;
    y.y[2 * l + 1] = b / r;
  }
  const double tau = 0.7, beta = 0.3;
  const DualStep d = dual_update(y, x, tau, beta);
  EXPECT_LE(d.y.max_block_norm(), 1.0 + 1e-15);
  const Vector Ax = grad_op(x);
  for (int trial = 0; trial < 200; ++trial) {
    for (std::size_t l = 0; l < n; ++l) {
      const double yt0 = y.y[2 * l] + beta * tau * Ax[2 * l];
      const double yt1 = y.y[2 * l + 1] + beta * tau * Ax[2 * l + 1];
      double z0 = nd(rng), z1 = nd(rng);
      const double r = std::max(1.0, std::hypot(z0, z1));
      z0 /= r;
      z1 /= r;
      const double ip = (yt0 - d.y.y[2 * l]) * (z0 - d.y.y[2 * l]) + (yt1 - d.y.y[2 * l + 1]) * (z1 - d.y.y[2 * l + 1]);
      EXPECT_LE(ip, 1e-12);
    }
  }
}

TEST(DualUpdate, RejectsBadInput) {
  const Vector x(4, 1.0);
  EXPECT_THROW(dual_update(DualVar::zeros(3), x, 1.0, 1.0), DimensionError);
  EXPECT_THROW(dual_update(DualVar::zeros(4), x, 0.0, 1.0), DomainError);
  EXPECT_THROW(dual_update(DualVar::zeros(4), x, 1.0, -1.0), DomainError);
  EXPECT_THROW(dual_update(DualVar::zeros(4), Vector{1.0, NAN, 0.0, 0.0}, 1.0, 1.0), DomainError);
}

TEST(EpsilonOfDual, IsAnEpsSubgradientOfTV) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(0.0, 10.0);
  const std::size_t n = 25;
  const double beta = 0.4;
  Vector x(n);
  for (double &v : x) v = ud(rng);
  DualVar y = DualVar::zeros(n);
  for (int k = 0; k < 5; ++k) {
    const DualStep d = dual_update(y, x, 0.3 + k, beta);
    y = d.y;
    const double sigma = epsilon_of_dual(x, y, beta);
    EXPECT_GE(sigma, 0.0);
    EXPECT_LE(sigma, 2.0 * n / (0.3 + k) + 1e-12);
    const Vector g = div_op(y.y);
    for (int t = 0; t < 50; ++t) {
      Vector z(n);
      for (double &v : z) v = ud(rng);
      double lin = 0.0;
      for (std::size_t i = 0; i < n; ++i) lin += beta * g[i] * (z[i] - x[i]);
      EXPECT_GE(beta * tv_value(z), beta * tv_value(x) + lin - sigma - 1e-9);
    }
  }
}

TEST(EpsilonOfDual, ZeroForTheExactMaximizer) {
  const Vector x{0.0, 3.0, 1.0, 2.0};
  const DualStep d = dual_update(DualVar::zeros(4), x, 1e6, 1.0);
  EXPECT_NEAR(epsilon_of_dual(x, d.y, 1.0), 0.0, 1e-9);
}

TEST(EpsilonOfDual, RejectsInfeasibleDual) {
  const Vector x{0.0, 3.0, 0.0, 0.0};
  DualVar y = DualVar::zeros(4);
  y.y[0] = 5.0;
  EXPECT_THROW(epsilon_of_dual(x, y, 1.0), DomainError);
}

TEST(UpdateAux, SingleStepByHand) {
  // N = 2: the wrap neighbours of (0,0) are (1,0) and (0,1).
  const Vector x{1.0, 2.0, 3.0, 4.0};
  const ShrinkFactors s{{0.5, 0.25, 1.0, 0.125}};
  const AuxDecomp a = update_aux(AuxDecomp::zeros(4), x, s, 2.0, 0.5);
  // w = beta^2 tau = 0.5
  EXPECT_DOUBLE_EQ(a.p[0], 0.5 * 1.0 * 0.5);
  EXPECT_DOUBLE_EQ(a.q[0], 0.5 * 1.0 * 0.25);  // s at (i-1, j) = (1, 0)
  EXPECT_DOUBLE_EQ(a.r[0], 0.5 * 1.0 * 1.0);   // s at (i, j-1) = (0, 1)
  EXPECT_DOUBLE_EQ(a.q[3], 0.5 * 4.0 * 1.0);   // (1,1): (0,1)
  EXPECT_DOUBLE_EQ(a.r[3], 0.5 * 4.0 * 0.25);  // (1,1): (1,0)
  EXPECT_THROW(update_aux(AuxDecomp::zeros(4), Vector(9, 1.0), s, 1.0, 1.0), DimensionError);
}

TEST(UpdateAux, MatchesExplicitSplit) {
  const Small sm = make_small(5, 0.7, 11);
  SpdhgEngine eng(sm.problem, PolySchedule{0.5, 0.3, 1, 1, 0, 1}, false);
  ProblemOracle o = eng.oracle();
  oracle::History h{sm.N, sm.problem.beta, {}, {}, {}};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ud(0.0, 30.0);
  for (std::size_t k = 0; k < 12; ++k) {
    Vector x(sm.N * sm.N);
    for (double &v : x) v = ud(rng);
    const Subgradient g = o.eps_subgradient(x, k);
    h.x.push_back(x);
    h.s.push_back(eng.shrink().s);
    h.tau.push_back(eng.tau());
    const oracle::Split sp = oracle::split_from_history(h);
    Vector V_lib(x.size());
    for (std::size_t l = 0; l < x.size(); ++l) V_lib[l] = 2 * eng.aux().p[l] + eng.aux().q[l] + eng.aux().r[l];
    EXPECT_LE(max_abs_diff(V_lib, sp.V), 1e-10 * std::max(1.0, max_abs(sp.V))) << "k=" << k;
    const Vector dual = div_op(eng.dual().y);
    Vector lib(x.size()), split(x.size());
    for (std::size_t l = 0; l < x.size(); ++l) {
      lib[l] = sm.problem.beta * dual[l];
      split[l] = sp.V[l] - sp.U[l];
    }
    EXPECT_LE(max_abs_diff(lib, split), 1e-10 * std::max(1.0, max_abs(sp.V))) << "k=" << k;
    EXPECT_LE(max_abs_diff(lib, oracle::dual_term_from_history(h)), 1e-10 * std::max(1.0, max_abs(sp.V)));
    for (double v : sp.U) EXPECT_GE(v, 0.0);
  }
}

TEST(PositivePart, AddsAndChecks) {
  const AuxDecomp a{{1.0, 0.0}, {0.5, 0.0}, {0.25, 0.0}};
  const Vector V = positive_part(a, Vector{1.0, 2.0});
  EXPECT_DOUBLE_EQ(V[0], 1.0 + 2.0 + 0.5 + 0.25);
  EXPECT_DOUBLE_EQ(V[1], 2.0);
  EXPECT_THROW(positive_part(a, Vector{1.0, 0.0}), DomainError);
  EXPECT_THROW(positive_part(a, Vector{1.0}), DimensionError);
}

TEST(BuildScaling, ClampsRatio) {
  const DiagMetric D = build_scaling(Vector{1.0, 100.0, 0.0, 3.0}, Vector{1.0, 1.0, 1.0, 2.0}, 2.0);
  EXPECT_EQ(D[0], 1.0);
  EXPECT_EQ(D[1], 2.0);
  EXPECT_EQ(D[2], 0.5);
  EXPECT_EQ(D[3], 1.5);
  EXPECT_THROW(build_scaling(Vector{1.0}, Vector{0.0}, 2.0), DomainError);
}

TEST(PrimalUpdate, ProjectedStep) {
  DualVar y = DualVar::zeros(4);
  y.y[0] = 1.0; // A^T y: +1 at (1,0), -1 at (0,0)
  const Vector x{1.0, 1.0, 1.0, 1.0};
  const Vector out = primal_update(x, DiagMetric({2.0, 1.0, 1.0, 1.0}, 2.0), 0.5, Vector{0.0, 0.0, 4.0, 0.0}, y, 2.0);
  EXPECT_DOUBLE_EQ(out[0], 1.0 - 0.5 * 2.0 * (-2.0));
  EXPECT_DOUBLE_EQ(out[1], 0.0);
  EXPECT_DOUBLE_EQ(out[2], 0.0);
  EXPECT_DOUBLE_EQ(out[3], 1.0);
}

TEST(FlatStart, MeanAboveBackground) {
  const Small sm = make_small(4, 0.1, 1, 0.5);
  double mean = 0.0;
  for (double v : sm.problem.kl.g) mean += v;
  mean /= 16.0;
  const Vector x0 = flat_start(sm.problem.kl);
  for (double v : x0) EXPECT_DOUBLE_EQ(v, mean - 0.5);
  KLData bg = sm.problem.kl;
  bg.b = 1e9;
  for (double v : flat_start(bg)) EXPECT_DOUBLE_EQ(v, 1e-3 * mean);
}

TEST(Engine, OutOfOrderQueryIsAnError) {
  const Small sm = make_small(4, 0.1, 1);
  SpdhgEngine eng(sm.problem, PolySchedule{1, 1, 1, 1, 0, 1}, true);
  ProblemOracle o = eng.oracle();
  const Vector x(16, 1.0);
  o.eps_subgradient(x, 0);
  EXPECT_THROW(o.eps_subgradient(x, 2), std::logic_error);
}

TEST(Engine, SubgradientInequalityAlongRun) {
  const Small sm = make_small(6, 0.5, 4);
  SpdhgParams p;
  p.schedule = PolySchedule{0.5, 0.1, 0.5, 0.05, 10, 1};
  p.stop.max_iter = 150;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ud(0.0, 40.0);
  std::size_t checked = 0;
  spdhg_run(sm.problem, p, [&](const StepView &v) {
    if (v.u.empty()) return;
    const double fx = sm.problem.objective(v.x);
    for (int t = 0; t < 10; ++t) {
      Vector z(v.x.size());
      double lin = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = ud(rng);
        lin += v.u[i] * (z[i] - v.x[i]);
      }
      EXPECT_GE(sm.problem.objective(z), fx + lin - v.eps - 1e-8 * std::max(1.0, std::abs(fx)));
    }
    EXPECT_LE(v.eps, 2.0 * 36.0 / (0.5 + 0.1 * double(v.k)) + 1e-12);
    ++checked;
  });
  EXPECT_EQ(checked, 150u);
}

TEST(SpdhgRun, RejectsNonzeroDualStart) {
  const Small sm = make_small(4, 0.1, 1);
  SpdhgParams p;
  p.schedule = PolySchedule{1, 1, 1, 1, 0, 1};
  p.y0 = Vector(32, 0.0);
  EXPECT_NO_THROW(spdhg_run(sm.problem, p));
  (*p.y0)[5] = 0.1;
  EXPECT_THROW(spdhg_run(sm.problem, p), ConfigError);
}

TEST(SpdhgRun, RejectsScheduleOutsideHypotheses) {
  const Small sm = make_small(4, 0.1, 1);
  SpdhgParams p;
  p.schedule = PolySchedule{1, 1, 1, 0, 0, 1};
  EXPECT_THROW(spdhg_run(sm.problem, p), ConfigError);
  p.enforce_schedule = false;
  p.stop.max_iter = 5;
  EXPECT_NO_THROW(spdhg_run(sm.problem, p));
  p.enforce_schedule = true;
  p.mode = SpdhgMode::Level;
  EXPECT_NO_THROW(spdhg_run(sm.problem, p));
  p.schedule.t2 = 0.0;
  EXPECT_THROW(spdhg_run(sm.problem, p), ConfigError);
}

TEST(SpdhgRun, UnitBoundReproducesPlainPrimalDual) {
  const Small sm = make_small(5, 0.3, 9);
  const PolySchedule t{0.5, 0.2, 2.0, 0.1, 0, 1};
  SpdhgParams p;
  p.schedule = t;
  p.stop.max_iter = 60;
  const Vector x0 = flat_start(sm.problem.kl);
  std::vector<Vector> lib;
  spdhg_run(sm.problem, p, [&](const StepView &v) { lib.emplace_back(v.x.begin(), v.x.end()); });
  const auto ref = oracle::pdhg_trajectory(setup_for(sm, t, false), x0, 60);
  ASSERT_EQ(lib.size(), ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    EXPECT_LE(max_abs_diff(lib[k], ref[k]), 1e-12 * std::max(1.0, max_abs(ref[k]))) << "k=" << k;
  }
}

TEST(SpdhgRun, LevelModeReproducesPlainLevelMethod) {
  const Small sm = make_small(5, 0.3, 10);
  const PolySchedule t{0.5, 0.2, 1, 0, 0, 1};
  SpdhgParams p;
  p.mode = SpdhgMode::Level;
  p.schedule = t;
  p.stop.max_iter = 60;
  const Vector x0 = flat_start(sm.problem.kl);
  std::vector<Vector> lib;
  spdhg_run(sm.problem, p, [&](const StepView &v) { lib.emplace_back(v.x.begin(), v.x.end()); });
  const auto ref = oracle::pdhg_trajectory(setup_for(sm, t, true), x0, 60);
  ASSERT_EQ(lib.size(), ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    EXPECT_LE(max_abs_diff(lib[k], ref[k]), 1e-12 * std::max(1.0, max_abs(ref[k]))) << "k=" << k;
  }
}

TEST(SpdhgRun, ScalingStaysWithinBound) {
  const Small sm = make_small(6, 0.2, 12);
  SpdhgParams p;
  p.schedule = PolySchedule{0.5, 0.1, 0.5, 0.05, 50, 1};
  p.stop.max_iter = 100;
  spdhg_run(sm.problem, p, [&](const StepView &v) {
    if (!v.D) return;
    EXPECT_DOUBLE_EQ(v.L, std::sqrt(1.0 + schedule_gamma(p.schedule, v.k)));
    for (double d : v.D->entries()) {
      EXPECT_LE(d, v.L);
      EXPECT_GE(d, 1.0 / v.L);
    }
  });
}

TEST(SpdhgRun, ObjectiveDecreases) {
  const Small sm = make_small(8, 0.05, 13);
  SpdhgParams p;
  p.schedule = PolySchedule{0.5, 1e-2, 0.5, 1e-3, 1e3, 1};
  p.stop.max_iter = 400;
  const SpdhgResult r = spdhg_run(sm.problem, p);
  SpdhgParams long_run = p;
  long_run.stop.max_iter = 20000;
  const double f_ref = spdhg_run(sm.problem, long_run).run.trace.back().f;
  double best = INFINITY;
  for (const IterRecord &rec : r.run.trace) best = std::min(best, rec.f);
  const double f0 = r.run.trace.front().f;
  EXPECT_LT(best - f_ref, 0.1 * (f0 - f_ref)) << f0 << " " << best << " " << f_ref;
  EXPECT_LE(r.y.max_block_norm(), 1.0 + 1e-15);
  for (double v : r.run.x) EXPECT_GE(v, 0.0);
}

TEST(SpdhgRun, FloorIsRespected) {
  const Small sm = make_small(4, 1.0, 14);
  SpdhgParams p;
  p.schedule = PolySchedule{0.5, 0.1, 0.01, 0.01, 0, 1};
  p.eps_floor = 0.25;
  p.stop.max_iter = 50;
  const SpdhgResult r = spdhg_run(sm.problem, p);
  for (double v : r.run.x) EXPECT_GE(v, 0.25);
}
