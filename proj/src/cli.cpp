#include "ssg/cli.hpp"

#include "ssg/config.hpp"
#include "ssg/error.hpp"
#include "ssg/harness.hpp"
#include "ssg/image_io.hpp"
#include "ssg/plot.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <mutex>
#include <ostream>
#include <thread>

namespace ssg {

namespace {

/// Command-line values; each is applied only when given.
struct Overrides {
  std::string config;
  std::optional<std::string> id, kind, problem_dir, method, t, reference_t, out_dir;
  std::optional<std::uint64_t> N, seed, psf_size, max_iter, reference_iter;
  std::optional<double> lo, hi, I_max, b, beta, psf_sigma, eps_floor, nu1, nu2, B, delta0;
  bool force_unscaled = false;
  bool plot = false;
  bool dump = false;
  std::optional<std::string> cache_dir;
  unsigned jobs = 1;
};

void add_common(CLI::App *app, Overrides &o) {
  app->add_option("--config", o.config, "ini configuration file");
  app->add_option("--id", o.id, "problem id");
  app->add_option("--kind", o.kind, "phantom kind: disks, blocks, ramp");
  app->add_option("--N", o.N, "image side");
  app->add_option("--lo", o.lo, "lowest phantom intensity");
  app->add_option("--hi", o.hi, "highest phantom intensity");
  app->add_option("--I-max", o.I_max, "peak intensity before noise");
  app->add_option("--b", o.b, "background");
  app->add_option("--beta", o.beta, "TV weight");
  app->add_option("--seed", o.seed, "noise seed");
  app->add_option("--psf-size", o.psf_size, "psf support (odd)");
  app->add_option("--psf-sigma", o.psf_sigma, "psf standard deviation");
  app->add_flag("--dump-config", o.dump, "print the effective configuration and exit");
}

void add_solver(CLI::App *app, Overrides &o) {
  app->add_option("--problem", o.problem_dir, "directory written by make-problem");
  app->add_option("--max-iter", o.max_iter, "iteration budget");
  app->add_option("--reference-iter", o.reference_iter, "iteration budget of the reference run");
  app->add_option("--reference-t", o.reference_t, "reference schedule t1,...,t6");
  app->add_option("--eps-floor", o.eps_floor, "lower bound on pixel values");
  app->add_option("--nu1", o.nu1, "level rule: descent fraction");
  app->add_option("--nu2", o.nu2, "level rule: shrink factor");
  app->add_option("--B", o.B, "level rule: path bound");
  app->add_option("--delta0", o.delta0, "level rule: initial gap");
  app->add_flag("--force-unscaled", o.force_unscaled, "force L_k = 1");
  app->add_flag("--plot", o.plot, "write SVG plots");
  app->add_option("--cache-dir", o.cache_dir, "reference cache (default $SSG_CACHE_DIR or ./cache)");
  app->add_option("--jobs", o.jobs, "concurrent runs")->check(CLI::Range(1u, 256u));
}

Config effective_config(const Overrides &o) {
  Config c = o.config.empty() ? parse_config("") : load_config(o.config);
  ExperimentSpec &e = c.experiment;
  ProblemSpec &p = e.problem;
  if (o.id) p.id = *o.id;
  if (o.kind) p.kind = parse_phantom_kind(*o.kind);
  if (o.N) p.N = *o.N;
  if (o.lo) p.lo = *o.lo;
  if (o.hi) p.hi = *o.hi;
  if (o.I_max) p.I_max = *o.I_max;
  if (o.b) p.b = *o.b;
  if (o.beta) p.beta = *o.beta;
  if (o.seed) p.seed = *o.seed;
  if (o.psf_size) p.psf_size = *o.psf_size;
  if (o.psf_sigma) p.psf_sigma = *o.psf_sigma;
  if (o.problem_dir) p.path = *o.problem_dir;
  if (o.method) {
    const Method m = parse_method(*o.method);
    if (m != e.method && e.schedule == ExperimentSpec::default_schedule(e.method)) {
      e.schedule = ExperimentSpec::default_schedule(m);
    }
    e.method = m;
  }
  if (o.t) e.schedule = parse_schedule(*o.t);
  if (o.reference_t) e.reference_schedule = parse_schedule(*o.reference_t);
  if (o.max_iter) e.max_iter = *o.max_iter;
  if (o.reference_iter) e.reference_iter = *o.reference_iter;
  if (o.eps_floor) e.eps_floor = *o.eps_floor;
  if (o.nu1) e.level.nu1 = *o.nu1;
  if (o.nu2) e.level.nu2 = *o.nu2;
  if (o.B) e.level.B = *o.B;
  if (o.delta0) e.level.delta0 = *o.delta0;
  if (o.force_unscaled) e.force_unscaled = true;
  if (o.out_dir) c.output.dir = *o.out_dir;
  if (o.plot) c.output.plot = true;
  // Round trip through the text form so CLI values get the same checks.
  return parse_config(dump_config(c));
}

std::filesystem::path cache_dir(const Overrides &o) {
  return o.cache_dir ? std::filesystem::path(*o.cache_dir) : default_cache_dir();
}

void ensure_dir(const std::filesystem::path &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

Reference shared_reference(const ProblemInstance &inst, const ExperimentSpec &spec, const Overrides &o,
                           std::ostream &err) {
  Reference ref = reference_solution(inst, spec, cache_dir(o));
  if (!ref.converged) err << "warning: " << ref.diagnostic << "\n";
  return ref;
}

int cmd_make_problem(const Config &c, std::ostream &out) {
  const ProblemInstance inst = make_problem(c.experiment.problem);
  const std::filesystem::path dir = c.output.dir;
  write_problem(dir, inst);
  write_pgm(dir / "x_true.pgm", inst.x_true);
  write_pgm(dir / "g.pgm", inst.g);
  out << fmt::format("wrote {} ({}x{}, scale {:.6g}, background {:.6g}, g in [{:.6g}, {:.6g}])\n", dir.string(),
                     inst.spec.N, inst.spec.N, inst.scale, inst.background, inst.g.min(), inst.g.max());
  return kExitOk;
}

struct MethodOutcome {
  Method method;
  ExperimentResult result;
  std::string error;
  int code = kExitOk;
};

int status_code(const ExperimentResult &r) { return r.status == RunStatus::Diverged ? kExitDivergence : kExitOk; }

void write_outputs(const std::filesystem::path &dir, const ExperimentSpec &spec, const ExperimentResult &r,
                   const Reference &ref) {
  const std::string stem = to_string(spec.method);
  write_trace_csv(dir / (stem + ".csv"), r.trace);
  write_file_atomic(dir / (stem + "_summary.json"), summary_json(spec, r, ref));
}

std::string describe(const ExperimentResult &r) {
  auto hit = [](const Threshold &t) { return t.k ? fmt::format("k={} t={:.3g}s", *t.k, *t.time_s) : "-"; };
  return fmt::format("{} after {} iterations, e={:.3e} f={:.3e}; e<=1e-2: {}; e<=1e-3: {}",
                     to_string(r.status), r.trace.empty() ? 0 : r.trace.back().k, r.summary.final_e,
                     r.summary.final_f, hit(r.summary.e_hits[0]), hit(r.summary.e_hits[1]));
}

int cmd_solve(const Config &c, const Overrides &o, std::ostream &out, std::ostream &err) {
  ExperimentSpec spec = c.experiment;
  const ProblemInstance inst = obtain_problem(spec.problem);
  spec.problem = inst.spec;
  const Reference ref = shared_reference(inst, spec, o, err);
  const ExperimentResult r = run_experiment(spec, inst, ref);
  const std::filesystem::path dir = c.output.dir;
  ensure_dir(dir);
  write_outputs(dir, spec, r, ref);
  if (c.output.plot) write_svg(dir / (std::string(to_string(spec.method)) + ".svg"),
                               convergence_panels({{to_string(spec.method), r.trace}}));
  out << to_string(spec.method) << ": " << describe(r) << "\n";
  if (r.status == RunStatus::Diverged) err << "diverged: " << r.message << "\n";
  return status_code(r);
}

int exit_code_of(std::exception_ptr e, std::string &what) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError &x) {
    what = x.what();
    return kExitConfig;
  } catch (const DivergenceError &x) {
    what = x.what();
    return kExitDivergence;
  } catch (const DomainError &x) {
    what = x.what();
    return kExitDivergence;
  } catch (const IoError &x) {
    what = x.what();
    return kExitIo;
  } catch (const std::exception &x) {
    what = x.what();
    return kExitFailure;
  }
}

template <class F> void parallel_for(std::size_t n, unsigned jobs, F &&body) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) body(i);
  };
  const unsigned k = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < k; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
}

int cmd_bench(const Config &c, const Overrides &o, const std::vector<std::string> &names,
              const std::map<Method, std::string> &schedules, std::ostream &out, std::ostream &err) {
  std::vector<Method> methods;
  for (const std::string &n : names) methods.push_back(parse_method(n));
  if (methods.empty()) methods = {Method::PDHG, Method::SPDHG, Method::SL, Method::SSL};

  ExperimentSpec base = c.experiment;
  const ProblemInstance inst = obtain_problem(base.problem);
  base.problem = inst.spec;
  std::vector<ExperimentSpec> specs;
  for (Method m : methods) {
    ExperimentSpec s = base;
    s.method = m;
    if (auto it = schedules.find(m); it != schedules.end()) {
      s.schedule = parse_schedule(it->second);
    } else if (m != c.experiment.method) {
      s.schedule = ExperimentSpec::default_schedule(m);
    }
    validate(s);
    specs.push_back(s);
  }

  const Reference ref = shared_reference(inst, base, o, err);
  const std::filesystem::path dir = c.output.dir;
  ensure_dir(dir);

  std::vector<MethodOutcome> outcomes(specs.size());
  parallel_for(specs.size(), o.jobs, [&](std::size_t i) {
    outcomes[i].method = specs[i].method;
    try {
      outcomes[i].result = run_experiment(specs[i], inst, ref);
      write_outputs(dir, specs[i], outcomes[i].result, ref);
      outcomes[i].code = status_code(outcomes[i].result);
      if (outcomes[i].code != kExitOk) outcomes[i].error = outcomes[i].result.message;
    } catch (...) {
      outcomes[i].code = exit_code_of(std::current_exception(), outcomes[i].error);
    }
  });

  std::vector<std::pair<std::string, std::vector<TraceRecord>>> runs;
  int code = kExitOk;
  for (const MethodOutcome &m : outcomes) {
    if (m.code == kExitOk || !m.result.trace.empty()) runs.emplace_back(to_string(m.method), m.result.trace);
    if (m.code == kExitOk) {
      out << to_string(m.method) << ": " << describe(m.result) << "\n";
    } else {
      err << to_string(m.method) << ": failed: " << m.error << "\n";
      if (code == kExitOk) code = m.code;
    }
  }
  write_svg(dir / "bench.svg", convergence_panels(runs));
  return code;
}

int cmd_sweep(const Config &c, const Overrides &o, const std::string &betas, const std::vector<std::string> &ts,
              std::uint64_t budget, std::ostream &out, std::ostream &err) {
  const std::filesystem::path dir = c.output.dir;
  if (betas.empty() && ts.empty()) throw ConfigError("sweep: give --betas and/or --t");
  ensure_dir(dir);
  if (!betas.empty()) {
    const auto pts = sweep_beta(c.experiment, parse_list(betas), budget, o.jobs);
    std::string csv = "beta,restoration_error,f_star\n";
    const SweepPoint *best = &pts.front();
    for (const SweepPoint &p : pts) {
      csv += fmt::format("{:.17g},{:.17g},{:.17g}\n", p.beta, p.restoration_error, p.f_star);
      if (p.restoration_error < best->restoration_error) best = &p;
    }
    write_file_atomic(dir / "sweep_beta.csv", csv);
    out << fmt::format("best beta {:.6g} (restoration error {:.4g})\n", best->beta, best->restoration_error);
  }
  if (!ts.empty()) {
    ExperimentSpec base = c.experiment;
    const ProblemInstance inst = obtain_problem(base.problem);
    base.problem = inst.spec;
    const Reference ref = shared_reference(inst, base, o, err);
    std::vector<ExperimentSpec> specs;
    for (const std::string &t : ts) {
      ExperimentSpec s = base;
      s.schedule = parse_schedule(t);
      validate(s);
      specs.push_back(s);
    }
    std::vector<Summary> sums(specs.size());
    std::vector<std::string> errors(specs.size());
    parallel_for(specs.size(), o.jobs, [&](std::size_t i) {
      try {
        sums[i] = run_experiment(specs[i], inst, ref).summary;
      } catch (...) {
        exit_code_of(std::current_exception(), errors[i]);
      }
    });
    std::string csv = "t1,t2,t3,t4,t5,t6,final_e,final_f,error\n";
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const PolySchedule &s = specs[i].schedule;
      csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", s.t1, s.t2, s.t3,
                         s.t4, s.t5, s.t6, sums[i].final_e, sums[i].final_f, errors[i]);
      out << fmt::format("t=({:g},{:g},{:g},{:g},{:g},{:g}) e={:.4g} f={:.4g}{}\n", s.t1, s.t2, s.t3, s.t4, s.t5,
                         s.t6, sums[i].final_e, sums[i].final_f, errors[i].empty() ? "" : " error: " + errors[i]);
    }
    write_file_atomic(dir / "sweep_schedule.csv", csv);
  }
  return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Scaled epsilon-subgradient solvers for Poisson deblurring"};
  app.require_subcommand(1);
  Overrides o;

  CLI::App *make = app.add_subcommand("make-problem", "simulate a blurred noisy test problem");
  add_common(make, o);
  make->add_option("--out", o.out_dir, "output directory");

  CLI::App *solve = app.add_subcommand("solve", "run one method");
  add_common(solve, o);
  add_solver(solve, o);
  solve->add_option("--method", o.method, "PDHG, SPDHG, SL or SSL");
  solve->add_option("--t", o.t, "schedule t1,...,t6");
  solve->add_option("--out", o.out_dir, "output directory");

  CLI::App *bench = app.add_subcommand("bench", "run several methods against one reference");
  add_common(bench, o);
  add_solver(bench, o);
  std::vector<std::string> bench_methods;
  std::map<Method, std::string> bench_t;
  std::string t_pdhg, t_spdhg, t_sl, t_ssl;
  bench->add_option("--methods", bench_methods, "methods to run (default: all four)")->delimiter(',');
  bench->add_option("--t-pdhg", t_pdhg, "PDHG schedule");
  bench->add_option("--t-spdhg", t_spdhg, "SPDHG schedule");
  bench->add_option("--t-sl", t_sl, "SL schedule");
  bench->add_option("--t-ssl", t_ssl, "SSL schedule");
  bench->add_option("--out", o.out_dir, "output directory");

  CLI::App *sweep = app.add_subcommand("sweep", "grid search over beta or schedules");
  add_common(sweep, o);
  add_solver(sweep, o);
  std::string betas;
  std::vector<std::string> sweep_t;
  std::uint64_t budget = 20000;
  sweep->add_option("--method", o.method, "method for schedule sweeps");
  sweep->add_option("--betas", betas, "comma-separated beta grid");
  sweep->add_option("--t", sweep_t, "schedule t1,...,t6 (repeatable)")->take_all()->allow_extra_args(false);
  sweep->add_option("--budget", budget, "reference iterations per beta");
  sweep->add_option("--out", o.out_dir, "output directory");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const Config c = effective_config(o);
    if (o.dump) {
      out << dump_config(c);
      return kExitOk;
    }
    if (*make) return cmd_make_problem(c, out);
    if (*solve) return cmd_solve(c, o, out, err);
    if (*bench) {
      if (!t_pdhg.empty()) bench_t[Method::PDHG] = t_pdhg;
      if (!t_spdhg.empty()) bench_t[Method::SPDHG] = t_spdhg;
      if (!t_sl.empty()) bench_t[Method::SL] = t_sl;
      if (!t_ssl.empty()) bench_t[Method::SSL] = t_ssl;
      return cmd_bench(c, o, bench_methods, bench_t, out, err);
    }
    if (*sweep) return cmd_sweep(c, o, betas, sweep_t, budget, out, err);
  } catch (...) {
    std::string what;
    const int code = exit_code_of(std::current_exception(), what);
    err << "error: " << what << "\n";
    return code;
  }
  return kExitFailure;
}

} // namespace ssg
