#include "ssg/harness.hpp"

#include "ssg/error.hpp"
#include "ssg/image_io.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

namespace ssg {

using json = nlohmann::json;

Method parse_method(const std::string &s) {
  std::string u(s);
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (u == "PDHG") return Method::PDHG;
  if (u == "SPDHG") return Method::SPDHG;
  if (u == "SL") return Method::SL;
  if (u == "SSL") return Method::SSL;
  throw ConfigError("unknown method '" + s + "' (expected PDHG, SPDHG, SL or SSL)");
}

const char *to_string(Method m) {
  switch (m) {
  case Method::PDHG: return "PDHG";
  case Method::SPDHG: return "SPDHG";
  case Method::SL: return "SL";
  case Method::SSL: return "SSL";
  }
  return "?";
}

bool is_level(Method m) { return m == Method::SL || m == Method::SSL; }
bool is_scaled(Method m) { return m == Method::SPDHG || m == Method::SSL; }

DeblurProblem ProblemInstance::problem() const {
  return DeblurProblem{KLData{g.data(), H, background}, spec.beta};
}

namespace {

std::shared_ptr<const BlurOperator> make_operator(const ProblemSpec &s, std::size_t N) {
  return std::make_shared<const BlurOperator>(gaussian_psf(s.psf_size, s.psf_sigma), N);
}

void check_problem_spec(const ProblemSpec &s) {
  if (s.N < 8 || s.N > 4096) throw ConfigError("problem.N must be in [8, 4096]");
  if (!(s.hi > s.lo) || !(s.lo >= 0.0) || !std::isfinite(s.hi)) throw ConfigError("problem: need 0 <= lo < hi");
  if (!(s.I_max > 0.0) || !std::isfinite(s.I_max)) throw ConfigError("problem.I_max must be > 0");
  if (!(s.b >= 0.0) || !std::isfinite(s.b)) throw ConfigError("problem.b must be >= 0");
  if (!(s.beta >= 0.0) || !std::isfinite(s.beta)) throw ConfigError("problem.beta must be >= 0");
  if (s.psf_size % 2 == 0 || s.psf_size > s.N) throw ConfigError("problem.psf_size must be odd and <= N");
  if (!(s.psf_sigma > 0.0) || !std::isfinite(s.psf_sigma)) throw ConfigError("problem.psf_sigma must be > 0");
}

json spec_to_json(const ProblemSpec &s) {
  return json{{"id", s.id},         {"kind", to_string(s.kind)}, {"N", s.N},
              {"lo", s.lo},         {"hi", s.hi},                {"I_max", s.I_max},
              {"b", s.b},           {"beta", s.beta},            {"seed", s.seed},
              {"psf_size", s.psf_size}, {"psf_sigma", s.psf_sigma}};
}

} // namespace

ProblemInstance make_problem(const ProblemSpec &spec) {
  check_problem_spec(spec);
  ProblemInstance inst;
  inst.spec = spec;
  inst.x_true = synth_phantom(spec.kind, spec.N, spec.lo, spec.hi);
  inst.H = make_operator(spec, spec.N);
  SimulatedData d = simulate_data(inst.x_true, *inst.H, spec.I_max, spec.b, spec.seed);
  if (spec.b == 0.0 && d.g.min() <= 0.0) {
    throw ConfigError("problem: zero-count pixels with b = 0 leave the KL objective without a minimizer; "
                      "raise lo or I_max, or use b > 0");
  }
  inst.g = std::move(d.g);
  inst.scale = d.scale;
  inst.background = d.background;
  return inst;
}

void write_problem(const std::filesystem::path &dir, const ProblemInstance &inst) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_imgf64(dir / "x_true.imgf64", inst.x_true);
  write_imgf64(dir / "g.imgf64", inst.g);
  json m = spec_to_json(inst.spec);
  m["scale"] = inst.scale;
  m["background"] = inst.background;
  m["g_min"] = inst.g.min();
  m["g_max"] = inst.g.max();
  write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

ProblemInstance load_problem(const std::filesystem::path &dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
  json m;
  try {
    in >> m;
  } catch (const json::exception &e) {
    throw IoError("malformed manifest " + (dir / "manifest.json").string() + ": " + e.what());
  }
  ProblemInstance inst;
  try {
    ProblemSpec &s = inst.spec;
    s.id = m.at("id").get<std::string>();
    s.kind = parse_phantom_kind(m.at("kind").get<std::string>());
    s.N = m.at("N").get<std::size_t>();
    s.lo = m.at("lo").get<double>();
    s.hi = m.at("hi").get<double>();
    s.I_max = m.at("I_max").get<double>();
    s.b = m.at("b").get<double>();
    s.beta = m.at("beta").get<double>();
    s.seed = m.at("seed").get<std::uint64_t>();
    s.psf_size = m.at("psf_size").get<std::size_t>();
    s.psf_sigma = m.at("psf_sigma").get<double>();
    s.path = dir.string();
    inst.scale = m.at("scale").get<double>();
    inst.background = m.at("background").get<double>();
  } catch (const json::exception &e) {
    throw IoError("manifest " + (dir / "manifest.json").string() + ": " + e.what());
  }
  check_problem_spec(inst.spec);
  inst.x_true = read_imgf64(dir / "x_true.imgf64");
  inst.g = read_imgf64(dir / "g.imgf64");
  if (inst.g.side() != inst.spec.N || inst.x_true.side() != inst.spec.N) {
    throw IoError("problem files in " + dir.string() + " disagree with the manifest size");
  }
  inst.H = make_operator(inst.spec, inst.spec.N);
  return inst;
}

ProblemInstance obtain_problem(const ProblemSpec &spec) {
  if (spec.path.empty()) return make_problem(spec);
  ProblemInstance inst = load_problem(spec.path);
  // The manifest fixes the data; beta is a solver choice and may differ.
  inst.spec.beta = spec.beta;
  return inst;
}

PolySchedule ExperimentSpec::default_schedule(Method m) {
  switch (m) {
  case Method::PDHG: return PolySchedule{0.9, 1e-3, 0.2, 1e-5, 0.0, 1.0};
  case Method::SPDHG: return PolySchedule{0.5, 1e-4, 0.5, 1e-5, 1e13, 1.0};
  case Method::SL: return PolySchedule{0.9, 1e-2, 1.0, 0.0, 0.0, 1.0};
  case Method::SSL: return PolySchedule{0.9, 1e-2, 1.0, 0.0, 1e13, 1.0};
  }
  return {};
}

PolySchedule ExperimentSpec::default_reference_schedule() { return PolySchedule{1.0, 1e-3, 0.03, 1e-6, 0.0, 1.0}; }

bool operator==(const ExperimentSpec &a, const ExperimentSpec &b) {
  return a.problem == b.problem && a.method == b.method && a.schedule == b.schedule &&
         a.level.nu1 == b.level.nu1 && a.level.nu2 == b.level.nu2 && a.level.B == b.level.B &&
         a.level.delta0 == b.level.delta0 && a.max_iter == b.max_iter && a.reference_iter == b.reference_iter &&
         a.reference_schedule == b.reference_schedule && a.force_unscaled == b.force_unscaled &&
         a.eps_floor == b.eps_floor;
}

void validate(const ExperimentSpec &spec) {
  check_problem_spec(spec.problem);
  if (!(spec.level.nu1 > 0.0 && spec.level.nu1 < 1.0)) throw ConfigError("schedule.nu1 must be in (0, 1)");
  if (!(spec.level.nu2 > 0.0 && spec.level.nu2 < 1.0)) throw ConfigError("schedule.nu2 must be in (0, 1)");
  if (spec.level.B && !(*spec.level.B > 0.0)) throw ConfigError("schedule.B must be > 0");
  if (spec.level.delta0 && !(*spec.level.delta0 > 0.0)) throw ConfigError("schedule.delta0 must be > 0");
  if (spec.reference_iter == 0) throw ConfigError("method.reference_iter must be >= 1");
  if (!(spec.eps_floor >= 0.0)) throw ConfigError("method.eps_floor must be >= 0");
  const ScheduleReport rep = is_level(spec.method) ? validate_level_schedule(spec.schedule)
                                                   : validate_square_summable(spec.schedule);
  if (!rep.valid()) throw ConfigError(fmt::format("{} schedule rejected: {}", to_string(spec.method), rep.summary()));
  const ScheduleReport ref = validate_square_summable(spec.reference_schedule);
  if (!ref.valid()) throw ConfigError("reference schedule rejected: " + ref.summary());
}

Metrics metrics(std::span<const double> x, double f_x, std::span<const double> x_star, double f_star) {
  if (x.size() != x_star.size()) throw DimensionError("metrics: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - x_star[i]) * (x[i] - x_star[i]);
    den += x_star[i] * x_star[i];
  }
  Metrics m;
  m.e_absolute = !(den > 0.0);
  m.e = m.e_absolute ? std::sqrt(num) : std::sqrt(num / den);
  m.f_absolute = f_star == 0.0;
  m.f_rel = m.f_absolute ? f_x - f_star : (f_x - f_star) / f_star;
  return m;
}

SpdhgParams solver_params(const ExperimentSpec &spec, const ProblemInstance &inst) {
  SpdhgParams p;
  p.mode = is_level(spec.method) ? SpdhgMode::Level : SpdhgMode::Schedule;
  p.schedule = spec.schedule;
  p.scaling = is_scaled(spec.method);
  if (spec.force_unscaled) p.schedule.t5 = 0.0;
  p.level = spec.level;
  p.stop.max_iter = spec.max_iter;
  p.eps_floor = spec.eps_floor;
  p.x0 = flat_start(inst.problem().kl);
  return p;
}

Summary summarize(const std::vector<TraceRecord> &trace) {
  Summary s;
  for (double lvl : {1e-2, 1e-3}) {
    Threshold te{lvl, {}, {}}, tf{lvl, {}, {}};
    for (const TraceRecord &r : trace) {
      if (!te.k && r.e_k <= lvl) {
        te.k = r.k;
        te.time_s = r.time_s;
      }
      if (!tf.k && r.f_k <= lvl) {
        tf.k = r.k;
        tf.time_s = r.time_s;
      }
    }
    s.e_hits.push_back(te);
    s.f_hits.push_back(tf);
  }
  if (!trace.empty()) {
    s.final_e = trace.back().e_k;
    s.final_f = trace.back().f_k;
    s.wall_s = trace.back().time_s;
  }
  return s;
}

ExperimentResult run_experiment(const ExperimentSpec &spec, const ProblemInstance &inst, const Reference &ref,
                                const Observer &observer) {
  validate(spec);
  DeblurProblem prob = inst.problem();
  prob.beta = spec.problem.beta;
  const SpdhgParams params = solver_params(spec, inst);
  if (ref.x_star.size() != prob.size()) throw DimensionError("run_experiment: reference has the wrong size");

  ExperimentResult out;
  out.trace.reserve(spec.max_iter + 1);
  auto record = [&](const StepView &v) {
    const Metrics m = metrics(v.x, v.f, ref.x_star, ref.f_star);
    TraceRecord t;
    t.k = v.k;
    t.time_s = v.record.time_s;
    t.f = v.f;
    t.e_k = m.e;
    t.f_k = m.f_rel;
    t.alpha_k = v.record.alpha_eff;
    t.eps_k = v.record.eps;
    t.delta_l = v.record.delta_l;
    t.u_norm = v.record.u_norm;
    out.trace.push_back(t);
    if (observer) observer(v);
  };
  SpdhgResult r = spdhg_run(prob, params, record);
  out.status = r.run.status;
  out.diverged_at = r.run.diverged_at;
  out.message = r.run.message;
  out.x = std::move(r.run.x);
  out.level = r.run.level;
  out.summary = summarize(out.trace);
  return out;
}

namespace {

std::string num(double v) { return std::isfinite(v) ? fmt::format("{:.17g}", v) : std::string(); }

json threshold_json(const Threshold &t) {
  json j{{"level", t.level}};
  j["k"] = t.k ? json(*t.k) : json(nullptr);
  j["time_s"] = t.time_s ? json(*t.time_s) : json(nullptr);
  return j;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

void write_trace_csv(const std::filesystem::path &path, const std::vector<TraceRecord> &trace) {
  std::string s = "k,time_s,f,e_k,f_k,alpha_k,eps_k,delta_l,u_norm\n";
  for (const TraceRecord &r : trace) {
    s += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.k, num(r.time_s), num(r.f), num(r.e_k), num(r.f_k),
                     num(r.alpha_k), num(r.eps_k), num(r.delta_l), num(r.u_norm));
  }
  write_file_atomic(path, s);
}

std::string summary_json(const ExperimentSpec &spec, const ExperimentResult &res, const Reference &ref) {
  json j;
  j["method"] = to_string(spec.method);
  j["problem"] = spec_to_json(spec.problem);
  j["iterations"] = res.trace.empty() ? 0 : res.trace.back().k;
  j["status"] = to_string(res.status);
  if (res.diverged_at) j["diverged_at"] = *res.diverged_at;
  if (!res.message.empty()) j["message"] = res.message;
  j["final_e"] = finite_or_null(res.summary.final_e);
  j["final_f"] = finite_or_null(res.summary.final_f);
  j["wall_s"] = res.summary.wall_s;
  json e = json::array(), f = json::array();
  for (const Threshold &t : res.summary.e_hits) e.push_back(threshold_json(t));
  for (const Threshold &t : res.summary.f_hits) f.push_back(threshold_json(t));
  j["e_thresholds"] = e;
  j["f_thresholds"] = f;
  j["reference"] = json{{"key", ref.key},
                        {"f_star", ref.f_star},
                        {"iterations", ref.iterations},
                        {"converged", ref.converged},
                        {"tail_change", finite_or_null(ref.tail_change)}};
  if (res.level) j["levels"] = res.level->l;
  return j.dump(2) + "\n";
}

std::vector<SweepPoint> sweep_beta(const ExperimentSpec &spec, const std::vector<double> &betas, std::size_t budget,
                                   unsigned jobs) {
  if (betas.empty()) throw ConfigError("sweep: no beta values");
  std::vector<SweepPoint> out(betas.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < betas.size();) {
      try {
        ExperimentSpec s = spec;
        s.problem.beta = betas[i];
        s.reference_iter = budget;
        const ProblemInstance inst = obtain_problem(s.problem);
        const Reference ref = reference_solution(inst, s);
        double num = 0.0, den = 0.0;
        for (std::size_t l = 0; l < ref.x_star.size(); ++l) {
          const double d = ref.x_star[l] - inst.x_true.data()[l];
          num += d * d;
          den += inst.x_true.data()[l] * inst.x_true.data()[l];
        }
        out[i] = SweepPoint{betas[i], std::sqrt(num / den), ref.f_star};
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(betas.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

} // namespace ssg
