#pragma once

#include "ssg/imaging.hpp"
#include "ssg/solver.hpp"
#include "ssg/spdhg.hpp"
#include "ssg/stepsize.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ssg {

enum class Method { PDHG, SPDHG, SL, SSL };

/// Accepts the names case-insensitively. Throws ConfigError.
Method parse_method(const std::string &s);
const char *to_string(Method m);
bool is_level(Method m);
bool is_scaled(Method m);

/// Everything needed to regenerate a test problem.
struct ProblemSpec {
  std::string id = "disks";
  PhantomKind kind = PhantomKind::Disks;
  std::size_t N = 32;
  /// Intensity range of the synthetic original image.
  double lo = 0.0;
  double hi = 1000.0;
  double I_max = 1.0;
  double b = 10.0;
  double beta = 0.01;
  std::uint64_t seed = 7;
  /// Gaussian psf, m x m with m odd.
  std::size_t psf_size = 9;
  double psf_sigma = 1.3;
  /// Directory written by make-problem; when set, x_true and g are read
  /// from it instead of being simulated.
  std::string path;

  bool operator==(const ProblemSpec &) const = default;
};

struct ProblemInstance {
  ProblemSpec spec;
  ImageGrid x_true;
  ImageGrid g;
  double scale = 1.0;
  /// Background in the units of g (b / scale).
  double background = 0.0;
  std::shared_ptr<const BlurOperator> H;

  DeblurProblem problem() const;
};

ProblemInstance make_problem(const ProblemSpec &spec);
/// x_true.imgf64, g.imgf64 and manifest.json under `dir`.
void write_problem(const std::filesystem::path &dir, const ProblemInstance &inst);
ProblemInstance load_problem(const std::filesystem::path &dir);
/// make_problem or load_problem depending on spec.path.
ProblemInstance obtain_problem(const ProblemSpec &spec);

struct ExperimentSpec {
  ProblemSpec problem;
  Method method = Method::SPDHG;
  PolySchedule schedule = default_schedule(Method::SPDHG);
  LevelParams level;
  std::size_t max_iter = 3000;
  std::size_t reference_iter = 100000;
  PolySchedule reference_schedule = default_reference_schedule();
  /// Force L_k = 1 (gamma = 0) so the scaled methods run unscaled.
  bool force_unscaled = false;
  double eps_floor = 0.0;

  static PolySchedule default_schedule(Method m);
  static PolySchedule default_reference_schedule();
};

bool operator==(const ExperimentSpec &a, const ExperimentSpec &b);

/// Throws ConfigError on incompatible or out-of-range fields.
void validate(const ExperimentSpec &spec);

struct TraceRecord {
  std::size_t k = 0;
  double time_s = 0.0;
  double f = kNaN;
  double e_k = kNaN;
  double f_k = kNaN;
  double alpha_k = kNaN;
  double eps_k = kNaN;
  double delta_l = kNaN;
  double u_norm = kNaN;
};

struct Metrics {
  double e = 0.0;
  double f_rel = 0.0;
  /// |x - x*| was used because |x*| = 0.
  bool e_absolute = false;
  /// f - f* was used because f* = 0.
  bool f_absolute = false;
};

Metrics metrics(std::span<const double> x, double f_x, std::span<const double> x_star, double f_star);

struct Reference {
  Vector x_star;
  double f_star = kNaN;
  std::size_t iterations = 0;
  /// |f(x^K) - f(x^{K - K/10})| / |f(x^K)|, the change over the last tenth of the run.
  double tail_change = kNaN;
  bool converged = false;
  bool cache_hit = false;
  std::string key;
  std::string diagnostic;
};

/// Tolerance on the final relative change of f below which the
/// reference run is reported as converged.
inline constexpr double kReferenceTol = 1e-8;

/// Hex FNV-1a hash of the problem data and reference settings.
std::string reference_key(const ProblemInstance &inst, const ExperimentSpec &spec);

/// Long unscaled primal-dual run. With a cache directory the result is
/// stored under <cache>/<key>/ and reused on later calls.
Reference reference_solution(const ProblemInstance &inst, const ExperimentSpec &spec,
                             const std::optional<std::filesystem::path> &cache_dir = std::nullopt);

/// $SSG_CACHE_DIR, or "cache".
std::filesystem::path default_cache_dir();

struct Threshold {
  double level;
  std::optional<std::size_t> k;
  std::optional<double> time_s;
};

struct Summary {
  std::vector<Threshold> e_hits;
  std::vector<Threshold> f_hits;
  double final_e = kNaN;
  double final_f = kNaN;
  double wall_s = 0.0;
};

/// First iterations reaching e^k <= 1e-2, 1e-3 (and the same for f^k),
/// computed from the trace alone.
Summary summarize(const std::vector<TraceRecord> &trace);

struct ExperimentResult {
  std::vector<TraceRecord> trace;
  Summary summary;
  RunStatus status = RunStatus::MaxIter;
  std::optional<std::size_t> diverged_at;
  std::string message;
  Vector x;
  std::optional<LevelState> level;
};

SpdhgParams solver_params(const ExperimentSpec &spec, const ProblemInstance &inst);

ExperimentResult run_experiment(const ExperimentSpec &spec, const ProblemInstance &inst, const Reference &ref,
                                const Observer &observer = {});

void write_trace_csv(const std::filesystem::path &path, const std::vector<TraceRecord> &trace);
std::string summary_json(const ExperimentSpec &spec, const ExperimentResult &res, const Reference &ref);

struct SweepPoint {
  double beta;
  /// |x*(beta) - x_true| / |x_true| with x*(beta) from a reference run.
  double restoration_error;
  double f_star;
};

/// Coarse regularization sweep used to pick beta.
std::vector<SweepPoint> sweep_beta(const ExperimentSpec &spec, const std::vector<double> &betas,
                                   std::size_t budget, unsigned jobs = 1);

} // namespace ssg
