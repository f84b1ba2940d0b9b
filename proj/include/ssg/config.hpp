#pragma once

#include "ssg/harness.hpp"

#include <filesystem>
#include <string>

namespace ssg {

struct OutputSpec {
  std::string dir = "out";
  bool plot = false;

  bool operator==(const OutputSpec &) const = default;
};

/// Contents of an ini-style run configuration:
///
///   [problem]  id kind N lo hi I_max b beta seed psf_size psf_sigma path
///   [method]   name max_iter reference_iter reference_t force_unscaled eps_floor
///   [schedule] t1 t2 t3 t4 t5 t6 nu1 nu2 B delta0
///   [output]   dir plot
///
/// Schedule keys that are absent take the method's default.
struct Config {
  ExperimentSpec experiment;
  OutputSpec output;

  bool operator==(const Config &o) const { return experiment == o.experiment && output == o.output; }
};

/// Throws ConfigError on syntax errors, unknown sections or keys, and
/// values that fail to parse or are out of range.
Config parse_config(const std::string &text);
Config load_config(const std::filesystem::path &path);
/// Every field, with doubles printed to full precision, so that
/// parse_config(dump_config(c)) == c.
std::string dump_config(const Config &c);

/// "t1,t2,t3,t4,t5,t6"
PolySchedule parse_schedule(const std::string &s);
std::vector<double> parse_list(const std::string &s);
double parse_double(const std::string &s, const std::string &what);
std::uint64_t parse_uint(const std::string &s, const std::string &what);
bool parse_bool(const std::string &s, const std::string &what);

} // namespace ssg
