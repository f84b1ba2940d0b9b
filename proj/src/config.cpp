#include "ssg/config.hpp"

#include "ssg/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ssg {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string &s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

const std::map<std::string, std::set<std::string>> &known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"problem", {"id", "kind", "N", "lo", "hi", "I_max", "b", "beta", "seed", "psf_size", "psf_sigma", "path"}},
      {"method", {"name", "max_iter", "reference_iter", "reference_t", "force_unscaled", "eps_floor"}},
      {"schedule", {"t1", "t2", "t3", "t4", "t5", "t6", "nu1", "nu2", "B", "delta0"}},
      {"output", {"dir", "plot"}},
  };
  return keys;
}

std::string g17(double v) { return fmt::format("{:.17g}", v); }

} // namespace

double parse_double(const std::string &raw, const std::string &what) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char *end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end) throw ConfigError(what + ": not a number: '" + raw + "'");
  if (!std::isfinite(v)) throw ConfigError(what + ": value must be finite");
  return v;
}

std::uint64_t parse_uint(const std::string &raw, const std::string &what) {
  const std::string s = trim(raw);
  std::uint64_t v = 0;
  const char *end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec == std::errc::result_out_of_range) throw ConfigError(what + ": value out of range");
  if (s.empty() || ec != std::errc() || p != end) {
    throw ConfigError(what + ": not a nonnegative integer: '" + raw + "'");
  }
  return v;
}

bool parse_bool(const std::string &raw, const std::string &what) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(what + ": expected true or false, got '" + raw + "'");
}

std::vector<double> parse_list(const std::string &s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_double(item, "list entry"));
  return out;
}

PolySchedule parse_schedule(const std::string &s) {
  const std::vector<double> t = parse_list(s);
  if (t.size() != 6) throw ConfigError("schedule needs six comma-separated values t1..t6, got " + std::to_string(t.size()));
  return PolySchedule{t[0], t[1], t[2], t[3], t[4], t[5]};
}

Config parse_config(const std::string &text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (const auto &[section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config key '" + section + "' outside a section");
    auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto &[key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
    }
  }
  auto get = [&](const std::string &path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
  };

  Config c;
  ExperimentSpec &e = c.experiment;
  ProblemSpec &p = e.problem;
  if (auto v = get("problem.id")) p.id = *v;
  if (auto v = get("problem.kind")) p.kind = parse_phantom_kind(*v);
  if (auto v = get("problem.N")) p.N = parse_uint(*v, "problem.N");
  if (auto v = get("problem.lo")) p.lo = parse_double(*v, "problem.lo");
  if (auto v = get("problem.hi")) p.hi = parse_double(*v, "problem.hi");
  if (auto v = get("problem.I_max")) p.I_max = parse_double(*v, "problem.I_max");
  if (auto v = get("problem.b")) p.b = parse_double(*v, "problem.b");
  if (auto v = get("problem.beta")) p.beta = parse_double(*v, "problem.beta");
  if (auto v = get("problem.seed")) p.seed = parse_uint(*v, "problem.seed");
  if (auto v = get("problem.psf_size")) p.psf_size = parse_uint(*v, "problem.psf_size");
  if (auto v = get("problem.psf_sigma")) p.psf_sigma = parse_double(*v, "problem.psf_sigma");
  if (auto v = get("problem.path")) p.path = *v;

  if (auto v = get("method.name")) e.method = parse_method(*v);
  e.schedule = ExperimentSpec::default_schedule(e.method);
  if (auto v = get("method.max_iter")) e.max_iter = parse_uint(*v, "method.max_iter");
  if (auto v = get("method.reference_iter")) e.reference_iter = parse_uint(*v, "method.reference_iter");
  if (auto v = get("method.reference_t")) e.reference_schedule = parse_schedule(*v);
  if (auto v = get("method.force_unscaled")) e.force_unscaled = parse_bool(*v, "method.force_unscaled");
  if (auto v = get("method.eps_floor")) e.eps_floor = parse_double(*v, "method.eps_floor");

  double *t[] = {&e.schedule.t1, &e.schedule.t2, &e.schedule.t3, &e.schedule.t4, &e.schedule.t5, &e.schedule.t6};
  for (int i = 0; i < 6; ++i) {
    const std::string key = fmt::format("schedule.t{}", i + 1);
    if (auto v = get(key)) *t[i] = parse_double(*v, key);
  }
  if (auto v = get("schedule.nu1")) e.level.nu1 = parse_double(*v, "schedule.nu1");
  if (auto v = get("schedule.nu2")) e.level.nu2 = parse_double(*v, "schedule.nu2");
  if (auto v = get("schedule.B")) e.level.B = parse_double(*v, "schedule.B");
  if (auto v = get("schedule.delta0")) e.level.delta0 = parse_double(*v, "schedule.delta0");

  if (auto v = get("output.dir")) c.output.dir = *v;
  if (auto v = get("output.plot")) c.output.plot = parse_bool(*v, "output.plot");

  constexpr std::uint64_t kMaxIter = 100'000'000;
  if (e.max_iter > kMaxIter) throw ConfigError("method.max_iter must be <= 1e8");
  if (e.reference_iter > kMaxIter) throw ConfigError("method.reference_iter must be <= 1e8");
  validate(e);
  return c;
}

Config load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const Config &c) {
  const ExperimentSpec &e = c.experiment;
  const ProblemSpec &p = e.problem;
  const PolySchedule &s = e.schedule;
  const PolySchedule &r = e.reference_schedule;
  std::string out = "[problem]\n";
  out += fmt::format("id = {}\nkind = {}\nN = {}\nlo = {}\nhi = {}\nI_max = {}\nb = {}\nbeta = {}\nseed = {}\n"
                     "psf_size = {}\npsf_sigma = {}\n",
                     p.id, to_string(p.kind), p.N, g17(p.lo), g17(p.hi), g17(p.I_max), g17(p.b), g17(p.beta),
                     p.seed, p.psf_size, g17(p.psf_sigma));
  if (!p.path.empty()) out += "path = " + p.path + "\n";
  out += "\n[method]\n";
  out += fmt::format("name = {}\nmax_iter = {}\nreference_iter = {}\nreference_t = {},{},{},{},{},{}\n"
                     "force_unscaled = {}\neps_floor = {}\n",
                     to_string(e.method), e.max_iter, e.reference_iter, g17(r.t1), g17(r.t2), g17(r.t3), g17(r.t4),
                     g17(r.t5), g17(r.t6), e.force_unscaled ? "true" : "false", g17(e.eps_floor));
  out += "\n[schedule]\n";
  out += fmt::format("t1 = {}\nt2 = {}\nt3 = {}\nt4 = {}\nt5 = {}\nt6 = {}\nnu1 = {}\nnu2 = {}\n", g17(s.t1),
                     g17(s.t2), g17(s.t3), g17(s.t4), g17(s.t5), g17(s.t6), g17(e.level.nu1), g17(e.level.nu2));
  if (e.level.B) out += "B = " + g17(*e.level.B) + "\n";
  if (e.level.delta0) out += "delta0 = " + g17(*e.level.delta0) + "\n";
  out += "\n[output]\n";
  out += fmt::format("dir = {}\nplot = {}\n", c.output.dir, c.output.plot ? "true" : "false");
  return out;
}

} // namespace ssg
