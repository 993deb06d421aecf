#pragma once

// Scenario files: line-oriented `key = value` under [section] headers, with
// '#' comments. The same dotted keys are accepted as command-line overrides.

#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pmq/emit.hpp"
#include "pmq/errors.hpp"
#include "pmq/model.hpp"
#include "pmq/optimize.hpp"
#include "pmq/simulator.hpp"

namespace pmq {

enum class RunKind { analyze, simulate, optimize, sweep, validate };

inline const char* to_string(RunKind k) {
  switch (k) {
    case RunKind::analyze: return "analyze";
    case RunKind::simulate: return "simulate";
    case RunKind::optimize: return "optimize";
    case RunKind::sweep: return "sweep";
    case RunKind::validate: return "validate";
  }
  return "?";
}

inline std::optional<RunKind> run_kind_from(const std::string& s) {
  if (s == "analyze") return RunKind::analyze;
  if (s == "simulate") return RunKind::simulate;
  if (s == "optimize") return RunKind::optimize;
  if (s == "sweep") return RunKind::sweep;
  if (s == "validate") return RunKind::validate;
  return std::nullopt;
}

struct SweepAxis {
  std::string key;               // dotted, e.g. "server.frequency"
  std::vector<double> values;    // explicit list; may be empty
};

struct Scenario {
  std::string name;
  std::map<std::string, std::string> values;  // dotted key -> raw text
  std::vector<SweepAxis> axes;                // in file order

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string str_or(const std::string& key, const std::string& def) const {
    auto it = values.find(key);
    return it == values.end() ? def : it->second;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline const std::set<std::string>& known_sections() {
  static const std::set<std::string> s{"server",  "workload", "policy", "farm",
                                       "sim",     "optimize", "sweep"};
  return s;
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> s{
      "name",
      "server.peak_dynamic_power",
      "server.peripheral_power",
      "server.service_rate",
      "server.frequency",
      "workload.arrival_rate",
      "policy.idle_threshold",
      "policy.wakeup_latency",
      "policy.batch_delay",
      "farm.servers",
      "farm.dispatch",
      "farm.join_count",
      "sim.horizon",
      "sim.warmup",
      "sim.replications",
      "sim.seed",
      "optimize.space",
      "optimize.budget",
      "optimize.frequency_step",
      "optimize.servers_min",
      "optimize.servers_max",
      "optimize.batch_delay_grid",
      "sweep.base",
  };
  return s;
}

// keys whose values are plain numbers, hence usable as sweep axes
inline bool numeric_key(const std::string& dotted) {
  if (dotted == "name" || dotted == "farm.dispatch" || dotted == "optimize.space" ||
      dotted == "sweep.base" || dotted == "optimize.batch_delay_grid")
    return false;
  return known_keys().count(dotted) != 0;
}

inline double parse_num(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError(what + ": empty value");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
    throw ParseError(what + ": malformed number '" + t + "'");
  return v;
}

inline long long parse_int(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError(what + ": empty value");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw ParseError(what + ": malformed integer '" + t + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty() || t[0] == '-') throw ParseError(what + ": malformed unsigned integer '" + t + "'");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw ParseError(what + ": malformed unsigned integer '" + t + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline void validate_name(const std::string& n) {
  if (n.empty()) throw ConfigError("scenario name must not be empty");
  for (char ch : n) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' ||
                    ch == '-' || ch == '.';
    if (!ok)
      throw ConfigError("scenario name may only use letters, digits, '.', '_', '-': '" +
                        n + "'");
  }
}

inline SweepAxis parse_axis(const std::string& text, int lineno) {
  const auto where = "line " + std::to_string(lineno);
  const auto parts = split(text, ':');
  if (parts.size() != 2 && parts.size() != 4)
    throw ParseError(where + ": axis needs 'key : v1, v2, ...' or 'key : min : max : step'");
  SweepAxis axis;
  axis.key = trim(parts[0]);
  if (!numeric_key(axis.key))
    throw ConfigError(where + ": '" + axis.key + "' is not a sweepable numeric key");
  if (parts.size() == 2) {
    const std::string list = trim(parts[1]);
    if (!list.empty()) {
      for (const auto& item : split(list, ','))
        axis.values.push_back(parse_num(item, where + ": axis value"));
    }
  } else {
    const double lo = parse_num(parts[1], where + ": axis min");
    const double hi = parse_num(parts[2], where + ": axis max");
    const double step = parse_num(parts[3], where + ": axis step");
    if (step <= 0.0) throw ParseError(where + ": axis step must be positive");
    if (hi < lo) throw ParseError(where + ": axis max below min");
    const auto count =
        static_cast<std::size_t>((hi - lo) / step + 1e-9) + 1;
    for (std::size_t i = 0; i < count; ++i) axis.values.push_back(lo + static_cast<double>(i) * step);
  }
  return axis;
}

}  // namespace detail

inline Scenario parse_scenario_text(const std::string& text,
                                    const std::string& fallback_name) {
  Scenario sc;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where + ": unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (!detail::known_sections().count(section))
        throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(where + ": empty key");
    if (section.empty()) {
      if (key != "name") throw ConfigError(where + ": unknown top-level key '" + key + "'");
      detail::validate_name(value);
      sc.name = value;
      continue;
    }
    if (section == "sweep" && key == "axis") {
      sc.axes.push_back(detail::parse_axis(value, lineno));
      continue;
    }
    const std::string dotted = section + "." + key;
    if (!detail::known_keys().count(dotted))
      throw ConfigError(where + ": unknown key '" + dotted + "'");
    sc.values[dotted] = value;  // last occurrence wins
  }
  if (sc.name.empty()) {
    detail::validate_name(fallback_name);
    sc.name = fallback_name;
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string stem = std::filesystem::path(path).stem().string();
  if (stem.empty()) stem = "scenario";
  return parse_scenario_text(buf.str(), stem);
}

// --set key=value; accepts the same dotted keys as scenario files
inline void apply_override(Scenario& sc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ParseError("override '" + assignment + "' must look like key=value");
  const std::string key = detail::trim(assignment.substr(0, eq));
  const std::string value = detail::trim(assignment.substr(eq + 1));
  if (key == "name") {
    detail::validate_name(value);
    sc.name = value;
    return;
  }
  if (key == "sweep.axis") throw ConfigError("sweep axes cannot be set from the command line");
  if (!detail::known_keys().count(key)) throw ConfigError("unknown key '" + key + "'");
  sc.values[key] = value;
}

inline double scenario_num(const Scenario& sc, const std::string& key, double def) {
  auto it = sc.values.find(key);
  return it == sc.values.end() ? def : detail::parse_num(it->second, key);
}

inline long long scenario_int(const Scenario& sc, const std::string& key, long long def) {
  auto it = sc.values.find(key);
  return it == sc.values.end() ? def : detail::parse_int(it->second, key);
}

inline ServerParams build_server(const Scenario& sc) {
  ServerParams s;
  s.peak_dynamic_power = scenario_num(sc, "server.peak_dynamic_power", 0.0);
  s.peripheral_power = scenario_num(sc, "server.peripheral_power", 0.0);
  s.service_rate = scenario_num(sc, "server.service_rate", 1.0);
  s.frequency = scenario_num(sc, "server.frequency", 1.0);
  return s;
}

inline Workload build_workload(const Scenario& sc) {
  return Workload{scenario_num(sc, "workload.arrival_rate", 0.0)};
}

inline Policy build_policy(const Scenario& sc) {
  Policy p;
  const std::string tc = sc.str_or("policy.idle_threshold", "never");
  p.idle_threshold = tc == "never"
                         ? IdleThreshold::never()
                         : IdleThreshold::finite(detail::parse_num(tc, "policy.idle_threshold"));
  p.wakeup_latency = scenario_num(sc, "policy.wakeup_latency", 0.0);
  p.batch_delay = scenario_num(sc, "policy.batch_delay", 0.0);
  return p;
}

inline std::optional<FarmConfig> build_farm(const Scenario& sc) {
  const bool present = sc.has("farm.servers") || sc.has("farm.dispatch") ||
                       sc.has("farm.join_count");
  if (!present) return std::nullopt;
  FarmConfig f;
  f.servers = static_cast<int>(scenario_int(sc, "farm.servers", 1));
  const std::string d = sc.str_or("farm.dispatch", "bernoulli");
  if (d == "bernoulli")
    f.dispatch = Dispatch::bernoulli_split;
  else if (d == "forkjoin")
    f.dispatch = Dispatch::fork_join;
  else
    throw ConfigError("farm.dispatch must be 'bernoulli' or 'forkjoin', got '" + d + "'");
  f.join_count = static_cast<int>(scenario_int(sc, "farm.join_count", 1));
  return f;
}

inline SimConfig build_sim_config(const Scenario& sc) {
  SimConfig cfg;
  cfg.server = build_server(sc);
  cfg.workload = build_workload(sc);
  cfg.policy = build_policy(sc);
  cfg.farm = build_farm(sc);
  cfg.horizon = static_cast<std::uint64_t>(scenario_int(sc, "sim.horizon", 220000));
  cfg.warmup = static_cast<std::uint64_t>(scenario_int(sc, "sim.warmup", 20000));
  cfg.replications = static_cast<std::uint32_t>(scenario_int(sc, "sim.replications", 20));
  auto it = sc.values.find("sim.seed");
  cfg.seed = it == sc.values.end() ? 1 : detail::parse_u64(it->second, "sim.seed");
  return cfg;
}

inline OptProblem build_opt_problem(const Scenario& sc) {
  OptProblem p;
  p.server = build_server(sc);
  p.workload = build_workload(sc);
  p.wakeup_latency = scenario_num(sc, "policy.wakeup_latency", 0.0);
  if (!sc.has("optimize.budget")) throw ConfigError("optimize.budget is required");
  p.budget = scenario_num(sc, "optimize.budget", 0.0);
  const std::string space = sc.str_or("optimize.space", "threshold_pair");
  if (space == "threshold_pair")
    p.space = DecisionSpace::threshold_pair;
  else if (space == "batch_triple")
    p.space = DecisionSpace::batch_triple;
  else if (space == "farm_pair")
    p.space = DecisionSpace::farm_pair;
  else
    throw ConfigError(
        "optimize.space must be threshold_pair, batch_triple or farm_pair, got '" +
        space + "'");
  p.frequency_step = scenario_num(sc, "optimize.frequency_step", 1e-3);
  p.servers_min = static_cast<int>(scenario_int(sc, "optimize.servers_min", 1));
  p.servers_max = static_cast<int>(scenario_int(sc, "optimize.servers_max", 32));
  if (sc.has("optimize.batch_delay_grid")) {
    p.batch_delay_grid.clear();
    const std::string list = sc.str_or("optimize.batch_delay_grid", "");
    for (const auto& item : detail::split(list, ','))
      p.batch_delay_grid.push_back(detail::parse_num(item, "optimize.batch_delay_grid"));
  }
  return p;
}

// canonical echo of the effective configuration; parses back to the same run
inline std::string resolved_text(const Scenario& sc) {
  static const struct {
    const char* section;
    const char* key;
  } order[] = {
      {"server", "peak_dynamic_power"},
      {"server", "peripheral_power"},
      {"server", "service_rate"},
      {"server", "frequency"},
      {"workload", "arrival_rate"},
      {"policy", "idle_threshold"},
      {"policy", "wakeup_latency"},
      {"policy", "batch_delay"},
      {"farm", "servers"},
      {"farm", "dispatch"},
      {"farm", "join_count"},
      {"sim", "horizon"},
      {"sim", "warmup"},
      {"sim", "replications"},
      {"sim", "seed"},
      {"optimize", "space"},
      {"optimize", "budget"},
      {"optimize", "frequency_step"},
      {"optimize", "servers_min"},
      {"optimize", "servers_max"},
      {"optimize", "batch_delay_grid"},
      {"sweep", "base"},
  };
  std::string out = "name = " + sc.name + "\n";
  std::string open_section;
  for (const auto& entry : order) {
    const std::string dotted = std::string(entry.section) + "." + entry.key;
    auto it = sc.values.find(dotted);
    const bool is_sweep = dotted == "sweep.base";
    if (it == sc.values.end() && !(is_sweep && !sc.axes.empty())) continue;
    if (open_section != entry.section) {
      open_section = entry.section;
      out += "\n[" + open_section + "]\n";
    }
    if (it != sc.values.end())
      out += std::string(entry.key) + " = " + detail::trim(it->second) + "\n";
    if (is_sweep) {
      for (const auto& axis : sc.axes) {
        out += "axis = " + axis.key + " :";
        for (std::size_t i = 0; i < axis.values.size(); ++i) {
          out += i ? ", " : " ";
          out += format_double(axis.values[i]);
        }
        out += "\n";
      }
    }
  }
  return out;
}

}  // namespace pmq
