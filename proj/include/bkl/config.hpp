// config.hpp - plain-text experiment configs with a closed per-experiment
// schema.  Files are dotted-key assignments (`quad.order = 26`), `#` starts a
// comment, and every key must belong to the schema of the experiment being
// run; defaults are centralized here and echoed into the report so a run is
// reproducible from its report alone.
#pragma once

#include "registry.hpp"
#include "report.hpp"
#include "types.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bkl::config {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// resolved knobs for one experiment run; field meanings are per-experiment
// and the schema below says which keys each experiment accepts
struct ExperimentConfig {
  std::string experiment = "kernel";
  std::string weight = "flat";
  std::string rho = "unit-disc";  // defining function for the twist scan

  std::string domain_kind = "disc";  // disc | polydisc | ball | sublevel
  std::vector<double> domain_radii = {1.0};
  int domain_dim = 2;        // ball only
  double domain_box = 1.2;   // sublevel sampling half-width
  std::string domain_rho = "unit-disc";

  int degree = 12;
  int quad_order = 26;
  double fd_step = 1e-3;
  double tol = 1e-9;
  std::uint64_t seed = 1;
  std::string out = ".";

  int twist_j = 4;
  double twist_delta = 0.0;  // 0 = choose the smallest workable value
  double delta = 1.0;        // curvature block scaling
  std::string expect = "any";  // any | positive | semipositive | indefinite

  double probe_z_re = 0.0, probe_z_im = 0.0;
  double probe_t_re = 0.0, probe_t_im = 0.0;
  double grid_re_lo = -0.3, grid_re_hi = 0.3;
  double grid_im_lo = -0.3, grid_im_hi = 0.3;
  int grid_re_n = 3, grid_im_n = 3;

  std::vector<double> stages = {1.0, 2.0, 4.0};
  std::vector<int> ladder = {4, 6, 8, 12};
  int samples = 400;   // random candidates for the extremal comparison
  int sections = 6;    // random sections for the operator checks
  int probes = 200;    // rho-points for the twist residual scan
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty()) throw ConfigError("key '" + key + "': empty value");
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size())
    throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a number");
  return x;
}

inline int parse_int(const std::string& key, const std::string& raw) {
  const double x = parse_double(key, raw);
  const int i = static_cast<int>(x);
  if (static_cast<double>(i) != x)
    throw ConfigError("key '" + key + "': expected an integer, got '" + trim(raw) + "'");
  return i;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty()) throw ConfigError("key '" + key + "': empty value");
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size())
    throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a seed");
  return static_cast<std::uint64_t>(x);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  for (const std::string& part : split(trim(raw), ','))
    out.push_back(parse_double(key, part));
  return out;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& raw) {
  std::vector<int> out;
  for (const std::string& part : split(trim(raw), ','))
    out.push_back(parse_int(key, part));
  return out;
}

// "lo:hi:count"
inline void parse_range(const std::string& key, const std::string& raw, double& lo,
                        double& hi, int& count) {
  const auto parts = split(trim(raw), ':');
  if (parts.size() != 3)
    throw ConfigError("key '" + key + "': expected lo:hi:count, got '" + trim(raw) + "'");
  lo = parse_double(key, parts[0]);
  hi = parse_double(key, parts[1]);
  count = parse_int(key, parts[2]);
}

// "re,im" or a bare real part
inline void parse_pair(const std::string& key, const std::string& raw, double& re,
                       double& im) {
  const auto parts = split(trim(raw), ',');
  if (parts.size() == 1) {
    re = parse_double(key, parts[0]);
    im = 0.0;
    return;
  }
  if (parts.size() != 2)
    throw ConfigError("key '" + key + "': expected re,im, got '" + trim(raw) + "'");
  re = parse_double(key, parts[0]);
  im = parse_double(key, parts[1]);
}

inline std::string echo_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += report::fmt_double(v[i]);
  }
  return out;
}

inline std::string echo_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

struct KeySpec {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> apply;
  std::function<std::string(const ExperimentConfig&)> echo;
};

// one row per key; schemas below pick subsets by name
inline const std::vector<KeySpec>& key_table() {
  using C = ExperimentConfig;
  static const std::vector<KeySpec> table = {
      {"experiment", [](C&, const std::string&) {},  // handled by resolve()
       [](const C& c) { return c.experiment; }},
      {"weight", [](C& c, const std::string& v) { c.weight = trim(v); },
       [](const C& c) { return c.weight; }},
      {"rho", [](C& c, const std::string& v) { c.rho = trim(v); },
       [](const C& c) { return c.rho; }},
      {"domain.kind", [](C& c, const std::string& v) { c.domain_kind = trim(v); },
       [](const C& c) { return c.domain_kind; }},
      {"domain.radius",
       [](C& c, const std::string& v) { c.domain_radii = {parse_double("domain.radius", v)}; },
       [](const C& c) { return echo_list(c.domain_radii); }},
      {"domain.radii",
       [](C& c, const std::string& v) { c.domain_radii = parse_list("domain.radii", v); },
       [](const C& c) { return echo_list(c.domain_radii); }},
      {"domain.dim",
       [](C& c, const std::string& v) { c.domain_dim = parse_int("domain.dim", v); },
       [](const C& c) { return std::to_string(c.domain_dim); }},
      {"domain.box",
       [](C& c, const std::string& v) { c.domain_box = parse_double("domain.box", v); },
       [](const C& c) { return report::fmt_double(c.domain_box); }},
      {"domain.rho", [](C& c, const std::string& v) { c.domain_rho = trim(v); },
       [](const C& c) { return c.domain_rho; }},
      {"degree", [](C& c, const std::string& v) { c.degree = parse_int("degree", v); },
       [](const C& c) { return std::to_string(c.degree); }},
      {"quad.order",
       [](C& c, const std::string& v) { c.quad_order = parse_int("quad.order", v); },
       [](const C& c) { return std::to_string(c.quad_order); }},
      {"fd.step", [](C& c, const std::string& v) { c.fd_step = parse_double("fd.step", v); },
       [](const C& c) { return report::fmt_double(c.fd_step); }},
      {"tol", [](C& c, const std::string& v) { c.tol = parse_double("tol", v); },
       [](const C& c) { return report::fmt_double(c.tol); }},
      {"seed", [](C& c, const std::string& v) { c.seed = parse_u64("seed", v); },
       [](const C& c) { return std::to_string(c.seed); }},
      {"out", [](C& c, const std::string& v) { c.out = trim(v); },
       [](const C& c) { return c.out; }},
      {"twist.j", [](C& c, const std::string& v) { c.twist_j = parse_int("twist.j", v); },
       [](const C& c) { return std::to_string(c.twist_j); }},
      {"twist.delta",
       [](C& c, const std::string& v) { c.twist_delta = parse_double("twist.delta", v); },
       [](const C& c) {
         return c.twist_delta > 0 ? report::fmt_double(c.twist_delta) : std::string("auto");
       }},
      {"delta", [](C& c, const std::string& v) { c.delta = parse_double("delta", v); },
       [](const C& c) { return report::fmt_double(c.delta); }},
      {"expect", [](C& c, const std::string& v) { c.expect = trim(v); },
       [](const C& c) { return c.expect; }},
      {"probe.z",
       [](C& c, const std::string& v) { parse_pair("probe.z", v, c.probe_z_re, c.probe_z_im); },
       [](const C& c) {
         return report::fmt_double(c.probe_z_re) + "," + report::fmt_double(c.probe_z_im);
       }},
      {"probe.t",
       [](C& c, const std::string& v) { parse_pair("probe.t", v, c.probe_t_re, c.probe_t_im); },
       [](const C& c) {
         return report::fmt_double(c.probe_t_re) + "," + report::fmt_double(c.probe_t_im);
       }},
      {"grid.re",
       [](C& c, const std::string& v) {
         parse_range("grid.re", v, c.grid_re_lo, c.grid_re_hi, c.grid_re_n);
       },
       [](const C& c) {
         return report::fmt_double(c.grid_re_lo) + ":" + report::fmt_double(c.grid_re_hi) +
                ":" + std::to_string(c.grid_re_n);
       }},
      {"grid.im",
       [](C& c, const std::string& v) {
         parse_range("grid.im", v, c.grid_im_lo, c.grid_im_hi, c.grid_im_n);
       },
       [](const C& c) {
         return report::fmt_double(c.grid_im_lo) + ":" + report::fmt_double(c.grid_im_hi) +
                ":" + std::to_string(c.grid_im_n);
       }},
      {"stages", [](C& c, const std::string& v) { c.stages = parse_list("stages", v); },
       [](const C& c) { return echo_list(c.stages); }},
      {"ladder.j",
       [](C& c, const std::string& v) { c.ladder = parse_int_list("ladder.j", v); },
       [](const C& c) { return echo_int_list(c.ladder); }},
      {"samples", [](C& c, const std::string& v) { c.samples = parse_int("samples", v); },
       [](const C& c) { return std::to_string(c.samples); }},
      {"sections", [](C& c, const std::string& v) { c.sections = parse_int("sections", v); },
       [](const C& c) { return std::to_string(c.sections); }},
      {"probes", [](C& c, const std::string& v) { c.probes = parse_int("probes", v); },
       [](const C& c) { return std::to_string(c.probes); }},
  };
  return table;
}

inline const KeySpec& key_spec(const std::string& key) {
  for (const KeySpec& s : key_table())
    if (key == s.key) return s;
  throw ConfigError("unknown key '" + key + "'");
}

// keys each experiment accepts, in echo order
inline std::vector<std::string> schema_keys(const std::string& experiment) {
  const std::vector<std::string> domain = {"domain.kind", "domain.radius", "domain.radii",
                                           "domain.dim", "domain.box", "domain.rho"};
  std::vector<std::string> keys = {"experiment"};
  auto add = [&keys](std::initializer_list<const char*> more) {
    for (const char* k : more) keys.emplace_back(k);
  };
  auto add_domain = [&keys, &domain]() {
    keys.insert(keys.end(), domain.begin(), domain.end());
  };
  if (experiment == "kernel") {
    add({"weight"});
    add_domain();
    add({"degree", "quad.order", "probe.t", "probe.z", "samples", "tol", "seed", "out"});
  } else if (experiment == "curvature") {
    add({"weight", "delta", "expect", "probe.t", "probe.z", "tol", "seed", "out"});
  } else if (experiment == "twist") {
    add({"twist.j", "twist.delta", "rho", "probes", "tol", "seed", "out"});
  } else if (experiment == "psh") {
    add({"weight"});
    add_domain();
    add({"degree", "quad.order", "fd.step", "grid.re", "grid.im", "probe.z", "ladder.j",
         "tol", "seed", "out"});
  } else if (experiment == "ramadanov") {
    add({"weight", "domain.kind", "domain.radius", "domain.radii", "domain.dim", "stages",
         "degree", "quad.order", "probe.t", "probe.z", "tol", "seed", "out"});
  } else if (experiment == "nakano") {
    add({"weight"});
    add_domain();
    add({"degree", "quad.order", "fd.step", "sections", "tol", "seed", "out"});
  } else {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  return keys;
}

inline bool schema_has(const std::string& experiment, const std::string& key) {
  for (const std::string& k : schema_keys(experiment))
    if (k == key) return true;
  return false;
}

// experiments that build truncated models must be told the truncation degree
// whenever a config file is supplied
inline bool degree_required(const std::string& experiment) {
  return experiment == "kernel" || experiment == "psh" || experiment == "ramadanov" ||
         experiment == "nakano";
}

} // namespace detail

// per-experiment defaults; the no-config run of each subcommand uses exactly
// these values
inline ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "kernel") {
    c.weight = "flat";
    c.degree = 12;
    c.quad_order = 26;
    c.tol = 1e-9;
  } else if (experiment == "curvature") {
    c.weight = "product-gaussian";
    c.delta = 1.0;
    c.expect = "positive";
    c.probe_t_re = 0.25;
    c.probe_t_im = 0.15;
    c.probe_z_re = 0.2;
    c.probe_z_im = -0.1;
    c.tol = 1e-8;
  } else if (experiment == "twist") {
    c.twist_j = 4;
    c.twist_delta = 0.0;
    c.probes = 200;
    c.tol = 1e-9;
  } else if (experiment == "psh") {
    c.weight = "product-gaussian";
    c.degree = 10;
    c.quad_order = 22;
    c.fd_step = 1e-3;
    c.tol = 1e-6;
  } else if (experiment == "ramadanov") {
    c.weight = "flat";
    c.stages = {1.0, 2.0, 4.0};
    c.degree = 10;
    c.quad_order = 26;
    c.tol = 1e-9;
  } else if (experiment == "nakano") {
    c.weight = "product-gaussian";
    c.degree = 8;
    c.quad_order = 18;
    c.fd_step = 1e-3;
    c.sections = 6;
    c.tol = 1e-9;
  } else {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  return c;
}

// parse `key = value` lines; '#' comments anywhere, duplicate keys rejected
inline std::vector<std::pair<std::string, std::string>> parse_kv_text(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    for (const auto& [k, v] : kv)
      if (k == key) throw ConfigError("duplicate key '" + key + "'");
    kv.emplace_back(key, value);
  }
  return kv;
}

// range and registry-name validation, with the offending field named
inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!registry::has_experiment(c.experiment))
    fail("experiment: unknown experiment '" + c.experiment + "'");
  if (c.degree < 0) fail("degree: must be >= 0");
  if (c.quad_order < 1) fail("quad.order: must be >= 1");
  if (!(c.fd_step > 0) || !std::isfinite(c.fd_step)) fail("fd.step: must be positive");
  if (!(c.tol > 0) || !std::isfinite(c.tol)) fail("tol: must be positive");
  if (c.samples < 1) fail("samples: must be >= 1");
  if (c.sections < 1) fail("sections: must be >= 1");
  if (c.probes < 2) fail("probes: must be >= 2");
  if (c.twist_j < 4) fail("twist.j: must be >= 4");
  if (c.twist_delta < 0 || !std::isfinite(c.twist_delta))
    fail("twist.delta: must be >= 0 (0 means auto)");
  if (!(c.delta > 0) || !std::isfinite(c.delta)) fail("delta: must be positive");
  if (c.expect != "any" && c.expect != "positive" && c.expect != "semipositive" &&
      c.expect != "indefinite")
    fail("expect: must be any, positive, semipositive, or indefinite");
  if (c.grid_re_n < 1) fail("grid.re: count must be >= 1");
  if (c.grid_im_n < 1) fail("grid.im: count must be >= 1");
  if (!(c.grid_re_lo <= c.grid_re_hi)) fail("grid.re: lo must not exceed hi");
  if (!(c.grid_im_lo <= c.grid_im_hi)) fail("grid.im: lo must not exceed hi");
  if (c.domain_kind != "disc" && c.domain_kind != "polydisc" && c.domain_kind != "ball" &&
      c.domain_kind != "sublevel")
    fail("domain.kind: must be disc, polydisc, ball, or sublevel");
  if (c.domain_radii.empty()) fail("domain.radius: at least one radius");
  for (double r : c.domain_radii)
    if (!(r > 0) || !std::isfinite(r)) fail("domain.radius: radii must be positive");
  if (c.domain_kind == "disc" && c.domain_radii.size() != 1)
    fail("domain.radii: a disc takes a single radius");
  if (c.domain_kind == "ball" && c.domain_radii.size() != 1)
    fail("domain.radii: a ball takes a single radius");
  if (c.domain_dim < 1) fail("domain.dim: must be >= 1");
  if (!(c.domain_box > 0) || !std::isfinite(c.domain_box))
    fail("domain.box: must be positive");
  if (!registry::has_weight(c.weight)) fail("weight: unknown weight '" + c.weight + "'");
  if (!registry::has_rho(c.rho)) fail("rho: unknown defining function '" + c.rho + "'");
  if (!registry::has_rho(c.domain_rho))
    fail("domain.rho: unknown defining function '" + c.domain_rho + "'");
  if (c.experiment == "ramadanov") {
    if (c.domain_kind == "sublevel") fail("domain.kind: stages need a product domain");
    if (c.stages.empty()) fail("stages: at least one stage");
    double prev = 0.0;
    for (double s : c.stages) {
      if (!(s > prev)) fail("stages: radii must increase and stay positive");
      prev = s;
    }
  }
  if (c.experiment == "psh") {
    if (c.ladder.empty()) fail("ladder.j: at least one exponent");
    int prev = 3;
    for (int j : c.ladder) {
      if (j < 4) fail("ladder.j: exponents must be >= 4");
      if (j <= prev) fail("ladder.j: exponents must increase");
      prev = j;
    }
  }
  if (c.experiment == "nakano" && c.domain_kind == "sublevel" &&
      registry::make_rho(c.domain_rho)->m > 0)
    fail("domain.rho: the operator checks need a fiber domain that does not move with t");
}

// defaults, then file keys, then flag overrides; closed schema throughout
inline ExperimentConfig resolve(
    const std::string& experiment, const std::string& config_path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  ExperimentConfig cfg = default_config(experiment);
  std::vector<std::pair<std::string, std::string>> merged;
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw ConfigError("cannot open config file '" + config_path + "'");
    merged = parse_kv_text(f);
    for (const auto& [key, value] : merged) {
      if (!detail::schema_has(experiment, key))
        throw ConfigError("unknown key '" + key + "' for experiment '" + experiment + "'");
      if (key == "experiment" && detail::trim(value) != experiment)
        throw ConfigError("experiment: config says '" + detail::trim(value) +
                          "' but the subcommand is '" + experiment + "'");
    }
  }
  for (const auto& [key, value] : overrides) {
    if (!detail::schema_has(experiment, key))
      throw ConfigError("unknown key '" + key + "' for experiment '" + experiment + "'");
    bool replaced = false;
    for (auto& [k, v] : merged)
      if (k == key) {
        v = value;
        replaced = true;
      }
    if (!replaced) merged.emplace_back(key, value);
  }
  if (!config_path.empty() && detail::degree_required(experiment)) {
    bool has_degree = false;
    for (const auto& [key, value] : merged)
      if (key == "degree") has_degree = true;
    if (!has_degree)
      throw ConfigError("missing required key 'degree' for experiment '" + experiment + "'");
  }
  for (const auto& [key, value] : merged) detail::key_spec(key).apply(cfg, value);
  validate(cfg);
  return cfg;
}

// the config echo for reports: every schema key with its resolved value
inline std::vector<std::pair<std::string, std::string>> echo(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> lines;
  for (const std::string& key : detail::schema_keys(cfg.experiment))
    lines.emplace_back(key, detail::key_spec(key).echo(cfg));
  return lines;
}

} // namespace bkl::config
