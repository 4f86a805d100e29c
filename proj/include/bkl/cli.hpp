// cli.hpp - subcommand parsing and dispatch for the experiment runner.  Kept
// header-only and stream-parameterized so the test suite can drive it
// in-process; main() is a two-line wrapper.
#pragma once

#include "config.hpp"
#include "experiments.hpp"
#include "registry.hpp"
#include "report.hpp"

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace bkl::cli {

inline const char* usage_text() {
  return "usage: bkl <subcommand> [flags]\n"
         "subcommands: curvature  kernel  nakano  psh  ramadanov  twist  list\n"
         "flags: --config <path>  --degree <n>  --quad-order <n>  --tol <x>\n"
         "       --seed <n>  --out <dir>\n"
         "Flags override config-file keys; without --config each subcommand\n"
         "runs its built-in default configuration.  Exit codes: 0 all checks\n"
         "pass, 1 a check fails, 2 config error.\n";
}

// run one invocation; report to `out`, diagnostics to `err`
inline int dispatch(const std::vector<std::string>& args, std::ostream& out,
                    std::ostream& err) {
  if (args.empty()) {
    err << usage_text();
    return 2;
  }
  const std::string& cmd = args[0];
  if (cmd == "help" || cmd == "--help" || cmd == "-h") {
    out << usage_text();
    return 0;
  }
  if (cmd == "list") {
    if (args.size() > 1) {
      err << "config error: list takes no flags\n";
      return 2;
    }
    out << registry::listing();
    return 0;
  }
  if (!registry::has_experiment(cmd)) {
    err << "config error: unknown subcommand '" << cmd << "'\n" << usage_text();
    return 2;
  }

  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  for (std::size_t i = 1; i < args.size(); i += 2) {
    const std::string& flag = args[i];
    if (i + 1 >= args.size()) {
      err << "config error: flag '" << flag << "' needs a value\n";
      return 2;
    }
    const std::string& value = args[i + 1];
    if (flag == "--config")
      config_path = value;
    else if (flag == "--tol")
      overrides.emplace_back("tol", value);
    else if (flag == "--degree")
      overrides.emplace_back("degree", value);
    else if (flag == "--quad-order")
      overrides.emplace_back("quad.order", value);
    else if (flag == "--seed")
      overrides.emplace_back("seed", value);
    else if (flag == "--out")
      overrides.emplace_back("out", value);
    else {
      err << "config error: unknown flag '" << flag << "'\n" << usage_text();
      return 2;
    }
  }

  config::ExperimentConfig cfg;
  try {
    cfg = config::resolve(cmd, config_path, overrides);
  } catch (const config::ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    const report::RunReport rep = experiments::run(cfg);
    report::print_report(rep, out);
    return rep.all_pass() ? 0 : 1;
  } catch (const config::ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace bkl::cli
