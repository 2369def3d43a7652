// Batch scenario runner.
//
//   emsim --scenario ghs-mst --nodes 10 --edges 17 --seed 3 --report-out report.txt
//   emsim --config run.cfg --seed 9
//
// Exit status: 0 ok, 2 bad configuration, 3 invariant violated,
// 4 canary expired before the scenario finished.

#include "emsim/cli/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  using namespace emsim::cli;

  CLI::App app{"Discrete-event distributed system emulator"};
  std::optional<std::string> config_path;
  std::map<std::string, std::optional<std::string>> flags{
      {"scenario", {}}, {"topology", {}}, {"nodes", {}},   {"grid", {}},    {"seed", {}},
      {"canary", {}},   {"log-out", {}},  {"report-out", {}}, {"edges", {}}, {"writers", {}},
      {"payload", {}},  {"n", {}}};
  const std::map<std::string, std::string> help{
      {"scenario", "ghs-mst | coloring | writers-reader | factorial | fig1-delay"},
      {"topology", "all-to-all | grid"},
      {"nodes", "process count (ghs-mst, coloring)"},
      {"grid", "grid shape WxH"},
      {"seed", "64-bit seed"},
      {"canary", "stop time, integer or n/d"},
      {"log-out", "write the JSON-lines log here"},
      {"report-out", "write the message report here"},
      {"edges", "edge count (ghs-mst)"},
      {"writers", "writer count (writers-reader)"},
      {"payload", "parts per writer (writers-reader)"},
      {"n", "largest factorial requested (factorial)"}};
  app.add_option("--config", config_path, "key=value file; flags override it");
  for (auto& [name, slot] : flags) app.add_option("--" + name, slot, help.at(name));
  std::vector<std::string> overrides;
  app.add_option("--set", overrides, "extra key=value, e.g. courier[2].bandwidth=1")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  ScenarioConfig config;
  try {
    KeyValues kv = config_path ? load_key_values(*config_path) : KeyValues{};
    for (const auto& o : overrides) {
      auto extra = parse_key_values(o, "--set");
      if (extra.empty()) throw emsim::ConfigError("--set expects key=value");
      kv.insert_or_assign(extra.begin()->first, extra.begin()->second);
    }
    for (const auto& [name, slot] : flags)
      if (slot) kv[name] = *slot;
    config = config_from(kv);
  } catch (const emsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  RunResult result = run_scenario(config);
  std::cout << result.summary;
  if (!result.report.empty()) std::cout << "\n" << result.report;
  try {
    write_outputs(config, result);
  } catch (const emsim::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  }
  return result.exit_code;
}
