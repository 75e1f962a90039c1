#pragma once

#include <functional>
#include <string>
#include <vector>

#include "config.hpp"

namespace mtcli {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ScenarioResult {
  std::vector<Check> checks;
  std::vector<std::string> artifacts;  // files written
  double seconds = 0.0;
  bool ok() const;
  void add(const std::string& name, bool passed, const std::string& detail);
};

using Runner = std::function<ScenarioResult(const json& cfg, const std::string& out_dir)>;

struct Scenario {
  std::string name;
  std::string description;
  json defaults;  // merged over default_config()
  Runner run;
};

const std::vector<Scenario>& catalog();
const Scenario* find_scenario(const std::string& name);

// Runs a catalog entry with its defaults, an optional config file and overrides.
ScenarioResult run_scenario(const Scenario& s, const std::string& config_path, const std::vector<std::string>& overrides,
                            const std::string& out_dir);

// Building blocks shared by the scenarios and the plain subcommands.
ScenarioResult cmd_extend(const json& cfg, const std::string& out);
ScenarioResult cmd_xray(const json& cfg, const std::string& out);
ScenarioResult cmd_afunc(const json& cfg, const std::string& out);
ScenarioResult cmd_mt(const json& cfg, const std::string& out);
ScenarioResult cmd_wavepacket(const json& cfg, const std::string& out);
ScenarioResult cmd_decouple(const json& cfg, const std::string& out);
ScenarioResult cmd_cex(const json& cfg, const std::string& out);
ScenarioResult cmd_sweep(const json& cfg, const std::string& out);
ScenarioResult cmd_fit(const std::string& csv_path, const std::string& out);

// Column documentation printed by --help.
std::string csv_documentation();

}  // namespace mtcli
