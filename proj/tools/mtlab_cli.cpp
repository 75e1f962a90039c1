#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scenarios.hpp"

namespace {

struct Globals {
  std::string config;
  std::string out = ".";
  long long seed = -1;
  int threads = 0;
  std::string scenario;
  std::vector<std::string> overrides;
};

int report(const std::string& title, const mtcli::ScenarioResult& res) {
  for (const auto& c : res.checks)
    std::printf("%s %s: %s [%s]\n", c.passed ? "PASS" : "FAIL", title.c_str(), c.name.c_str(), c.detail.c_str());
  for (const auto& a : res.artifacts) std::printf("wrote %s\n", a.c_str());
  return res.ok() ? 0 : 1;
}

std::vector<std::string> all_overrides(const Globals& g) {
  std::vector<std::string> o;
  if (g.seed >= 0) o.push_back("seed=" + std::to_string(g.seed));
  if (g.threads > 0) o.push_back("threads=" + std::to_string(g.threads));
  o.insert(o.end(), g.overrides.begin(), g.overrides.end());
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mtlab: numerical experiments for weighted restriction (Mizohata-Takeuchi type) inequalities"};
  app.require_subcommand(1);
  app.footer(mtcli::csv_documentation());
  Globals g;
  app.add_option("--config", g.config, "JSON config file merged over the built-in defaults (comments allowed)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory (created if missing)");
  app.add_option("--seed", g.seed, "Base RNG seed (sets the 'seed' key)")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", g.threads, "Worker threads for the counterexample integrals")->check(CLI::PositiveNumber);
  app.add_option("--scenario", g.scenario, "Scenario name for 'run' (see list-scenarios)");
  app.add_option("--override", g.overrides, "Config override key.sub=value, value parsed as JSON; repeatable");

  // Global flags are also accepted after the subcommand name.
  app.fallthrough();

  using Cmd = mtcli::ScenarioResult (*)(const mtcli::json&, const std::string&);
  const std::map<std::string, std::pair<Cmd, std::string>> plain = {
      {"extend", {mtcli::cmd_extend, "Extension field on [-R,R]^n; writes field.bin and slices.csv"}},
      {"xray", {mtcli::cmd_xray, "Sup of the X-ray transform of the configured weight; writes xray.csv"}},
      {"afunc", {mtcli::cmd_afunc, "Amalgam and tube-mass functionals; writes afunc.csv"}},
      {"mt", {mtcli::cmd_mt, "One MT report for (density, weight); writes reports.csv"}},
      {"wavepacket", {mtcli::cmd_wavepacket, "Wave packet decomposition and checks; writes packets.csv"}},
      {"decouple", {mtcli::cmd_decouple, "Refined or slab decoupling check (decouple.kind)"}},
      {"cex", {mtcli::cmd_cex, "One counterexample run at R; writes cex.csv and cex_state.json"}},
      {"sweep", {mtcli::cmd_sweep, "MT reports over R_list with log-log fits (weight.kind=cex sweeps the counterexample)"}},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, entry] : plain) subs[name] = app.add_subcommand(name, entry.second);
  std::string fit_input;
  auto* fit = app.add_subcommand("fit", "Log-log slope of every ratio column in a CSV; grouped by seed if present");
  fit->add_option("csv", fit_input, "Input CSV with an R column")->required();
  auto* run = app.add_subcommand("run", "Run a named scenario with its checks (needs --scenario)");
  auto* list = app.add_subcommand("list-scenarios", "Print scenario names and descriptions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (list->parsed()) {
      for (const auto& s : mtcli::catalog()) std::printf("%-20s %s\n", s.name.c_str(), s.description.c_str());
      return 0;
    }
    if (fit->parsed()) return report("fit", mtcli::cmd_fit(fit_input, g.out));
    if (run->parsed()) {
      if (g.scenario.empty()) throw mtcli::UsageError("run needs --scenario");
      const auto* s = mtcli::find_scenario(g.scenario);
      if (!s) throw mtcli::UsageError("unknown scenario '" + g.scenario + "' (see list-scenarios)");
      auto res = mtcli::run_scenario(*s, g.config, all_overrides(g), g.out);
      int code = report(s->name, res);
      std::printf("%s %s in %.2f s\n", res.ok() ? "OK" : "FAILED", s->name.c_str(), res.seconds);
      return code;
    }
    for (const auto& [name, entry] : plain) {
      if (!subs[name]->parsed()) continue;
      auto cfg = mtcli::load_config(g.config, mtcli::json::object(), all_overrides(g));
      cfg["scenario"] = name;
      std::filesystem::create_directories(g.out);
      return report(name, entry.first(cfg, g.out));
    }
  } catch (const mtcli::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
