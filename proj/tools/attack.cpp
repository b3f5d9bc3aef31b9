// Red-team CLI: list, run and undo attack scenarios against a local range.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "icsrange/attack/runner.hpp"
#include "icsrange/testbed/testbed.hpp"

namespace fs = std::filesystem;
using namespace icsrange;
using nlohmann::json;

namespace {

testbed::TestbedConfig range_config(const std::string& range, std::uint64_t seed) {
  auto cfg = range == "local" ? testbed::default_config() : testbed::load_config(range);
  cfg.net.seed = seed;
  return cfg;
}

std::string scenario_source(const std::string& id_or_path) {
  const auto& builtin = attack::builtin_scenarios();
  if (auto it = builtin.find(id_or_path); it != builtin.end()) return it->second;
  std::ifstream in(id_or_path);
  if (!in) throw std::runtime_error("no such scenario: " + id_or_path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string next_run_id(const fs::path& dir, const std::string& scenario) {
  for (int n = 1;; ++n) {
    std::string id = scenario + "-" + std::to_string(n);
    if (!fs::exists(dir / (id + ".json"))) return id;
  }
}

void emit(const std::string& lines, const std::string& out) {
  if (out.empty()) {
    std::cout << lines;
    return;
  }
  std::ofstream f(out, std::ios::app);
  f << lines;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attack scenario runner"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "Show built-in scenarios");

  auto* run = app.add_subcommand("run", "Run a scenario and print its report (JSONL)");
  std::string scenario, profile = "strong", range = "local", runs_dir = "runs", out;
  std::uint64_t seed = 1;
  double warmup = 10.0;
  run->add_option("scenario", scenario, "Built-in id or scenario file")->required();
  run->add_option("--profile", profile, "cybercriminal | insider | strong");
  run->add_option("--range", range, "'local' or a range file");
  run->add_option("--seed", seed, "Network seed");
  run->add_option("--warmup", warmup, "Seconds of clean operation before the attack");
  run->add_option("--runs-dir", runs_dir, "Where run records are kept");
  run->add_option("--out", out, "Append the report here instead of stdout");

  auto* undo = app.add_subcommand("undo", "Replay a recorded run, then execute its undo steps");
  std::string run_id;
  undo->add_option("run-id", run_id)->required();
  undo->add_option("--runs-dir", runs_dir, "Where run records are kept");
  undo->add_option("--out", out, "Append the reports here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& [id, text] : attack::builtin_scenarios()) {
        auto s = attack::parse_scenario(text);
        std::string caps;
        for (auto c : s.capabilities) caps += (caps.empty() ? "" : ",") + std::string(score::to_string(c));
        std::cout << id << "  [" << caps << "]  " << s.description << '\n';
      }
      return 0;
    }

    if (run->parsed()) {
      const std::string source = scenario_source(scenario);
      auto sc = attack::parse_scenario(source);
      const auto& prof = score::find_profile(profile);
      fs::create_directories(runs_dir);
      std::string id = next_run_id(runs_dir, sc.id);
      testbed::Testbed tb(range_config(range, seed));
      tb.run_for(warmup);
      attack::AttackRunner runner(tb, seed);
      auto report = runner.run(sc, prof, id);
      report.seed = seed;
      std::ofstream(fs::path(runs_dir) / (id + ".json"))
          << json{{"run_id", id}, {"scenario", source}, {"profile", profile}, {"range", range},
                  {"seed", seed}, {"warmup", warmup}}.dump(2);
      emit(attack::report_lines(report), out);
      return report.refused ? 3 : (report.success ? 0 : 1);
    }

    if (undo->parsed()) {
      std::ifstream in(fs::path(runs_dir) / (run_id + ".json"));
      if (!in) throw std::runtime_error("unknown run " + run_id);
      auto rec = json::parse(in);
      auto sc = attack::parse_scenario(rec.at("scenario").get<std::string>());
      const auto& prof = score::find_profile(rec.at("profile").get<std::string>());
      const auto s = rec.at("seed").get<std::uint64_t>();
      testbed::Testbed tb(range_config(rec.at("range"), s));
      tb.run_for(rec.at("warmup").get<double>());
      attack::AttackRunner runner(tb, s);
      auto replay = runner.run(sc, prof, run_id);
      replay.seed = s;
      auto reverted = runner.undo(sc, prof, run_id + "-undo");
      reverted.seed = s;
      emit(attack::report_lines(replay) + attack::report_lines(reverted), out);
      return reverted.success ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "attack: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
