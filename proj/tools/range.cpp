// Runs the range unattended and writes its capture, alarms and plant trace.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "icsrange/plant/plant_config.hpp"
#include "icsrange/testbed/testbed.hpp"

using namespace icsrange;

int main(int argc, char** argv) {
  CLI::App app{"Water-treatment range"};
  std::string range = "local", capture, alarms, trace;
  double seconds = 600.0;
  std::uint64_t seed = 7;
  app.add_option("--range", range, "'local' or a range file");
  app.add_option("--seconds", seconds, "Simulated duration");
  app.add_option("--seed", seed, "Network seed");
  app.add_option("--capture", capture, "Write the frame capture here");
  app.add_option("--alarms", alarms, "Write alarms (JSONL) here");
  app.add_option("--trace", trace, "Write one plant record per second (JSONL) here");
  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = range == "local" ? testbed::default_config() : testbed::load_config(range);
    cfg.net.seed = seed;
    testbed::Testbed tb(cfg);
    std::ofstream trace_out;
    if (!trace.empty()) trace_out.open(trace);
    const auto n = static_cast<std::uint64_t>(std::llround(seconds / cfg.dt));
    const auto per_second = static_cast<std::uint64_t>(std::llround(1.0 / cfg.dt));
    for (std::uint64_t i = 0; i < n; ++i) {
      tb.tick();
      if (trace_out && tb.ticks() % per_second == 0) {
        trace_out << plant::snapshot_record(tb.plant().state()) << '\n';
      }
    }
    if (!capture.empty()) net::write_capture(tb.network().capture(), capture);
    if (!alarms.empty()) std::ofstream(alarms) << tb.alarms().export_lines();
    std::cout << "simulated " << tb.time() << " s, " << tb.network().capture().size()
              << " frames, " << tb.alarms().size() << " alarms, "
              << tb.plant().state().overflow_events.size() << " overflow events\n";
    for (const auto& r : tb.flag_releases()) {
      std::cout << "released " << r.challenge << " at step " << r.step << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "range: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
