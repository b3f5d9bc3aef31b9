// CTF game service: HTTP API, challenge pack validation, log replay.
#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "icsrange/game/server.hpp"

using namespace icsrange;

namespace {
httplib::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CTF game server"};
  app.require_subcommand(1);

  std::string pack, teams, ledger = "ledger.jsonl", host = "127.0.0.1", judge = "judge",
                       range = "local";
  int port = 8080;
  double speed = 1.0;
  bool no_range = false;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--pack", pack, "Challenge pack directory")->required();
  serve->add_option("--teams", teams, "Teams file")->required();
  serve->add_option("--ledger", ledger, "Append-only ledger (replayed on start)");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--judge-token", judge);
  serve->add_option("--range", range, "'local' or a range file");
  serve->add_option("--speed", speed, "Simulated seconds per wall second");
  serve->add_flag("--no-range", no_range, "Serve the jeopardy API only");

  auto* load = app.add_subcommand("load-pack", "Validate a challenge pack and summarize it");
  load->add_option("pack", pack)->required();

  std::string log;
  double from = 0.0, to = -1.0;
  auto* replay = app.add_subcommand("replay-log", "Replay a submission log and print the scoreboard");
  replay->add_option("log", log)->required();
  replay->add_option("--pack", pack)->required();
  replay->add_option("--teams", teams)->required();
  replay->add_option("--from", from, "Series start");
  replay->add_option("--to", to, "Series end (default: last submission)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (load->parsed()) {
      auto challenges = game::load_pack(pack);
      std::map<std::string, std::pair<int, int>> by_cat;
      int total = 0;
      for (const auto& c : challenges) {
        auto& [n, pts] = by_cat[std::string(game::to_string(c.category))];
        ++n;
        pts += c.points;
        total += c.points;
      }
      for (const auto& [cat, v] : by_cat) {
        std::cout << cat << ' ' << v.first << " tasks " << v.second << " points\n";
      }
      std::cout << "total " << challenges.size() << " tasks " << total << " points\n";
      return 0;
    }

    if (replay->parsed()) {
      game::Game g(game::load_pack(pack), game::load_teams(teams));
      std::ifstream in(log);
      if (!in) throw std::runtime_error("cannot read " + log);
      game::replay_log(g, in);
      double end = to;
      if (end < 0) {
        end = from;
        for (const auto& t : g.teams()) {
          for (const auto& s : g.submissions(t.id)) end = std::max(end, s.ts);
        }
      }
      std::cout << game::scoreboard_json(g, from, end).dump(2) << '\n';
      return 0;
    }

    if (serve->parsed()) {
      game::GameOptions opts;
      opts.judge_token = judge;
      game::Game g(game::load_pack(pack), game::load_teams(teams), opts, ledger);
      std::unique_ptr<game::RangeHost> live;
      if (!no_range) {
        auto cfg = range == "local" ? testbed::default_config() : testbed::load_config(range);
        live = std::make_unique<game::RangeHost>(cfg, speed);
        live->start();
      }
      httplib::Server server;
      game::ApiServer api(g, live.get());
      api.mount(server);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ':' << port << '\n';
      if (!server.listen(host, port)) throw std::runtime_error("cannot bind " + host);
      if (live) live->stop();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "gameserver: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
