#include <fstream>

#include "icsrange/game/game.hpp"

namespace icsrange::game {

using nlohmann::json;

std::vector<Team> load_teams(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read teams file " + path.string());
  std::vector<Team> out;
  for (const auto& t : json::parse(in)) {
    out.push_back({t.at("id"), t.value("name", t.at("id").get<std::string>()), t.at("token")});
  }
  return out;
}

std::vector<SubmitResult> replay_log(Game& game, std::istream& log) {
  std::vector<SubmitResult> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(log, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      auto j = json::parse(line);
      out.push_back(game.submit(j.at("team"), j.at("challenge"), j.at("flag"), j.at("ts")));
    } catch (const json::exception& e) {
      throw std::runtime_error("submission log line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

json scoreboard_json(const Game& game, double from, double to) {
  json series = json::object();
  for (const auto& [team, pts] : game.series(from, to)) {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back({p.t, p.total});
    series[team] = arr;
  }
  json live = json::object();
  for (const auto& [team, total] : game.live_totals()) {
    live[team] = {{"score", std::to_string(total.numerator()) + "/" +
                                std::to_string(total.denominator())},
                  {"points", score::round_half_up(total)}};
  }
  json hours = json::object();
  for (const auto& [team, secs] : game.time_spent()) hours[team] = secs / 3600.0;
  json names = json::object();
  for (const auto& t : game.teams()) names[t.id] = t.name;
  return {{"teams", names},
          {"totals", game.totals()},
          {"series", series},
          {"time_spent_hours", hours},
          {"live", live}};
}

}  // namespace icsrange::game
