// Acceptance gates. One line per criterion; exit status is the number of
// failed gates.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "icsrange/forensics/forensics.hpp"
#include "icsrange/game/game.hpp"
#include "icsrange/score/score.hpp"
#include "icsrange/testbed/testbed.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "scenarios.hpp"

using namespace icsrange;

namespace {

// Pinned tolerances and budgets.
constexpr double kScoreGridBudgetSeconds = 1.0;
constexpr double kScenarioSimulatedBudget = 120.0;
constexpr double kScenarioWallBudget = 30.0;
constexpr double kPccTarget = 0.97;
constexpr double kPccTolerance = 0.005;
constexpr double kMassBalanceTolerance = 1e-6;
constexpr std::uint64_t kMassBalanceSteps = 100000;
constexpr int kRandomLogs = 1000;
constexpr int kRandomLogSteps = 300;
constexpr std::uint64_t kDualitySeeds = 100;
constexpr double kCleanRunSeconds = 600.0;
constexpr std::size_t kFixtureSubmissions = 77;

struct Gate {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

Gate score_formula() {
  Gate g;
  const auto t0 = std::chrono::steady_clock::now();
  int cases = 0, mismatches = 0;
  for (const auto& goal : score::goal_catalog()) {
    for (int c20 = 4; c20 <= 20; ++c20) {
      for (int x = 0; x <= score::kMaxDetections; ++x) {
        for (int p2 : {2, 3, 4}) {
          auto s = score::compute_score(goal.points, score::Rational(c20, 20), x, score::Rational(p2, 2));
          auto want = oracle::eq1(goal.points, c20, x, p2);
          if (static_cast<__int128>(s.numerator()) != want.num ||
              static_cast<__int128>(s.denominator()) != want.den) {
            ++mismatches;
          }
          ++cases;
        }
      }
    }
  }
  std::vector<score::ScoreRecord> pump{{"d1", "T", "pump", 130}, {"d2", "T", "pump", 200}};
  const auto aggregate = score::aggregate_team(pump);
  const double elapsed = seconds_since(t0);
  g.require(cases == 9 * 17 * 7 * 3, "grid size " + std::to_string(cases));
  g.require(mismatches == 0, std::to_string(mismatches) + " mismatches");
  g.require(aggregate == score::Rational(200), "pump aggregate != 200");
  g.require(elapsed < kScoreGridBudgetSeconds, "took " + fmt(elapsed) + " s");
  g.detail = std::to_string(cases) + " cases, aggregate " + std::to_string(aggregate.numerator()) + ", " +
             fmt(elapsed * 1000, 3) + " ms" + (g.detail.empty() ? "" : " | " + g.detail);
  return g;
}

Gate detection_matrix() {
  Gate g;
  struct Row {
    const char* scenario;
    const char* profile;
    bool network;
    bool invariant;
  };
  const Row rows[] = {{"syn_flood_plc1", "cybercriminal", true, false},
                      {"l1_dos", "cybercriminal", true, false},
                      {"tank_sensor_tamper", "strong", true, true},
                      {"hmi_dosing_manipulation", "insider", false, true}};
  std::string summary;
  for (const auto& r : rows) {
    auto o = scen::run(r.scenario, r.profile);
    const std::string id = r.scenario;
    g.require(o.report.success, id + " did not succeed: " + o.report.reason);
    g.require(o.network == r.network, id + " network alarm " + (o.network ? "present" : "absent"));
    g.require(o.invariant == r.invariant, id + " invariant alarm " + (o.invariant ? "present" : "absent"));
    g.require(o.simulated < kScenarioSimulatedBudget, id + " simulated " + fmt(o.simulated) + " s");
    g.require(o.wall < kScenarioWallBudget, id + " wall " + fmt(o.wall) + " s");
    summary += id + "[net=" + (o.network ? "Y" : "N") + " inv=" + (o.invariant ? "Y" : "N") + " " +
               fmt(o.simulated, 4) + "s/" + fmt(o.wall, 3) + "s] ";
  }
  g.detail = summary + (g.detail.empty() ? "" : "| " + g.detail);
  return g;
}

Gate detection_rates() {
  Gate g;
  std::ifstream in(FIXTURE_DIR "/live_attacks.jsonl");
  if (!in) {
    g.require(false, "missing live_attacks.jsonl");
    return g;
  }
  std::map<std::string, std::vector<score::AttackOutcome>> by_team;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    by_team[j["team"]].push_back({j["team"], j["success"], j["mechanisms"].get<std::set<std::string>>()});
  }
  const std::set<std::string> academic{"process_invariant", "network"};
  const std::vector<std::pair<std::string, score::Rational>> expect{
      {"T1", 1}, {"T2", 1}, {"T3", 1}, {"T4", 1}, {"T5", score::Rational(6, 5)}, {"T6", score::Rational(4, 3)}};
  std::string got;
  for (const auto& [team, want] : expect) {
    auto r = score::detection_rate(by_team[team], academic);
    got += team + "=" + (r ? std::to_string(r->numerator()) + "/" + std::to_string(r->denominator()) : "none") + " ";
    g.require(r && *r == want, team + " mismatch");
  }
  g.detail = got + (g.detail.empty() ? "" : "| " + g.detail);
  return g;
}

Gate correlation() {
  Gate g;
  const std::vector<double> hours{30, 44, 27, 28, 21}, points{250, 510, 86, 161, 66};
  const double r = score::pearson(hours, points);
  const double ref = oracle::pearson(hours, points);
  g.require(std::fabs(r - kPccTarget) <= kPccTolerance, "r outside band");
  g.require(std::fabs(r - ref) <= 1e-12, "differs from reference formula");
  g.detail = "r=" + fmt(r, 8) + (g.detail.empty() ? "" : " | " + g.detail);
  return g;
}

Gate plant_physics() {
  Gate g;
  const double err = props::mass_balance_error(kMassBalanceSteps);
  g.require(err <= kMassBalanceTolerance, "mass balance error " + fmt(err));
  auto logs = props::random_command_logs(kRandomLogs, kRandomLogSteps, 2024);
  g.require(logs.clamp_ok, "clamp: " + logs.detail);
  g.require(logs.overflow_ok, "overflow: " + logs.detail);
  const auto a = props::capture_text(7, 60.0);
  const auto b = props::capture_text(7, 60.0);
  g.require(!a.empty() && a == b, "captures differ");
  g.detail = "max error " + fmt(err, 3) + " over " + std::to_string(kMassBalanceSteps) + " steps, " +
             std::to_string(kRandomLogs) + " logs, capture " + std::to_string(a.size()) + " bytes x2" +
             (g.detail.empty() ? "" : " | " + g.detail);
  return g;
}

// Drives one tank to overflow by hand and watches every tick.
std::pair<std::optional<std::uint64_t>, std::optional<testbed::FlagRelease>> observed_overflow(
    const std::string& tank, const std::vector<std::pair<std::string, std::string>>& forces,
    const std::string& challenge) {
  testbed::Testbed tb;
  tb.run_for(2.0);
  for (const auto& [actuator, cmd] : forces) {
    tb.plant().enqueue({plant::PlantCommand::Type::force, actuator, cmd, plant::ControlMode::manual});
  }
  const double threshold = tb.plant().state().tank(tank).overflow_threshold;
  std::optional<std::uint64_t> crossed;
  while (!crossed && tb.time() < 900.0) {
    tb.tick();
    if (tb.plant().state().tank(tank).level > threshold) crossed = tb.plant().state().steps;
  }
  return {crossed, tb.released(challenge)};
}

Gate challenge_oracles() {
  Gate g;
  std::string summary;

  auto raw = observed_overflow("T101", {{"MV101", "OPEN"}, {"P101", "OFF"}, {"P102", "OFF"}}, "overflow_raw_tank");
  g.require(raw.first && raw.second && raw.second->step == *raw.first, "raw tank release step mismatch");
  auto uf = observed_overflow("T301", {{"P101", "ON"}, {"P301", "OFF"}}, "overflow_uf_tank");
  g.require(uf.first && uf.second && uf.second->step == *uf.first, "uf tank release step mismatch");
  if (raw.first && uf.first) {
    summary += "overflow steps " + std::to_string(*raw.first) + "/" + std::to_string(*uf.first) + ", ";
  }
  for (const char* id : {"overflow_raw_tank", "overflow_uf_tank"}) {
    auto o = scen::run(id, "cybercriminal");
    g.require(o.report.success, std::string(id) + " scenario failed: " + o.report.reason);
  }

  auto hijack = scen::run("keepalive_hijack", "cybercriminal");
  auto write_only = scen::run("keepalive_write_only", "cybercriminal");
  g.require(hijack.report.success, "keepalive hijack failed: " + hijack.report.reason);
  g.require(!write_only.report.success, "write-only keepalive succeeded");
  summary += std::string("keepalive hijack=") + (hijack.report.success ? "ok" : "fail") +
             " write-only=" + (write_only.report.success ? "ok" : "fail") + ", ";

  const auto topo = net::default_topology();
  const double hop = net::NetParams{}.hop_delay;
  int solved = 0, resimulated = 0;
  for (auto kind : {forensics::ChallengeKind::hosts, forensics::ChallengeKind::arp_interval,
                    forensics::ChallengeKind::xor_cipher, forensics::ChallengeKind::composite}) {
    for (std::uint64_t seed = 1; seed <= kDualitySeeds; ++seed) {
      auto gen = forensics::generate(kind, seed);
      auto got = forensics::solve(kind, gen.capture, gen.metadata);
      if (got && *got == gen.flag) {
        ++solved;
      } else {
        g.require(false, std::string(forensics::to_string(kind)) + " seed " + std::to_string(seed));
      }
      if (kind == forensics::ChallengeKind::arp_interval) {
        auto ref = oracle::arp_resimulation(gen.capture, topo, hop);
        const bool ok = ref && "ascflag{" + std::to_string(ref->first) + "-" + std::to_string(ref->last) + "}" ==
                                   gen.flag;
        resimulated += ok ? 1 : 0;
        g.require(ok, "arp re-simulation seed " + std::to_string(seed));
      }
    }
  }
  summary += "duality " + std::to_string(solved) + "/" + std::to_string(4 * kDualitySeeds) + ", arp oracle " +
             std::to_string(resimulated) + "/" + std::to_string(kDualitySeeds);
  g.detail = summary + (g.detail.empty() ? "" : " | " + g.detail);
  return g;
}

Gate game_soundness() {
  Gate g;
  std::vector<game::Challenge> pack{{"c", game::Category::misc, 50, "c", "", {}, "CTF{right}", true}};
  game::Game lock_game(pack, {{"T", "T", "tok"}});
  for (int i = 0; i < 5; ++i) {
    g.require(lock_game.submit("T", "c", "CTF{wrong}", i * 10.0).verdict == game::Verdict::wrong, "early lock");
  }
  auto sixth = lock_game.submit("T", "c", "CTF{right}", 55.0);
  g.require(sixth.verdict == game::Verdict::locked, "sixth submission not locked");
  g.require(lock_game.submit("T", "c", "CTF{right}", 55.0 + 299.0).verdict == game::Verdict::locked,
            "lock shorter than 300 s");
  g.require(lock_game.submit("T", "c", "CTF{right}", 55.0 + 300.0).verdict == game::Verdict::correct,
            "lock outlasts 300 s");

  auto replay = [&](std::size_t& accepted) {
    game::Game gm(game::load_pack(FIXTURE_DIR "/pack"), game::load_teams(FIXTURE_DIR "/teams.json"));
    std::ifstream in(FIXTURE_DIR "/submissions_77.jsonl");
    accepted = 0;
    for (const auto& r : game::replay_log(gm, in)) accepted += r.verdict == game::Verdict::correct ? 1 : 0;
    return game::scoreboard_json(gm, 0, 50 * 3600).dump();
  };
  std::size_t first_n = 0, second_n = 0;
  const auto first = replay(first_n);
  const auto second = replay(second_n);
  g.require(first_n == kFixtureSubmissions && second_n == kFixtureSubmissions,
            "accepted " + std::to_string(first_n) + "/" + std::to_string(second_n));
  g.require(first == second, "scoreboards differ");
  g.detail = "lockout 300 s, " + std::to_string(first_n) + " correct replayed twice, scoreboard " +
             std::to_string(first.size()) + " bytes identical" + (g.detail.empty() ? "" : " | " + g.detail);
  return g;
}

Gate clean_run() {
  Gate g;
  testbed::Testbed tb;
  tb.run_for(kCleanRunSeconds);
  int network = 0, invariant = 0;
  for (const auto& a : tb.alarms().query()) {
    network += ids::engine_of(a.rule) == ids::Engine::network;
    invariant += ids::engine_of(a.rule) == ids::Engine::process_invariant;
  }
  g.require(tb.alarms().size() == 0, std::to_string(tb.alarms().size()) + " alarms");
  g.detail = fmt(tb.time()) + " s simulated, network=" + std::to_string(network) +
             " invariant=" + std::to_string(invariant) + ", frames " +
             std::to_string(tb.network().capture().size()) + (g.detail.empty() ? "" : " | " + g.detail);
  return g;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Gate()>>> gates{
      {"score-formula", score_formula},     {"detection-matrix", detection_matrix},
      {"detection-rate", detection_rates},  {"hours-points-pcc", correlation},
      {"plant-physics", plant_physics},     {"challenge-oracles", challenge_oracles},
      {"game-soundness", game_soundness},   {"clean-calibration", clean_run},
  };
  int failed = 0;
  for (const auto& [name, fn] : gates) {
    Gate g;
    try {
      g = fn();
    } catch (const std::exception& e) {
      g.pass = false;
      g.detail = std::string("exception: ") + e.what();
    }
    failed += g.pass ? 0 : 1;
    std::printf("%s  %-18s %s\n", g.pass ? "PASS" : "FAIL", name, g.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu gates, %d failed\n", gates.size(), failed);
  return failed;
}
