#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "icsrange/game/challenge.hpp"
#include "icsrange/ids/alarm.hpp"
#include "icsrange/score/score.hpp"

namespace icsrange::game {

/// Failure with the HTTP status it maps to.
class GameError : public std::runtime_error {
 public:
  GameError(int status, const std::string& message)
      : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct Team {
  std::string id;
  std::string name;
  std::string token;
};

enum class Verdict { correct, wrong, locked, duplicate };
std::string_view to_string(Verdict v);

struct Submission {
  std::uint64_t id = 0;
  std::string team;
  std::string challenge;
  std::string candidate;
  double ts = 0.0;
  Verdict verdict = Verdict::wrong;
  int points = 0;
};

struct LockoutPolicy {
  int max_wrong = 5;     // more than this many wrong answers ...
  double window = 60.0;  // ... within this many seconds ...
  double lock = 300.0;   // ... locks the pair for this long
};

struct GameOptions {
  LockoutPolicy lockout;
  double session_length = 3 * 3600.0;
  std::string judge_token = "judge";
};

struct SubmitResult {
  Verdict verdict = Verdict::wrong;
  int points_awarded = 0;
  int total = 0;
  std::optional<double> locked_until;
};

struct SeriesPoint {
  double t = 0.0;
  int total = 0;
  bool operator==(const SeriesPoint&) const = default;
};
using Series = std::map<std::string, std::vector<SeriesPoint>>;

struct LiveSession {
  std::string id;
  std::string team;
  double start = 0.0;
  double end = 0.0;
  double quiet_since = 0.0;  // start, or the last adjudication
};

enum class DeclarationStatus { pending, scored, voided };
std::string_view to_string(DeclarationStatus s);

struct Declaration {
  std::string id;
  std::string session;
  std::string team;
  std::string profile;
  std::string goal;
  std::optional<std::string> scenario;
  double declared_at = 0.0;
  DeclarationStatus status = DeclarationStatus::pending;
  std::optional<double> adjudicated_at;
  int detections = 0;
  std::set<std::string> mechanisms;
  std::optional<score::Rational> control;
  bool undo_confirmed = false;
  std::optional<score::ScoreRecord> record;
};

nlohmann::json to_json(const Submission& s);
nlohmann::json to_json(const Declaration& d);
nlohmann::json to_json(const LiveSession& s);

/// Jeopardy and live-phase state. Every accepted mutation is appended to the
/// ledger (one JSON object per line) before it becomes visible; opening an
/// existing ledger replays it. Mutations are serialized, reads share a lock.
class Game {
 public:
  Game(std::vector<Challenge> challenges, std::vector<Team> teams, GameOptions options = {},
       std::optional<std::filesystem::path> ledger = std::nullopt);

  const std::vector<Challenge>& challenges() const { return challenges_; }
  const std::vector<Team>& teams() const { return teams_; }
  const GameOptions& options() const { return options_; }
  const Challenge& challenge(std::string_view id) const;
  std::optional<Team> authenticate(std::string_view token) const;
  bool is_judge(std::string_view token) const;

  SubmitResult submit(const std::string& team, const std::string& challenge,
                      const std::string& candidate, double ts);
  std::vector<Submission> submissions(const std::string& team) const;
  std::size_t submission_count() const;
  /// Logs a hint view; hints cost nothing.
  std::string hint(const std::string& team, const std::string& challenge, std::size_t index,
                   double ts);
  std::set<std::string> solved(const std::string& team) const;

  int total(const std::string& team) const;
  std::map<std::string, int> totals() const;
  /// Cumulative step series per team over [from, to]. Empty when from >= to.
  Series series(double from, double to) const;
  /// Seconds between each team's first and last correct submission.
  std::map<std::string, double> time_spent() const;

  LiveSession open_session(const std::string& team, double start);
  std::optional<LiveSession> session(const std::string& id) const;
  /// Rejected when the profile cannot run the scenario, when the session is
  /// closed or busy, or when alarms were already attributed to the session
  /// since it last went quiet.
  Declaration declare(const std::string& session, const std::string& profile,
                      const std::string& goal, const std::optional<std::string>& scenario,
                      double ts, const ids::AlarmStore* alarms = nullptr);
  /// x = distinct detection rules attributed to the session and raised in
  /// [declared_at, ts], capped at 6.
  /// Without undo confirmation the declaration is voided and scores nothing.
  Declaration adjudicate(const std::string& declaration, const score::Rational& control,
                         bool undo_confirmed, double ts, const ids::AlarmStore& alarms);
  std::optional<Declaration> declaration(const std::string& id) const;
  /// Profile of the team's pending declaration, if any.
  std::optional<std::string> active_profile(const std::string& team) const;
  std::vector<score::ScoreRecord> score_records() const;
  std::map<std::string, score::Rational> live_totals() const;

 private:
  struct PairState {
    std::vector<double> wrong;
    double locked_until = -1.0;
  };

  void apply(const nlohmann::json& record);
  void append(const nlohmann::json& record);
  bool has_team(const std::string& team) const;
  int total_locked(const std::string& team) const;

  std::vector<Challenge> challenges_;
  std::vector<Team> teams_;
  GameOptions options_;
  std::optional<std::filesystem::path> ledger_path_;
  std::ofstream ledger_;
  mutable std::shared_mutex mutex_;

  std::vector<Submission> submissions_;
  std::map<std::pair<std::string, std::string>, PairState> pairs_;
  std::map<std::string, std::map<std::string, double>> solves_;  // team -> challenge -> ts
  std::map<std::string, LiveSession> sessions_;
  std::map<std::string, Declaration> declarations_;
  std::vector<std::string> declaration_order_;
};

/// Teams file: JSON array of {"id", "name", "token"}.
std::vector<Team> load_teams(const std::filesystem::path& path);

/// Feeds a submission log (JSONL of {"team", "challenge", "flag", "ts"})
/// through `game` in file order.
std::vector<SubmitResult> replay_log(Game& game, std::istream& log);

/// Scoreboard payload: team names, totals, series over [from, to], time
/// spent in hours and live-phase totals.
nlohmann::json scoreboard_json(const Game& game, double from, double to);

}  // namespace icsrange::game
