#include "icsrange/game/game.hpp"

#include <algorithm>
#include <mutex>

#include "icsrange/attack/scenario.hpp"

namespace icsrange::game {

using nlohmann::json;

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::correct: return "CORRECT";
    case Verdict::wrong: return "WRONG";
    case Verdict::locked: return "LOCKED";
    case Verdict::duplicate: return "DUPLICATE";
  }
  return "?";
}

std::string_view to_string(DeclarationStatus s) {
  switch (s) {
    case DeclarationStatus::pending: return "pending";
    case DeclarationStatus::scored: return "scored";
    case DeclarationStatus::voided: return "voided";
  }
  return "?";
}

namespace {

Verdict parse_verdict(std::string_view s) {
  for (auto v : {Verdict::correct, Verdict::wrong, Verdict::locked, Verdict::duplicate}) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown verdict '" + std::string(s) + "'");
}

std::string rational_text(const score::Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

score::Rational rational_from(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return score::parse_decimal(s);
  return {std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1))};
}

}  // namespace

json to_json(const Submission& s) {
  return {{"id", s.id},         {"team", s.team},   {"challenge", s.challenge},
          {"candidate", s.candidate}, {"ts", s.ts}, {"verdict", to_string(s.verdict)},
          {"points", s.points}};
}

json to_json(const LiveSession& s) {
  return {{"id", s.id}, {"team", s.team}, {"start", s.start}, {"end", s.end}};
}

json to_json(const Declaration& d) {
  json j = {{"id", d.id},
            {"session", d.session},
            {"team", d.team},
            {"profile", d.profile},
            {"goal", d.goal},
            {"declared_at", d.declared_at},
            {"status", to_string(d.status)},
            {"detections", d.detections},
            {"mechanisms", d.mechanisms},
            {"undo_confirmed", d.undo_confirmed}};
  j["scenario"] = d.scenario ? json(*d.scenario) : json(nullptr);
  j["adjudicated_at"] = d.adjudicated_at ? json(*d.adjudicated_at) : json(nullptr);
  j["control"] = d.control ? json(score::format_decimal(*d.control)) : json(nullptr);
  if (d.record) {
    j["score"] = rational_text(d.record->score);
    j["points"] = score::round_half_up(d.record->score);
  } else {
    j["score"] = nullptr;
    j["points"] = nullptr;
  }
  return j;
}

Game::Game(std::vector<Challenge> challenges, std::vector<Team> teams, GameOptions options,
           std::optional<std::filesystem::path> ledger)
    : challenges_(std::move(challenges)),
      teams_(std::move(teams)),
      options_(std::move(options)),
      ledger_path_(std::move(ledger)) {
  if (!ledger_path_) return;
  if (std::ifstream in(*ledger_path_); in) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        apply(json::parse(line));
      } catch (const std::exception& e) {
        throw std::runtime_error("ledger line " + std::to_string(n) + ": " + e.what());
      }
    }
  }
  ledger_.open(*ledger_path_, std::ios::app);
  if (!ledger_) throw std::runtime_error("cannot open ledger " + ledger_path_->string());
}

const Challenge& Game::challenge(std::string_view id) const {
  for (const auto& c : challenges_) {
    if (c.id == id) return c;
  }
  throw GameError(404, "unknown challenge '" + std::string(id) + "'");
}

std::optional<Team> Game::authenticate(std::string_view token) const {
  if (token.empty()) return std::nullopt;
  for (const auto& t : teams_) {
    if (constant_time_equals(t.token, token)) return t;
  }
  return std::nullopt;
}

bool Game::is_judge(std::string_view token) const {
  return !token.empty() && constant_time_equals(options_.judge_token, token);
}

bool Game::has_team(const std::string& team) const {
  return std::any_of(teams_.begin(), teams_.end(), [&](const Team& t) { return t.id == team; });
}

void Game::append(const json& record) {
  if (ledger_.is_open()) {
    ledger_ << record.dump() << '\n';
    ledger_.flush();
    if (!ledger_) throw std::runtime_error("ledger write failed");
  }
  apply(record);
}

void Game::apply(const json& r) {
  const std::string type = r.at("type");
  if (type == "submission") {
    Submission s;
    s.id = r.at("id");
    s.team = r.at("team");
    s.challenge = r.at("challenge");
    s.candidate = r.at("candidate");
    s.ts = r.at("ts");
    s.verdict = parse_verdict(r.at("verdict").get<std::string>());
    s.points = r.at("points");
    auto& pair = pairs_[{s.team, s.challenge}];
    if (s.verdict == Verdict::correct) solves_[s.team].emplace(s.challenge, s.ts);
    if (s.verdict == Verdict::wrong) pair.wrong.push_back(s.ts);
    if (r.contains("locked_until")) pair.locked_until = r.at("locked_until");
    submissions_.push_back(std::move(s));
  } else if (type == "hint") {
    // Logged only.
  } else if (type == "session") {
    LiveSession s;
    s.id = r.at("id");
    s.team = r.at("team");
    s.start = r.at("start");
    s.end = r.at("end");
    s.quiet_since = s.start;
    sessions_[s.id] = s;
  } else if (type == "declaration") {
    Declaration d;
    d.id = r.at("id");
    d.session = r.at("session");
    d.team = r.at("team");
    d.profile = r.at("profile");
    d.goal = r.at("goal");
    if (!r.at("scenario").is_null()) d.scenario = r.at("scenario").get<std::string>();
    d.declared_at = r.at("declared_at");
    declarations_[d.id] = d;
    declaration_order_.push_back(d.id);
  } else if (type == "adjudication") {
    Declaration& d = declarations_.at(r.at("id").get<std::string>());
    d.adjudicated_at = r.at("ts").get<double>();
    d.detections = r.at("detections");
    d.mechanisms = r.at("mechanisms").get<std::set<std::string>>();
    d.control = rational_from(r.at("control").get<std::string>());
    d.undo_confirmed = r.at("undo_confirmed");
    if (r.at("score").is_null()) {
      d.status = DeclarationStatus::voided;
    } else {
      d.status = DeclarationStatus::scored;
      d.record = score::ScoreRecord{d.id, d.team, d.goal,
                                    rational_from(r.at("score").get<std::string>()),
                                    *d.adjudicated_at};
    }
    sessions_.at(d.session).quiet_since = *d.adjudicated_at;
  } else {
    throw std::invalid_argument("unknown ledger record '" + type + "'");
  }
}

SubmitResult Game::submit(const std::string& team, const std::string& challenge_id,
                          const std::string& candidate, double ts) {
  std::unique_lock lock(mutex_);
  if (!has_team(team)) throw GameError(401, "unknown team");
  const Challenge& ch = challenge(challenge_id);
  if (!ch.released) throw GameError(403, "challenge not released");

  SubmitResult result;
  auto& pair = pairs_[{team, ch.id}];
  json record = {{"type", "submission"}, {"id", submissions_.size() + 1}, {"team", team},
                 {"challenge", ch.id},   {"candidate", candidate},      {"ts", ts}};
  if (solves_[team].contains(ch.id)) {
    result.verdict = Verdict::duplicate;
  } else if (pair.locked_until > ts) {
    result.verdict = Verdict::locked;
    result.locked_until = pair.locked_until;
  } else {
    const auto recent = std::count_if(pair.wrong.begin(), pair.wrong.end(), [&](double w) {
      return w > ts - options_.lockout.window && w <= ts;
    });
    if (recent >= options_.lockout.max_wrong) {
      result.verdict = Verdict::locked;
      result.locked_until = ts + options_.lockout.lock;
      record["locked_until"] = *result.locked_until;
    } else if (constant_time_equals(candidate, ch.flag)) {
      result.verdict = Verdict::correct;
      result.points_awarded = ch.points;
    } else {
      result.verdict = Verdict::wrong;
    }
  }
  record["verdict"] = to_string(result.verdict);
  record["points"] = result.points_awarded;
  append(record);
  result.total = total_locked(team);
  return result;
}

std::vector<Submission> Game::submissions(const std::string& team) const {
  std::shared_lock lock(mutex_);
  std::vector<Submission> out;
  for (const auto& s : submissions_) {
    if (s.team == team) out.push_back(s);
  }
  return out;
}

std::size_t Game::submission_count() const {
  std::shared_lock lock(mutex_);
  return submissions_.size();
}

std::string Game::hint(const std::string& team, const std::string& challenge_id,
                       std::size_t index, double ts) {
  std::unique_lock lock(mutex_);
  if (!has_team(team)) throw GameError(401, "unknown team");
  const Challenge& ch = challenge(challenge_id);
  if (index >= ch.hints.size()) throw GameError(404, "no such hint");
  append({{"type", "hint"}, {"team", team}, {"challenge", ch.id}, {"index", index}, {"ts", ts}});
  return ch.hints[index];
}

std::set<std::string> Game::solved(const std::string& team) const {
  std::shared_lock lock(mutex_);
  std::set<std::string> out;
  if (auto it = solves_.find(team); it != solves_.end()) {
    for (const auto& [c, ts] : it->second) out.insert(c);
  }
  return out;
}

int Game::total_locked(const std::string& team) const {
  int sum = 0;
  if (auto it = solves_.find(team); it != solves_.end()) {
    for (const auto& [c, ts] : it->second) sum += challenge(c).points;
  }
  return sum;
}

int Game::total(const std::string& team) const {
  std::shared_lock lock(mutex_);
  return total_locked(team);
}

std::map<std::string, int> Game::totals() const {
  std::shared_lock lock(mutex_);
  std::map<std::string, int> out;
  for (const auto& t : teams_) out[t.id] = total_locked(t.id);
  return out;
}

Series Game::series(double from, double to) const {
  std::shared_lock lock(mutex_);
  Series out;
  if (!(from < to)) return out;
  std::vector<const Submission*> correct;
  for (const auto& s : submissions_) {
    if (s.verdict == Verdict::correct) correct.push_back(&s);
  }
  std::stable_sort(correct.begin(), correct.end(),
                   [](const Submission* a, const Submission* b) { return a->ts < b->ts; });
  for (const auto& t : teams_) {
    int running = 0;
    auto& pts = out[t.id];
    for (const auto* s : correct) {
      if (s->team == t.id && s->ts <= from) running += s->points;
    }
    pts.push_back({from, running});
    for (const auto* s : correct) {
      if (s->team != t.id || s->ts <= from || s->ts > to) continue;
      running += s->points;
      if (pts.back().t == s->ts) {
        pts.back().total = running;
      } else {
        pts.push_back({s->ts, running});
      }
    }
    if (pts.back().t != to) pts.push_back({to, running});
  }
  return out;
}

std::map<std::string, double> Game::time_spent() const {
  std::shared_lock lock(mutex_);
  std::map<std::string, double> out;
  for (const auto& [team, solves] : solves_) {
    if (solves.empty()) continue;
    auto [lo, hi] = std::minmax_element(solves.begin(), solves.end(),
                                        [](const auto& a, const auto& b) { return a.second < b.second; });
    out[team] = hi->second - lo->second;
  }
  return out;
}

LiveSession Game::open_session(const std::string& team, double start) {
  std::unique_lock lock(mutex_);
  if (!has_team(team)) throw GameError(404, "unknown team");
  for (const auto& [id, s] : sessions_) {
    if (s.team == team && start < s.end && s.start < start + options_.session_length) {
      throw GameError(409, "team already has an overlapping session");
    }
  }
  std::string id = "s" + std::to_string(sessions_.size() + 1);
  append({{"type", "session"}, {"id", id}, {"team", team}, {"start", start},
          {"end", start + options_.session_length}});
  return sessions_.at(id);
}

std::optional<LiveSession> Game::session(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

Declaration Game::declare(const std::string& session_id, const std::string& profile_id,
                          const std::string& goal, const std::optional<std::string>& scenario,
                          double ts, const ids::AlarmStore* alarms) {
  std::unique_lock lock(mutex_);
  auto sit = sessions_.find(session_id);
  if (sit == sessions_.end()) throw GameError(404, "unknown session");
  const LiveSession& s = sit->second;
  if (ts < s.start || ts > s.end) throw GameError(409, "outside the session window");
  const score::AttackerProfile* profile = nullptr;
  try {
    profile = &score::find_profile(profile_id);
    score::find_goal(goal);
  } catch (const std::exception& e) {
    throw GameError(400, e.what());
  }
  for (const auto& [id, d] : declarations_) {
    if (d.session == session_id && d.status == DeclarationStatus::pending) {
      throw GameError(409, "session already has an attack in progress");
    }
  }
  if (scenario) {
    attack::Scenario sc;
    try {
      sc = attack::load_scenario(*scenario);
    } catch (const std::exception& e) {
      throw GameError(400, e.what());
    }
    if (!score::permits(*profile, sc.capabilities)) {
      throw GameError(403, "profile " + profile_id + " may not run " + sc.id);
    }
  }
  if (alarms) {
    ids::AlarmFilter f;
    f.session = session_id;
    f.from = s.quiet_since;
    f.to = ts;
    if (!alarms->query(f).empty()) {
      throw GameError(409, "attack traffic observed before the declaration");
    }
  }
  std::string id = "d" + std::to_string(declarations_.size() + 1);
  json rec = {{"type", "declaration"}, {"id", id},         {"session", session_id},
              {"team", s.team},        {"profile", profile_id}, {"goal", goal},
              {"declared_at", ts}};
  rec["scenario"] = scenario ? json(*scenario) : json(nullptr);
  append(rec);
  return declarations_.at(id);
}

Declaration Game::adjudicate(const std::string& declaration_id, const score::Rational& control,
                             bool undo_confirmed, double ts, const ids::AlarmStore& alarms) {
  std::unique_lock lock(mutex_);
  auto it = declarations_.find(declaration_id);
  if (it == declarations_.end()) throw GameError(404, "unknown declaration");
  const Declaration& d = it->second;
  if (d.status != DeclarationStatus::pending) throw GameError(409, "already adjudicated");
  if (ts < d.declared_at) throw GameError(400, "adjudication precedes the declaration");
  if (control < score::Rational(1, 5) || control > score::Rational(1) ||
      (control * 20).denominator() != 1) {
    throw GameError(400, "control must be a multiple of 0.05 in [0.2, 1.0]");
  }
  ids::AlarmFilter f;
  f.from = d.declared_at;
  f.to = ts;
  f.session = d.session;
  std::set<std::string> mechanisms;
  for (const auto& a : alarms.query(f)) {
    if (ids::is_detection(a.rule)) mechanisms.insert(std::string(ids::to_string(a.rule)));
  }
  const int x = std::min<int>(static_cast<int>(mechanisms.size()), score::kMaxDetections);
  json rec = {{"type", "adjudication"}, {"id", d.id},           {"ts", ts},
              {"detections", x},        {"mechanisms", mechanisms},
              {"control", rational_text(control)}, {"undo_confirmed", undo_confirmed}};
  if (undo_confirmed) {
    const auto& p = score::find_profile(d.profile);
    auto g = score::Rational(score::find_goal(d.goal).points);
    rec["score"] = rational_text(score::compute_score(g, control, x, p.factor));
  } else {
    rec["score"] = nullptr;
  }
  append(rec);
  return it->second;
}

std::optional<Declaration> Game::declaration(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = declarations_.find(id);
  if (it == declarations_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> Game::active_profile(const std::string& team) const {
  std::shared_lock lock(mutex_);
  for (const auto& [id, d] : declarations_) {
    if (d.team == team && d.status == DeclarationStatus::pending) return d.profile;
  }
  return std::nullopt;
}

std::vector<score::ScoreRecord> Game::score_records() const {
  std::shared_lock lock(mutex_);
  std::vector<score::ScoreRecord> out;
  for (const auto& id : declaration_order_) {
    const auto& d = declarations_.at(id);
    if (d.record) out.push_back(*d.record);
  }
  return out;
}

std::map<std::string, score::Rational> Game::live_totals() const {
  auto records = score_records();
  std::map<std::string, std::vector<score::ScoreRecord>> by_team;
  for (auto& r : records) by_team[r.team].push_back(r);
  std::map<std::string, score::Rational> out;
  for (const auto& t : teams_) out[t.id] = score::aggregate_team(by_team[t.id]);
  return out;
}

}  // namespace icsrange::game
