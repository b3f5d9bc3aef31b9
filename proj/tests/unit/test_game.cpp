#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "icsrange/game/game.hpp"

using namespace icsrange;
using namespace icsrange::game;

namespace {

std::vector<Challenge> small_pack() {
  return {{"c1", Category::misc, 250, "one", "", {"first hint", "second hint"}, "CTF{one}", true},
          {"c2", Category::plc, 100, "two", "", {}, "CTF{two}", true},
          {"c3", Category::trivia, 10, "hidden", "", {}, "CTF{three}", false}};
}

std::vector<Team> two_teams() { return {{"A", "Alpha", "tok-a"}, {"B", "Beta", "tok-b"}}; }

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove(path);
  }
  ~TempFile() { std::filesystem::remove(path); }
};

ids::Alarm alarm(double ts, ids::AlarmRule rule) {
  ids::Alarm a;
  a.ts = ts;
  a.rule = rule;
  a.source_node = "test";
  a.severity = "high";
  return a;
}

}  // namespace

TEST(Flags, Format) {
  EXPECT_TRUE(is_valid_flag("CTF{abc_123}"));
  EXPECT_TRUE(is_valid_flag("ascflag{10-20}"));
  EXPECT_FALSE(is_valid_flag("CTF{has space}"));
  EXPECT_FALSE(is_valid_flag("CTF{}"));
  EXPECT_FALSE(is_valid_flag("flag{x}"));
  EXPECT_FALSE(is_valid_flag("CTF{" + std::string(65, 'a') + "}"));
  EXPECT_TRUE(constant_time_equals("abc", "abc"));
  EXPECT_FALSE(constant_time_equals("abc", "abd"));
  EXPECT_FALSE(constant_time_equals("abc", "abcd"));
}

TEST(Pack, ParseAndErrors) {
  auto c = parse_challenge("id x1\ncategory FORENSICS\npoints 30\ntitle T\ndescription a\ndescription b\nhint h1\n");
  EXPECT_EQ(c.id, "x1");
  EXPECT_EQ(c.category, Category::forensics);
  EXPECT_EQ(c.description, "a\nb");
  EXPECT_EQ(c.hints.size(), 1u);
  EXPECT_THROW(parse_challenge("id x\npoints ten\n"), PackError);
  EXPECT_THROW(parse_challenge("id x\npoints 5\ncolour red\n"), PackError);
  EXPECT_THROW(parse_challenge("id x\nid y\npoints 5\n"), PackError);
  EXPECT_THROW(parse_challenge("points 5\n"), PackError);
}

TEST(Pack, FixturePackTotals) {
  auto pack = load_pack(FIXTURE_DIR "/pack");
  ASSERT_EQ(pack.size(), 20u);
  std::map<Category, std::pair<int, int>> by;
  for (const auto& c : pack) {
    by[c.category].first += 1;
    by[c.category].second += c.points;
    EXPECT_TRUE(is_valid_flag(c.flag));
  }
  EXPECT_EQ(by[Category::minicps], std::make_pair(5, 210));
  EXPECT_EQ(by[Category::trivia], std::make_pair(6, 45));
  EXPECT_EQ(by[Category::forensics], std::make_pair(4, 105));
  EXPECT_EQ(by[Category::plc], std::make_pair(3, 60));
  EXPECT_EQ(by[Category::misc], std::make_pair(2, 90));
}

TEST(Pack, MissingFlagsFileRejected) {
  auto dir = std::filesystem::temp_directory_path() / "icsrange-pack-noflags";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "a.chal") << "id a\ncategory MISC\npoints 5\n";
  EXPECT_THROW(load_pack(dir), PackError);
  std::ofstream(dir / "flags.txt") << "a not-a-flag\n";
  EXPECT_THROW(load_pack(dir), PackError);
  std::ofstream(dir / "flags.txt") << "a CTF{ok}\n";
  EXPECT_EQ(load_pack(dir).at(0).flag, "CTF{ok}");
  std::filesystem::remove_all(dir);
}

TEST(Submit, CorrectThenDuplicate) {
  Game g(small_pack(), two_teams());
  auto r = g.submit("A", "c1", "CTF{one}", 10);
  EXPECT_EQ(r.verdict, Verdict::correct);
  EXPECT_EQ(r.points_awarded, 250);
  EXPECT_EQ(r.total, 250);
  auto d = g.submit("A", "c1", "CTF{one}", 11);
  EXPECT_EQ(d.verdict, Verdict::duplicate);
  EXPECT_EQ(d.points_awarded, 0);
  EXPECT_EQ(g.total("A"), 250);
}

TEST(Submit, UnknownAndUnreleased) {
  Game g(small_pack(), two_teams());
  EXPECT_THROW(g.submit("Z", "c1", "CTF{one}", 1), GameError);
  EXPECT_THROW(g.submit("A", "nope", "CTF{one}", 1), GameError);
  try {
    g.submit("A", "c3", "CTF{three}", 1);
    FAIL();
  } catch (const GameError& e) {
    EXPECT_EQ(e.status(), 403);
  }
}

TEST(Lockout, SixthWrongLocksEvenWhenCorrect) {
  Game g(small_pack(), two_teams());
  for (int i = 0; i < 5; ++i) EXPECT_EQ(g.submit("A", "c1", "CTF{nope}", 100 + i).verdict, Verdict::wrong);
  auto sixth = g.submit("A", "c1", "CTF{one}", 110);
  EXPECT_EQ(sixth.verdict, Verdict::locked);
  ASSERT_TRUE(sixth.locked_until);
  EXPECT_DOUBLE_EQ(*sixth.locked_until, 110 + 300);
  EXPECT_EQ(g.submit("A", "c1", "CTF{one}", 409).verdict, Verdict::locked);
  EXPECT_EQ(g.submit("A", "c1", "CTF{one}", 410).verdict, Verdict::correct);
  EXPECT_EQ(g.total("A"), 250);
}

TEST(Lockout, ScopedToTeamAndChallenge) {
  Game g(small_pack(), two_teams());
  for (int i = 0; i < 6; ++i) g.submit("A", "c1", "CTF{nope}", i);
  EXPECT_EQ(g.submit("A", "c2", "CTF{two}", 7).verdict, Verdict::correct);
  EXPECT_EQ(g.submit("B", "c1", "CTF{one}", 7).verdict, Verdict::correct);
}

TEST(Lockout, SpreadOutWrongAnswersDoNotLock) {
  Game g(small_pack(), two_teams());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(g.submit("A", "c1", "CTF{nope}", i * 13.0).verdict, Verdict::wrong);
  EXPECT_EQ(g.submit("A", "c1", "CTF{one}", 200).verdict, Verdict::correct);
}

TEST(Hints, FreeAndLogged) {
  TempFile f("icsrange-hints.jsonl");
  Game g(small_pack(), two_teams(), {}, f.path);
  EXPECT_EQ(g.hint("A", "c1", 1, 5), "second hint");
  EXPECT_THROW(g.hint("A", "c1", 2, 5), GameError);
  EXPECT_EQ(g.total("A"), 0);
  std::ifstream in(f.path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(nlohmann::json::parse(line)["type"], "hint");
}

TEST(Series, EmptyIsFlatZero) {
  Game g(small_pack(), two_teams());
  auto s = g.series(0, 100);
  ASSERT_EQ(s.size(), 2u);
  for (const auto& [team, pts] : s) {
    for (const auto& p : pts) EXPECT_EQ(p.total, 0);
  }
  EXPECT_TRUE(g.series(5, 5).empty());
}

TEST(Series, SingleSolveIsOneStep) {
  Game g(small_pack(), two_teams());
  g.submit("A", "c1", "CTF{one}", 50);
  auto a = g.series(0, 100).at("A");
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0], (SeriesPoint{0, 0}));
  EXPECT_EQ(a[1], (SeriesPoint{50, 250}));
  EXPECT_EQ(a[2], (SeriesPoint{100, 250}));
}

TEST(Series, TimeSpentSpansFirstToLastSolve) {
  Game g(small_pack(), two_teams());
  g.submit("A", "c1", "CTF{one}", 3600);
  g.submit("A", "c2", "CTF{two}", 3 * 3600);
  EXPECT_DOUBLE_EQ(g.time_spent().at("A"), 2 * 3600);
  EXPECT_FALSE(g.time_spent().contains("B"));
}

TEST(Ledger, ReplayRestoresEverything) {
  TempFile f("icsrange-ledger.jsonl");
  ids::AlarmStore alarms;
  {
    Game g(small_pack(), two_teams(), {}, f.path);
    g.submit("A", "c1", "CTF{one}", 10);
    for (int i = 0; i < 6; ++i) g.submit("B", "c2", "CTF{x}", 20 + i);
    g.hint("B", "c1", 0, 30);
    auto s = g.open_session("A", 1000);
    auto d = g.declare(s.id, "strong", "tank_level", std::string("tank_sensor_tamper"), 1010, &alarms);
    alarms.begin_session(s.id);
    alarms.append(alarm(1020, ids::AlarmRule::invariant));
    alarms.append(alarm(1021, ids::AlarmRule::tag_divergence));
    g.adjudicate(d.id, score::Rational(1), true, 1100, alarms);
  }
  Game again(small_pack(), two_teams(), {}, f.path);
  EXPECT_EQ(again.total("A"), 250);
  EXPECT_EQ(again.submission_count(), 7u);
  EXPECT_EQ(again.submit("B", "c2", "CTF{two}", 100).verdict, Verdict::locked);
  auto d = again.declaration("d1");
  ASSERT_TRUE(d);
  EXPECT_EQ(d->status, DeclarationStatus::scored);
  EXPECT_EQ(d->detections, 2);
  EXPECT_EQ(again.live_totals().at("A"), score::Rational(800, 3));
  EXPECT_EQ(again.open_session("B", 5000).id, "s2");
}

TEST(Ledger, FixtureReplayIsDeterministic) {
  auto replay = [] {
    Game g(load_pack(FIXTURE_DIR "/pack"), load_teams(FIXTURE_DIR "/teams.json"));
    std::ifstream in(FIXTURE_DIR "/submissions_77.jsonl");
    auto results = replay_log(g, in);
    EXPECT_EQ(results.size(), 77u);
    for (const auto& r : results) EXPECT_EQ(r.verdict, Verdict::correct);
    return std::make_pair(g.totals(), g.series(0, 50 * 3600));
  };
  auto first = replay();
  auto second = replay();
  EXPECT_EQ(first, second);
  std::map<std::string, int> want{{"T1", 250}, {"T2", 510}, {"T3", 86}, {"T4", 161}, {"T5", 66}, {"T6", 510}};
  EXPECT_EQ(first.first, want);
}

TEST(Ledger, FixtureHoursMatchTeams) {
  Game g(load_pack(FIXTURE_DIR "/pack"), load_teams(FIXTURE_DIR "/teams.json"));
  std::ifstream in(FIXTURE_DIR "/submissions_77.jsonl");
  replay_log(g, in);
  std::map<std::string, double> hours{{"T1", 30}, {"T2", 44}, {"T3", 27}, {"T4", 28}, {"T5", 21}, {"T6", 4}};
  for (const auto& [team, h] : hours) EXPECT_DOUBLE_EQ(g.time_spent().at(team), h * 3600) << team;
}

TEST(Live, CapabilityMismatchRejected) {
  Game g(small_pack(), two_teams());
  auto s = g.open_session("A", 0);
  try {
    g.declare(s.id, "insider", "pump", std::string("syn_flood_plc1"), 10);
    FAIL();
  } catch (const GameError& e) {
    EXPECT_EQ(e.status(), 403);
  }
  EXPECT_NO_THROW(g.declare(s.id, "insider", "chemical_dosing", std::string("hmi_dosing_manipulation"), 10));
}

TEST(Live, StrongTankLevelTwoDetections) {
  Game g(small_pack(), two_teams());
  ids::AlarmStore alarms;
  auto s = g.open_session("A", 0);
  alarms.begin_session(s.id);
  auto d = g.declare(s.id, "strong", "tank_level", std::nullopt, 10, &alarms);
  alarms.append(alarm(20, ids::AlarmRule::invariant));
  alarms.append(alarm(21, ids::AlarmRule::tag_divergence));
  alarms.append(alarm(22, ids::AlarmRule::invariant));
  alarms.append(alarm(23, ids::AlarmRule::scan_fault));
  auto out = g.adjudicate(d.id, score::Rational(1), true, 100, alarms);
  EXPECT_EQ(out.detections, 2);
  ASSERT_TRUE(out.record);
  EXPECT_EQ(out.record->score, score::Rational(800, 3));
  EXPECT_EQ(score::round_half_up(out.record->score), 267);
}

TEST(Live, OtherSessionsAlarmsDoNotCount) {
  Game g(small_pack(), two_teams());
  ids::AlarmStore alarms;
  auto s = g.open_session("A", 0);
  auto d = g.declare(s.id, "cybercriminal", "pump", std::nullopt, 10, &alarms);
  alarms.begin_session("someone-else");
  alarms.append(alarm(20, ids::AlarmRule::syn_flood));
  EXPECT_EQ(g.adjudicate(d.id, score::Rational(1), true, 30, alarms).detections, 0);
}

TEST(Live, UndoNotConfirmedVoids) {
  Game g(small_pack(), two_teams());
  ids::AlarmStore alarms;
  auto s = g.open_session("A", 0);
  auto d = g.declare(s.id, "strong", "pump", std::nullopt, 10);
  auto out = g.adjudicate(d.id, score::Rational(1), false, 20, alarms);
  EXPECT_EQ(out.status, DeclarationStatus::voided);
  EXPECT_FALSE(out.record);
  EXPECT_TRUE(g.score_records().empty());
}

TEST(Live, ControlMustBeOnTheGrid) {
  Game g(small_pack(), two_teams());
  ids::AlarmStore alarms;
  auto s = g.open_session("A", 0);
  auto d = g.declare(s.id, "strong", "pump", std::nullopt, 10);
  EXPECT_THROW(g.adjudicate(d.id, score::Rational(33, 100), true, 20, alarms), GameError);
  EXPECT_THROW(g.adjudicate(d.id, score::Rational(1, 10), true, 20, alarms), GameError);
  EXPECT_NO_THROW(g.adjudicate(d.id, score::Rational(7, 20), true, 20, alarms));
  EXPECT_THROW(g.adjudicate(d.id, score::Rational(1), true, 20, alarms), GameError);
}

TEST(Live, AlarmsBeforeDeclarationBlockIt) {
  Game g(small_pack(), two_teams());
  ids::AlarmStore alarms;
  auto s = g.open_session("A", 0);
  alarms.begin_session(s.id);
  alarms.append(alarm(5, ids::AlarmRule::arp_poison));
  EXPECT_THROW(g.declare(s.id, "strong", "pump", std::nullopt, 10, &alarms), GameError);
}

TEST(Live, OneAttackAtATimeAndBestPerGoal) {
  Game g(small_pack(), two_teams());
  ids::AlarmStore alarms;
  auto s = g.open_session("A", 0);
  auto d1 = g.declare(s.id, "strong", "pump", std::nullopt, 10);
  EXPECT_THROW(g.declare(s.id, "strong", "pressure", std::nullopt, 11), GameError);
  g.adjudicate(d1.id, score::Rational(13, 20), true, 20, alarms);  // 130 * 0.65 * 2 = 169
  auto d2 = g.declare(s.id, "strong", "pump", std::nullopt, 30);
  g.adjudicate(d2.id, score::Rational(1), true, 40, alarms);  // 260
  EXPECT_EQ(g.live_totals().at("A"), score::Rational(260));
  EXPECT_THROW(g.open_session("A", 100), GameError);
  EXPECT_THROW(g.declare(s.id, "strong", "pump", std::nullopt, 20000), GameError);
}
