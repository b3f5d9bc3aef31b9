#include <gtest/gtest.h>

#include <fstream>

#include <json.hpp>

#include "icsrange/score/score.hpp"
#include "oracles.hpp"

using namespace icsrange::score;

namespace {

bool same(Rational r, oracle::Frac f) {
  return static_cast<__int128>(r.numerator()) == f.num && static_cast<__int128>(r.denominator()) == f.den;
}

}  // namespace

TEST(Score, DirectEvaluations) {
  EXPECT_EQ(compute_score(100, 1, 0, 1), Rational(200));
  EXPECT_EQ(compute_score(130, 1, 6, 1), Rational(130));
  EXPECT_EQ(compute_score(180, 1, 1, Rational(3, 2)), Rational(495));
  EXPECT_EQ(compute_score(100, Rational(1, 5), 6, 1), Rational(20));
}

TEST(Score, FullGridAgainstFractionOracle) {
  int checked = 0;
  for (const auto& goal : goal_catalog()) {
    for (int c20 = 4; c20 <= 20; ++c20) {
      for (int x = 0; x <= kMaxDetections; ++x) {
        for (int p2 : {2, 3, 4}) {
          auto s = compute_score(goal.points, Rational(c20, 20), x, Rational(p2, 2));
          ASSERT_TRUE(same(s, oracle::eq1(goal.points, c20, x, p2)))
              << goal.id << " c=" << c20 << "/20 x=" << x << " p=" << p2 << "/2";
          ++checked;
        }
      }
    }
  }
  EXPECT_EQ(checked, 9 * 17 * 7 * 3);
}

TEST(Score, DetectionModifierBounds) {
  EXPECT_EQ(detection_modifier(0), Rational(2));
  EXPECT_EQ(detection_modifier(6), Rational(1));
  EXPECT_THROW(detection_modifier(7), ScoreError);
  EXPECT_THROW(detection_modifier(-1), ScoreError);
}

TEST(Score, RejectsOutOfRangeInputs) {
  EXPECT_THROW(compute_score(100, Rational(1, 10), 0, 1), ScoreError);
  EXPECT_THROW(compute_score(100, Rational(11, 10), 0, 1), ScoreError);
  EXPECT_THROW(compute_score(100, 1, 0, Rational(5, 4)), ScoreError);
  EXPECT_THROW(compute_score(0, 1, 0, 1), ScoreError);
}

TEST(Score, RoundingIsHalfUpAtDisplayOnly) {
  auto s = compute_score(find_goal("tank_level").points, 1, 2, 1);
  EXPECT_EQ(s, Rational(800, 3));
  EXPECT_EQ(round_half_up(s), 267);
  EXPECT_EQ(round_half_up(Rational(5, 2)), 3);
  EXPECT_EQ(round_half_up(Rational(-5, 2)), -2);
  EXPECT_EQ(round_half_up(Rational(7, 3)), 2);
}

TEST(Score, DecimalsAreExact) {
  EXPECT_EQ(parse_decimal("0.35"), Rational(7, 20));
  EXPECT_EQ(parse_decimal("1"), Rational(1));
  EXPECT_EQ(parse_decimal(".5"), Rational(1, 2));
  EXPECT_THROW(parse_decimal("0.3x"), ScoreError);
  EXPECT_THROW(parse_decimal(""), ScoreError);
  EXPECT_EQ(format_decimal(Rational(800, 3)), "266.67");
  EXPECT_EQ(format_decimal(Rational(1, 20), 2), "0.05");
}

TEST(Aggregate, BestPerGoal) {
  std::vector<ScoreRecord> pump{{"d1", "T1", "pump", 130}, {"d2", "T1", "pump", 200}};
  EXPECT_EQ(aggregate_team(pump), Rational(200));
  std::vector<ScoreRecord> one{{"d1", "T1", "pump", 130}};
  EXPECT_EQ(aggregate_team(one), Rational(130));
  std::vector<ScoreRecord> two{{"d1", "T1", "motorized_valve", 100}, {"d2", "T1", "pump", 130}};
  EXPECT_EQ(aggregate_team(two), Rational(230));
  EXPECT_EQ(aggregate_team({}), Rational(0));
}

TEST(Profiles, FactorsAndCapabilities) {
  EXPECT_EQ(find_profile("cybercriminal").factor, Rational(2));
  EXPECT_EQ(find_profile("insider").factor, Rational(3, 2));
  EXPECT_EQ(find_profile("strong").factor, Rational(1));
  EXPECT_TRUE(permits(find_profile("cybercriminal"), {Capability::network_tools}));
  EXPECT_FALSE(permits(find_profile("insider"), {Capability::network_tools}));
  EXPECT_TRUE(permits(find_profile("insider"), {Capability::admin_accounts}));
  EXPECT_FALSE(permits(find_profile("cybercriminal"), {Capability::physical_access}));
  EXPECT_THROW(find_profile("nation_state"), ScoreError);
  EXPECT_THROW(find_goal("moon"), ScoreError);
}

TEST(DetectionRate, CountsFromTable) {
  std::vector<int> ones{1, 1, 1, 1, 1}, five{2, 1, 1, 1, 1}, three{2, 1, 1};
  EXPECT_EQ(detection_rate(std::span<const int>(ones)), Rational(1));
  EXPECT_EQ(detection_rate(std::span<const int>(five)), Rational(6, 5));
  EXPECT_EQ(detection_rate(std::span<const int>(three)), Rational(4, 3));
  EXPECT_FALSE(detection_rate(std::span<const int>()));
}

TEST(DetectionRate, OnlySuccessfulAttacksAndSubsetMechanisms) {
  std::vector<AttackOutcome> log{
      {"T1", true, {"network", "commercial_ids"}},
      {"T1", false, {"network", "process_invariant"}},
      {"T1", true, {"process_invariant", "network"}},
  };
  EXPECT_EQ(detection_rate(log, {"network", "process_invariant"}), Rational(3, 2));
  EXPECT_EQ(detection_rate(log, {"commercial_ids"}), Rational(1, 2));
}

TEST(DetectionRate, FixtureRowsPerTeam) {
  std::ifstream in(FIXTURE_DIR "/live_attacks.jsonl");
  ASSERT_TRUE(in);
  std::map<std::string, std::vector<AttackOutcome>> by_team;
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    by_team[j["team"]].push_back({j["team"], j["success"], j["mechanisms"].get<std::set<std::string>>()});
  }
  const std::set<std::string> academic{"process_invariant", "network"};
  std::map<std::string, Rational> expect{{"T1", 1}, {"T2", 1}, {"T3", 1}, {"T4", 1},
                                         {"T5", Rational(6, 5)}, {"T6", Rational(4, 3)}};
  for (const auto& [team, want] : expect) EXPECT_EQ(detection_rate(by_team[team], academic), want) << team;
}

TEST(Pearson, PerfectAndAnti) {
  std::vector<double> xs{1, 2, 3, 4}, ys{2, 4, 6, 8}, zs{-1, -2, -3, -4};
  EXPECT_NEAR(pearson(xs, ys), 1.0, 1e-12);
  EXPECT_NEAR(pearson(xs, zs), -1.0, 1e-12);
}

TEST(Pearson, HoursVersusPointsWithoutOutlier) {
  std::vector<double> hours{30, 44, 27, 28, 21}, points{250, 510, 86, 161, 66};
  const double r = pearson(hours, points);
  EXPECT_NEAR(r, oracle::pearson(hours, points), 1e-12);
  EXPECT_NEAR(r, 0.97, 0.005);
}

TEST(Pearson, Errors) {
  std::vector<double> a{1, 2}, b{1}, c{3, 3};
  EXPECT_THROW(pearson(a, b), ScoreError);
  EXPECT_THROW(pearson(b, b), ScoreError);
  EXPECT_THROW(pearson(a, c), ScoreError);
}
