#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

namespace icsrange::score {

using Rational = boost::rational<std::int64_t>;

class ScoreError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class GoalCategory { physical, sensor_data };

struct Goal {
  std::string id;
  GoalCategory category;
  std::int64_t points;
};

/// Physical process goals and sensor-data goals with their base points g.
const std::vector<Goal>& goal_catalog();
const Goal& find_goal(std::string_view id);

enum class Capability { network_tools, engineering_tools, admin_accounts, physical_access };
std::string_view to_string(Capability c);
Capability parse_capability(std::string_view s);

struct AttackerProfile {
  std::string id;
  Rational factor;  // p
  std::set<Capability> capabilities;
};

/// cybercriminal (p=2), insider (p=3/2), strong (p=1).
const std::vector<AttackerProfile>& attacker_profiles();
const AttackerProfile& find_profile(std::string_view id);
bool permits(const AttackerProfile& profile, const std::set<Capability>& required);

inline constexpr int kMaxDetections = 6;

/// d = 2 - x/6.
Rational detection_modifier(int x);

/// s = g * c * (2 - x/6) * p, exact. Requires 1/5 <= c <= 1, 0 <= x <= 6 and
/// p in {1, 3/2, 2}.
Rational compute_score(Rational g, Rational c, int x, Rational p);

/// Half-up rounding to whole points, used only for display and totals.
std::int64_t round_half_up(Rational v);

/// Exact decimal parsing ("0.35" -> 7/20).
Rational parse_decimal(std::string_view text);
std::string format_decimal(Rational v, int places = 2);

struct ScoreRecord {
  std::string declaration;
  std::string team;
  std::string goal;
  Rational score;
  double computed_at = 0.0;
};

/// Sum over distinct goals of the best score on that goal.
Rational aggregate_team(std::span<const ScoreRecord> records);

/// Mean of per-attack detection counts; nullopt when there are no attacks.
std::optional<Rational> detection_rate(std::span<const int> counts);

struct AttackOutcome {
  std::string team;
  bool success = false;
  std::set<std::string> mechanisms;  // detection rules triggered
};

/// d_rate over successful attacks, counting only mechanisms in `subset`.
std::optional<Rational> detection_rate(std::span<const AttackOutcome> attacks,
                                       const std::set<std::string>& subset);

/// Pearson correlation coefficient. Throws on size mismatch, fewer than two
/// samples or a constant series.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace icsrange::score
