#include "icsrange/score/score.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <map>

namespace icsrange::score {

namespace {

constexpr std::array<std::string_view, 4> kCapabilityNames = {
    "network_tools", "engineering_tools", "admin_accounts", "physical_access"};

}  // namespace

const std::vector<Goal>& goal_catalog() {
  static const std::vector<Goal> catalog = {
      {"motorized_valve", GoalCategory::physical, 100},
      {"pump", GoalCategory::physical, 130},
      {"pressure", GoalCategory::physical, 145},
      {"tank_level", GoalCategory::physical, 160},
      {"chemical_dosing", GoalCategory::physical, 180},
      {"historian", GoalCategory::sensor_data, 100},
      {"hmi_scada", GoalCategory::sensor_data, 130},
      {"plc", GoalCategory::sensor_data, 160},
      {"rio", GoalCategory::sensor_data, 200},
  };
  return catalog;
}

const Goal& find_goal(std::string_view id) {
  for (const auto& g : goal_catalog()) {
    if (g.id == id) return g;
  }
  throw ScoreError("unknown goal '" + std::string(id) + "'");
}

std::string_view to_string(Capability c) { return kCapabilityNames[static_cast<std::size_t>(c)]; }

Capability parse_capability(std::string_view s) {
  for (std::size_t i = 0; i < kCapabilityNames.size(); ++i) {
    if (kCapabilityNames[i] == s) return static_cast<Capability>(i);
  }
  throw ScoreError("unknown capability '" + std::string(s) + "'");
}

const std::vector<AttackerProfile>& attacker_profiles() {
  using C = Capability;
  static const std::vector<AttackerProfile> profiles = {
      {"cybercriminal", Rational(2), {C::network_tools}},
      {"insider", Rational(3, 2), {C::engineering_tools, C::admin_accounts, C::physical_access}},
      {"strong",
       Rational(1),
       {C::network_tools, C::engineering_tools, C::admin_accounts, C::physical_access}},
  };
  return profiles;
}

const AttackerProfile& find_profile(std::string_view id) {
  for (const auto& p : attacker_profiles()) {
    if (p.id == id) return p;
  }
  throw ScoreError("unknown attacker profile '" + std::string(id) + "'");
}

bool permits(const AttackerProfile& profile, const std::set<Capability>& required) {
  for (auto c : required) {
    if (!profile.capabilities.contains(c)) return false;
  }
  return true;
}

Rational detection_modifier(int x) {
  if (x < 0 || x > kMaxDetections) {
    throw ScoreError("detection count out of range: " + std::to_string(x));
  }
  return Rational(2) - Rational(x, kMaxDetections);
}

Rational compute_score(Rational g, Rational c, int x, Rational p) {
  if (g <= 0) throw ScoreError("goal points must be positive");
  if (c < Rational(1, 5) || c > Rational(1)) throw ScoreError("control level outside [0.2, 1.0]");
  if (p != Rational(1) && p != Rational(3, 2) && p != Rational(2)) {
    throw ScoreError("profile factor must be 1, 1.5 or 2");
  }
  return g * c * detection_modifier(x) * p;
}

std::int64_t round_half_up(Rational v) {
  // floor(v + 1/2) with floor division that also holds for negatives.
  Rational shifted = v + Rational(1, 2);
  std::int64_t q = shifted.numerator() / shifted.denominator();
  if (shifted.numerator() % shifted.denominator() != 0 && shifted.numerator() < 0) --q;
  return q;
}

Rational parse_decimal(std::string_view text) {
  auto fail = [&] { throw ScoreError("not a decimal number: '" + std::string(text) + "'"); };
  if (text.empty()) fail();
  bool negative = text.front() == '-';
  if (negative) text.remove_prefix(1);
  auto dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if ((whole.empty() && frac.empty()) || frac.size() > 9) fail();
  std::int64_t w = 0;
  std::int64_t f = 0;
  if (!whole.empty()) {
    auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
    if (ec != std::errc() || p != whole.data() + whole.size()) fail();
  }
  std::int64_t scale = 1;
  if (!frac.empty()) {
    auto [p, ec] = std::from_chars(frac.data(), frac.data() + frac.size(), f);
    if (ec != std::errc() || p != frac.data() + frac.size()) fail();
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  }
  Rational v = Rational(w) + Rational(f, scale);
  return negative ? -v : v;
}

std::string format_decimal(Rational v, int places) {
  std::int64_t scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  std::int64_t scaled = round_half_up(v * scale);
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string digits = std::to_string(scaled);
  if (places > 0) {
    if (digits.size() <= static_cast<std::size_t>(places)) {
      digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
  }
  return negative ? "-" + digits : digits;
}

Rational aggregate_team(std::span<const ScoreRecord> records) {
  std::map<std::string, Rational> best;
  for (const auto& r : records) {
    auto [it, inserted] = best.emplace(r.goal, r.score);
    if (!inserted && r.score > it->second) it->second = r.score;
  }
  Rational total(0);
  for (const auto& [goal, s] : best) total += s;
  return total;
}

std::optional<Rational> detection_rate(std::span<const int> counts) {
  if (counts.empty()) return std::nullopt;
  std::int64_t sum = 0;
  for (int c : counts) {
    if (c < 0) throw ScoreError("negative detection count");
    sum += c;
  }
  return Rational(sum, static_cast<std::int64_t>(counts.size()));
}

std::optional<Rational> detection_rate(std::span<const AttackOutcome> attacks,
                                       const std::set<std::string>& subset) {
  std::vector<int> counts;
  for (const auto& a : attacks) {
    if (!a.success) continue;
    int n = 0;
    for (const auto& m : a.mechanisms) n += subset.contains(m) ? 1 : 0;
    counts.push_back(n);
  }
  return detection_rate(counts);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ScoreError("pearson: series lengths differ");
  if (xs.size() < 2) throw ScoreError("pearson: need at least two samples");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx;
    double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ScoreError("pearson: undefined for a constant series");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace icsrange::score
