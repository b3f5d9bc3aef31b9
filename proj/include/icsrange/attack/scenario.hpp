#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "icsrange/score/score.hpp"

namespace icsrange::attack {

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Condition over the running range.
///   <subject> [<op> <number>]        op in == != < <= > >=
///   transcript contains <text>
///   readout contains <text>
/// Subjects: plant.<sensor>, plant.overflow.<tank>, tag.<device>.<tag>,
/// hmi.age.<tag>, hmi.stale.<tag>, skew.<device>.<tag>, true.
struct Predicate {
  enum class Kind { truthy, compare, contains } kind = Kind::truthy;
  std::string subject;
  std::string op;
  double value = 0.0;
  std::string text;
  std::string source;
};

Predicate parse_predicate(std::string_view text);

struct Step {
  std::string action;
  std::vector<std::string> args;
  std::size_t line = 0;
};

struct Scenario {
  std::string id;
  std::string description;
  std::set<score::Capability> capabilities;
  std::vector<Step> steps;
  std::vector<Step> undo;
  std::optional<Predicate> success;
};

/// Capability a step needs, if any.
std::optional<score::Capability> capability_of(const Step& step);

/// Line format:
///   scenario <id>
///   description <text>
///   requires <capability>...
///   step <action> <args>...
///   undo <action> <args>...
///   success <predicate>
/// `#` starts a comment line. Every step's capability must be declared.
Scenario parse_scenario(std::string_view source);

/// Scenarios shipped with the range, keyed by id.
const std::map<std::string, std::string>& builtin_scenarios();
Scenario load_scenario(std::string_view id_or_path);

}  // namespace icsrange::attack
