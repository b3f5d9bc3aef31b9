#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "icsrange/plant/plant.hpp"
#include "icsrange/plc/program.hpp"
#include "icsrange/plc/tag.hpp"

namespace icsrange::plc {

using plant::ControlMode;

/// Values visible to one scan: numeric tags and the control mode of every
/// actuator the PLC owns.
struct Snapshot {
  double time = 0.0;
  std::map<std::string, double, std::less<>> values;
  std::map<std::string, ControlMode, std::less<>> modes;
};

struct ActuatorCommand {
  std::string target;
  std::string command;  // empty when only the mode changes
  ControlMode mode = ControlMode::automatic;

  bool operator==(const ActuatorCommand&) const = default;
};

struct PlcAlarm {
  enum class Kind { invariant, scan_fault } kind = Kind::invariant;
  std::string rule;
  double time = 0.0;
  std::string detail;
};

struct ScanResult {
  std::vector<ActuatorCommand> commands;
  std::vector<std::pair<std::string, TagValue>> tag_updates;
  std::vector<PlcAlarm> alarms;
};

struct TagDecl {
  std::string name;
  TagValue initial;
  bool writable = true;
};

struct PlcConfig {
  std::string id;
  std::string program;     // rung-language source
  std::string invariants;  // invariant rule file
  std::vector<std::string> actuators;  // owned actuators and process units
  std::vector<TagDecl> tags;
  double scan_period = 0.1;
};

/// Mode and manual-command tags for an owned actuator: `<ID>:MODE`, `<ID>:CMD`.
std::string mode_tag(std::string_view actuator);
std::string manual_command_tag(std::string_view actuator);

/// Residual detector over aligned histories: violation iff |meas - pred| > eps
/// for `window` consecutive samples. Returns the index completing the window.
std::optional<std::size_t> residual_check(std::span<const double> measured,
                                          std::span<const double> predicted, double epsilon,
                                          std::size_t window);

class Plc {
 public:
  explicit Plc(PlcConfig config);

  const std::string& id() const { return config_.id; }
  double scan_period() const { return config_.scan_period; }
  const ControlProgram& program() const { return program_; }
  const std::vector<InvariantRule>& invariants() const { return invariants_; }
  const std::vector<std::string>& actuators() const { return config_.actuators; }

  TagDatabase& tags() { return tags_; }
  const TagDatabase& tags() const { return tags_; }

  /// Snapshot assembled from the current tag image.
  Snapshot snapshot(double time) const;

  /// One cyclic scan: rungs in order, then every invariant whose guard holds.
  ScanResult scan(const Snapshot& snapshot);

 private:
  struct RuleState {
    int consecutive = 0;
    bool latched = false;
  };

  std::optional<double> lookup(std::string_view name, const Snapshot& snap,
                               const std::map<std::string, double, std::less<>>& written) const;
  void reset_history(const Expr& e);

  PlcConfig config_;
  ControlProgram program_;
  std::vector<InvariantRule> invariants_;
  TagDatabase tags_;
  std::unordered_map<const Expr*, CallState> history_;
  std::vector<RuleState> rule_state_;
  std::vector<bool> rung_faulted_;
  std::map<std::string, std::string, std::less<>> last_auto_command_;
  std::map<std::string, std::string, std::less<>> last_manual_command_;
  std::map<std::string, ControlMode, std::less<>> last_mode_;
};

}  // namespace icsrange::plc
