#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "icsrange/attack/scenario.hpp"
#include "icsrange/ids/alarm.hpp"
#include "icsrange/net/network.hpp"
#include "icsrange/score/score.hpp"
#include "icsrange/testbed/testbed.hpp"

namespace icsrange::attack {

struct TimelineEntry {
  double t = 0.0;
  std::size_t step = 0;  // 1-based index in the executed list
  std::string action;
  std::string detail;
  bool ok = true;
};

struct Report {
  std::string run_id;
  std::string scenario;
  std::string profile;
  std::uint64_t seed = 0;
  bool refused = false;
  bool success = false;
  std::optional<std::size_t> failed_step;
  std::string reason;
  double start = 0.0;
  double end = 0.0;
  std::size_t frames_injected = 0;
  std::vector<TimelineEntry> timeline;
  std::vector<ids::Alarm> alarms;
  std::set<std::string> mechanisms;  // detection rules that fired
  std::vector<net::TranscriptEntry> transcript;
  std::optional<std::string> readout;
  bool undone = false;
};

/// JSONL: one summary line, then one line per timeline entry and alarm.
std::string report_lines(const Report& report);
nlohmann::json report_summary(const Report& report);

bool evaluate(const Predicate& p, testbed::Testbed& tb, const Report& ctx);
/// Numeric value of a subject; booleans are 1 or 0.
double subject_value(std::string_view subject, testbed::Testbed& tb);

/// Drives scenarios against one range from the attacker workstation.
class AttackRunner {
 public:
  AttackRunner(testbed::Testbed& tb, std::uint64_t seed = 1);
  ~AttackRunner();
  AttackRunner(const AttackRunner&) = delete;
  AttackRunner& operator=(const AttackRunner&) = delete;

  /// Refuses, without sending anything, when the profile lacks a declared
  /// capability. Alarms raised during the run are attributed to `run_id`.
  Report run(const Scenario& s, const score::AttackerProfile& profile, const std::string& run_id);
  /// Executes the scenario's undo steps and clears residual interposition.
  Report undo(const Scenario& s, const score::AttackerProfile& profile, const std::string& run_id);

  // Primitives, usable outside scenarios.
  void arp_poison(const std::string& victim, const std::string& impersonated);
  void arp_restore();
  void arp_restore(const std::string& victim, const std::string& impersonated);
  int mitm_drop(const std::string& a, const std::string& b);
  int mitm_modify(const std::string& a, const std::string& b, const std::string& tag,
                  const std::string& how, const std::string& operand);
  void mitm_clear();
  std::vector<net::TranscriptEntry> passive_mitm(const std::string& a, const std::string& b,
                                                 double seconds);
  void syn_flood(const std::string& target, double rate, double duration);
  std::optional<net::TagResponse> tag_read(const std::string& device, const std::string& tag);
  std::optional<net::TagResponse> tag_write(const std::string& device, const std::string& tag,
                                            const std::string& value);

  const std::string& host() const { return host_; }

 private:
  struct Poison {
    std::string victim;
    std::string impersonated;
  };
  struct Flood {
    net::Ipv4Address ip;
    net::MacAddress mac;
    double rate = 0.0;
    double start = 0.0;
    double end = 0.0;
    std::uint64_t sent = 0;
  };

  Report execute(const Scenario& s, const score::AttackerProfile& profile,
                 const std::string& run_id, const std::vector<Step>& steps, bool is_undo);
  bool execute_step(const Step& step, Report& report, std::string& detail);
  void sync();
  void send_poison(const Poison& p);
  void on_tick(testbed::Testbed& tb);
  const net::HostConfig& l1(const std::string& device) const;

  testbed::Testbed& tb_;
  std::string host_;
  std::mt19937_64 rng_;
  std::vector<Poison> poisons_;
  std::vector<Flood> floods_;
  std::vector<int> hooks_;
  int periodic_ = 0;
};

}  // namespace icsrange::attack
