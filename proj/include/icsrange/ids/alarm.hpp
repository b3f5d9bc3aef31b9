#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace icsrange::ids {

enum class AlarmRule { arp_poison, syn_flood, ip_mac_conflict, tag_divergence, invariant, scan_fault };

std::string_view to_string(AlarmRule r);
AlarmRule parse_alarm_rule(std::string_view s);

/// Which detection engine raises a rule: the in-PLC invariant checkers or the
/// network IDS. Scan faults are PLC diagnostics, not detections.
enum class Engine { process_invariant, network, diagnostic };
Engine engine_of(AlarmRule r);
bool is_detection(AlarmRule r);

struct Alarm {
  std::uint64_t id = 0;
  double ts = 0.0;
  std::string source_node;
  AlarmRule rule = AlarmRule::invariant;
  std::string severity;
  std::vector<std::string> evidence;
  std::optional<std::string> session;
  std::string detail;

  bool operator==(const Alarm&) const = default;
};

nlohmann::json to_json(const Alarm& a);
Alarm alarm_from_json(const nlohmann::json& j);

class MalformedFilter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AlarmFilter {
  std::optional<double> from;  // inclusive
  std::optional<double> to;    // inclusive
  std::optional<AlarmRule> rule;
  std::optional<std::string> node;
  std::optional<std::string> session;

  bool matches(const Alarm& a) const;
  /// From query parameters `from`, `to`, `rule`, `node`, `session`.
  static AlarmFilter parse(const std::map<std::string, std::string>& params);
};

/// Append-only alarm log. Alarms appended while a session is active carry its
/// id. One writer, any number of concurrent readers.
class AlarmStore {
 public:
  Alarm append(Alarm alarm);
  void begin_session(std::string session);
  void end_session();
  std::optional<std::string> active_session() const;

  /// Matching alarms in ascending time order (ties keep append order).
  std::vector<Alarm> query(const AlarmFilter& filter = {}) const;
  std::size_t size() const;

  /// One JSON object per line.
  std::string export_lines(const AlarmFilter& filter = {}) const;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<Alarm> alarms_;
  std::optional<std::string> session_;
  std::uint64_t next_id_ = 1;
};

}  // namespace icsrange::ids
