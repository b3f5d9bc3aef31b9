#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icsrange/ids/alarm.hpp"
#include "icsrange/ids/detector.hpp"
#include "icsrange/net/network.hpp"
#include "icsrange/plant/plant.hpp"
#include "icsrange/plc/plc.hpp"

namespace icsrange::testbed {

/// Field wiring of one remote I/O unit.
struct RioWiring {
  std::string device;  // RIOn
  std::string plc;     // PLCn
  std::vector<std::string> sensors;
  std::vector<std::string> actuators;
};

/// Periodic PLC-to-PLC value on L1, written over a persistent flow.
struct Exchange {
  std::string from;
  std::string to;
  std::string tag;         // tag read at the sender
  std::string remote_tag;  // tag written at the receiver
  std::optional<std::string> literal;  // fixed payload instead of a tag value
};

/// Challenge secrets the range plants or releases.
struct Flags {
  std::string wire = "CTF{plc2_whispers_to_plc3}";      // PLC2->PLC3 traffic
  std::string readme = "CTF{readme_on_the_second_plc}";  // README:2 on PLC2
  std::string raw_overflow = "CTF{raw_tank_spilled}";
  std::string keepalive = "CTF{heartbeat_hijacked}";
  std::string uf_overflow = "CTF{uf_tank_spilled}";
};

struct TestbedConfig {
  plant::PlantState plant;
  net::Topology topology;
  net::NetParams net;
  ids::IdsParams ids;
  bool ids_enabled = true;
  double dt = 0.1;
  double exchange_period = 1.0;
  double hmi_poll_period = 1.0;
  double heartbeat_period = 2.0;
  std::int64_t heartbeat_value = 2;
  double staleness = 3.0;
  double announce_period = 30.0;
  double keepalive_hold = 10.0;
  Flags flags;
  std::vector<plc::PlcConfig> plcs;
  std::vector<RioWiring> wiring;
  std::vector<Exchange> exchanges;
  std::map<std::string, std::vector<std::string>> hmi_tags;  // PLC -> display tags
};

/// Reference configuration: default plant, topology, control programs and
/// invariants.
TestbedConfig default_config();
std::vector<plc::PlcConfig> default_plcs(const Flags& flags);
std::vector<RioWiring> default_wiring();

/// Range file (JSON): optional `plant` and `topology` config paths, relative
/// to the file, plus `seed`, `ids`, `staleness`. Unknown keys are rejected.
TestbedConfig load_config(const std::string& path);

struct FlagRelease {
  std::string challenge;
  std::string flag;
  double time = 0.0;
  std::uint64_t step = 0;
};

struct HmiReading {
  std::string device;
  std::string tag;
  std::string value;                                              // last good value
  double updated_at = -std::numeric_limits<double>::infinity();  // never read
};

struct HmiView {
  std::string device;
  std::string tag;
  std::string value;
  double age = std::numeric_limits<double>::infinity();
  bool stale = true;
  std::string rendered;  // value, or "*" when stale
};

/// The whole range on one simulation clock. Each tick: network catch-up,
/// ARP announcements, attacker hooks, RIO reports, L1 exchanges, PLC scans
/// and commands, HMI polling, then one plant step.
class Testbed {
 public:
  explicit Testbed(TestbedConfig config = default_config());
  Testbed(const Testbed&) = delete;
  Testbed& operator=(const Testbed&) = delete;

  void tick();
  void run_for(double seconds);
  /// Ticks until `done` holds or `timeout` seconds elapse. Checked before
  /// every tick.
  bool run_until(const std::function<bool()>& done, double timeout);

  double time() const { return static_cast<double>(ticks_) * config_.dt; }
  std::uint64_t ticks() const { return ticks_; }
  const TestbedConfig& config() const { return config_; }

  plant::Plant& plant() { return plant_; }
  const plant::Plant& plant() const { return plant_; }
  net::Network& network() { return *network_; }
  const net::Network& network() const { return *network_; }
  ids::AlarmStore& alarms() { return alarms_; }
  const ids::AlarmStore& alarms() const { return alarms_; }
  plc::Historian& historian() { return historian_; }
  plc::Plc& plc(std::string_view id);
  const plc::Plc& plc(std::string_view id) const;
  std::vector<std::string> plc_ids() const;
  const std::vector<std::unique_ptr<ids::IdsNode>>& ids_nodes() const { return nodes_; }

  /// PLC owning an actuator or process unit.
  std::string owner_of(std::string_view actuator) const;

  std::vector<HmiView> hmi_state() const;
  std::optional<HmiView> hmi_view(std::string_view device, std::string_view tag) const;
  /// Operator override through the HMI: writes the command and mode tags on
  /// the owning PLC over a fresh connection.
  bool hmi_override(std::string_view actuator, std::string_view command, plant::ControlMode mode);

  /// Callbacks run every tick after ARP announcements (attacker tooling).
  int add_periodic(std::function<void(Testbed&)> fn);
  void remove_periodic(int id);

  const std::vector<FlagRelease>& flag_releases() const { return releases_; }
  std::optional<FlagRelease> released(std::string_view challenge) const;

 private:
  struct RioState {
    RioWiring wiring;
    std::string host;
    std::optional<net::FlowId> report_flow;
    std::map<std::string, plant::ControlMode> modes;
  };
  struct PlcLinks {
    std::optional<net::FlowId> command_flow;  // PLC -> RIO on L0
  };

  void install_services();
  void open_persistent_flows();
  void report_sensors();
  void run_exchanges();
  void scan_plcs();
  void poll_hmi();
  void check_flags();
  net::TagResponse serve_plc(plc::Plc& p, const net::TagRequest& req, double now);
  net::TagResponse serve_rio(RioState& rio, const net::TagRequest& req);
  std::optional<net::FlowId> ensure_flow(std::optional<net::FlowId>& slot, const std::string& client,
                                         net::Ipv4Address server);
  std::uint64_t every(double period) const;

  TestbedConfig config_;
  plant::Plant plant_;
  std::unique_ptr<net::Network> network_;
  ids::AlarmStore alarms_;
  ids::CentralAggregator central_;
  std::vector<std::unique_ptr<ids::IdsNode>> nodes_;
  plc::Historian historian_;
  std::map<std::string, std::unique_ptr<plc::Plc>, std::less<>> plcs_;
  std::map<std::string, PlcLinks, std::less<>> plc_links_;
  std::vector<RioState> rios_;
  std::map<std::size_t, std::optional<net::FlowId>> exchange_flows_;
  std::map<std::pair<std::string, std::string>, HmiReading> hmi_;
  std::map<int, std::function<void(Testbed&)>> periodic_;
  int next_periodic_ = 1;
  std::uint64_t ticks_ = 0;
  std::size_t overflow_seen_ = 0;
  std::optional<double> keepalive_since_;
  std::vector<FlagRelease> releases_;
};

}  // namespace icsrange::testbed
