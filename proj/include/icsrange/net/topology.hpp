#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icsrange/net/address.hpp"

namespace icsrange::net {

enum class HostRole { plc, rio, hmi, scada, historian, attacker, ids_tap };

std::string_view to_string(HostRole r);
HostRole parse_host_role(std::string_view s);

/// One network interface. A device with interfaces on several segments (a PLC
/// on L1 and on its L0 ring) appears once per segment.
struct HostConfig {
  std::string id;
  std::string device;
  std::string segment;
  MacAddress mac;
  Ipv4Address ip;
  HostRole role = HostRole::plc;

  bool operator==(const HostConfig&) const = default;
};

struct Topology {
  std::vector<std::string> segments;
  std::vector<HostConfig> hosts;
  Ipv4Prefix ics_prefix;

  const HostConfig& host(std::string_view id) const;
  const HostConfig* find_host(std::string_view id) const;
  /// Interface of `device` on `segment`.
  const HostConfig* interface_of(std::string_view device, std::string_view segment) const;
  const HostConfig* by_ip(Ipv4Address ip, std::string_view segment) const;

  bool operator==(const Topology&) const = default;
};

inline constexpr std::string_view kControlSegment = "L1";
std::string field_segment(int plc_index);  // "L0-<n>"
std::string interface_id(std::string_view device, std::string_view segment);  // "<dev>@<seg>"

/// Six L0 rings (PLCn <-> RIOn) and one L1 star with the PLCs, HMI, SCADA,
/// Historian and an attacker workstation.
Topology default_topology();

/// JSON text: {"ics_prefix", "segments", "hosts": [{id, device, segment, mac, ip, role}]}.
Topology parse_topology(const std::string& json_text);
std::string dump_topology(const Topology& t);

}  // namespace icsrange::net
