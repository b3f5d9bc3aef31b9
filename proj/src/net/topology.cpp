#include "icsrange/net/topology.hpp"

#include <array>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace icsrange::net {

namespace {

constexpr std::array<std::string_view, 7> kRoleNames = {"PLC",      "RIO",      "HMI",    "SCADA",
                                                        "HISTORIAN", "ATTACKER", "IDS_TAP"};

MacAddress make_mac(std::uint8_t segment, std::uint8_t host) {
  return MacAddress{{0x02, 0x00, 0x5e, 0x10, segment, host}};
}

}  // namespace

std::string_view to_string(HostRole r) { return kRoleNames[static_cast<std::size_t>(r)]; }

HostRole parse_host_role(std::string_view s) {
  for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
    if (kRoleNames[i] == s) return static_cast<HostRole>(i);
  }
  throw std::invalid_argument("unknown host role '" + std::string(s) + "'");
}

std::string field_segment(int plc_index) { return "L0-" + std::to_string(plc_index); }

std::string interface_id(std::string_view device, std::string_view segment) {
  return std::string(device) + "@" + std::string(segment);
}

const HostConfig* Topology::find_host(std::string_view id) const {
  for (const auto& h : hosts) {
    if (h.id == id) return &h;
  }
  return nullptr;
}

const HostConfig& Topology::host(std::string_view id) const {
  if (const auto* h = find_host(id)) return *h;
  throw std::out_of_range("unknown host '" + std::string(id) + "'");
}

const HostConfig* Topology::interface_of(std::string_view device, std::string_view segment) const {
  for (const auto& h : hosts) {
    if (h.device == device && h.segment == segment) return &h;
  }
  return nullptr;
}

const HostConfig* Topology::by_ip(Ipv4Address ip, std::string_view segment) const {
  for (const auto& h : hosts) {
    if (h.ip == ip && h.segment == segment) return &h;
  }
  return nullptr;
}

Topology default_topology() {
  Topology t;
  t.ics_prefix = Ipv4Prefix::parse("192.168.0.0/16");
  t.segments.emplace_back(kControlSegment);
  auto add = [&](std::string device, std::string segment, MacAddress mac, std::string ip,
                 HostRole role) {
    t.hosts.push_back({interface_id(device, segment), std::move(device), std::move(segment), mac,
                       Ipv4Address::parse(ip), role});
  };
  for (int i = 1; i <= 6; ++i) {
    auto n = static_cast<std::uint8_t>(i);
    add("PLC" + std::to_string(i), std::string(kControlSegment), make_mac(0x01, 0x10 * n),
        "192.168.1." + std::to_string(10 * i), HostRole::plc);
  }
  add("HMI", std::string(kControlSegment), make_mac(0x01, 0x64), "192.168.1.100", HostRole::hmi);
  add("SCADA", std::string(kControlSegment), make_mac(0x01, 0x65), "192.168.1.101",
      HostRole::scada);
  add("HISTORIAN", std::string(kControlSegment), make_mac(0x01, 0x66), "192.168.1.102",
      HostRole::historian);
  add("ATTACKER", std::string(kControlSegment), make_mac(0x01, 0x4d), "192.168.1.77",
      HostRole::attacker);
  for (int i = 1; i <= 6; ++i) {
    auto n = static_cast<std::uint8_t>(i);
    std::string seg = field_segment(i);
    t.segments.push_back(seg);
    add("PLC" + std::to_string(i), seg, make_mac(0x10 + n, 0x10 * n),
        "192.168.0." + std::to_string(10 * i), HostRole::plc);
    add("RIO" + std::to_string(i), seg, make_mac(0x10 + n, 0x10 * n + 1),
        "192.168.0." + std::to_string(10 * i + 1), HostRole::rio);
  }
  return t;
}

Topology parse_topology(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  Topology t;
  t.ics_prefix = Ipv4Prefix::parse(j.at("ics_prefix").get<std::string>());
  t.segments = j.at("segments").get<std::vector<std::string>>();
  std::set<std::string> segments(t.segments.begin(), t.segments.end());
  if (segments.size() != t.segments.size()) throw std::invalid_argument("duplicate segment");
  std::set<std::string> ids;
  std::set<std::pair<std::string, MacAddress>> macs;
  for (const auto& h : j.at("hosts")) {
    HostConfig c;
    c.id = h.at("id").get<std::string>();
    c.device = h.at("device").get<std::string>();
    c.segment = h.at("segment").get<std::string>();
    c.mac = MacAddress::parse(h.at("mac").get<std::string>());
    c.ip = Ipv4Address::parse(h.at("ip").get<std::string>());
    c.role = parse_host_role(h.at("role").get<std::string>());
    if (!segments.contains(c.segment)) {
      throw std::invalid_argument("host '" + c.id + "' on unknown segment '" + c.segment + "'");
    }
    if (!ids.insert(c.id).second) throw std::invalid_argument("duplicate host id '" + c.id + "'");
    if (!macs.insert({c.segment, c.mac}).second) {
      throw std::invalid_argument("duplicate MAC on segment " + c.segment);
    }
    t.hosts.push_back(std::move(c));
  }
  return t;
}

std::string dump_topology(const Topology& t) {
  nlohmann::json j;
  j["ics_prefix"] = t.ics_prefix.to_string();
  j["segments"] = t.segments;
  j["hosts"] = nlohmann::json::array();
  for (const auto& h : t.hosts) {
    j["hosts"].push_back({{"id", h.id},
                          {"device", h.device},
                          {"segment", h.segment},
                          {"mac", h.mac.to_string()},
                          {"ip", h.ip.to_string()},
                          {"role", to_string(h.role)}});
  }
  return j.dump(2);
}

}  // namespace icsrange::net
