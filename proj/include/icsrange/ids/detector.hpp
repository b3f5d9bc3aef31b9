#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>

#include "icsrange/ids/alarm.hpp"
#include "icsrange/net/frame.hpp"
#include "icsrange/net/topology.hpp"

namespace icsrange::ids {

struct IdsParams {
  double syn_window = 10.0;          // T_w, s
  int syn_threshold = 20;            // N_syn
  double divergence_delta = 0.005;   // continuous tags
  int divergence_count = 3;          // k consecutive observations
  double field_max_age = 1.0;        // older L0 observations are not matched
  double holdoff = 10.0;             // duplicate suppression per (node, rule, key)
};

class CentralAggregator;

/// Passive detector bound to one segment. It only consumes tap copies.
class IdsNode {
 public:
  IdsNode(std::string id, std::string segment, const net::Topology* topology,
          CentralAggregator* central, IdsParams params = {});

  const std::string& id() const { return id_; }
  const std::string& segment() const { return segment_; }

  void observe(const net::Frame& frame);

  const std::map<net::Ipv4Address, net::MacAddress>& learned_bindings() const { return learned_; }
  std::size_t malformed_frames() const { return malformed_; }

 private:
  void detect_arp(const net::Frame& f);
  void detect_syn_flood(const net::Frame& f);
  void inspect_tags(const net::Frame& f);
  std::optional<net::HostRole> role_of(net::Ipv4Address ip) const;

  std::string id_;
  std::string segment_;
  const net::Topology* topology_;
  CentralAggregator* central_;
  IdsParams params_;
  std::map<net::Ipv4Address, net::MacAddress> learned_;
  struct SynStats {
    std::deque<double> syns;
    std::deque<double> completions;
  };
  std::map<net::Ipv4Address, SynStats> syn_stats_;
  // Outstanding READ per (client, server) so responses can be attributed.
  std::map<std::pair<net::Ipv4Address, net::Ipv4Address>, std::string> pending_reads_;
  std::size_t malformed_ = 0;
};

/// Central node: the only writer of the alarm store. It also correlates the
/// field-level (L0) and control-level (L1) views of each tag.
class CentralAggregator {
 public:
  explicit CentralAggregator(AlarmStore* store, IdsParams params = {})
      : store_(store), params_(params) {}

  /// Raises an alarm unless an identical (node, rule, key) alarm fired within
  /// the holdoff. Returns whether it was stored.
  bool raise(Alarm alarm, const std::string& key);

  void field_value(const std::string& node, const std::string& tag, const std::string& value,
                   double ts);
  void control_value(const std::string& node, const std::string& tag, const std::string& value,
                     double ts);

  AlarmStore& store() { return *store_; }

 private:
  struct FieldObservation {
    std::string value;
    double ts = 0.0;
    std::string node;
  };
  AlarmStore* store_;
  IdsParams params_;
  std::map<std::string, FieldObservation> field_;
  std::map<std::string, int> divergent_runs_;
  std::map<std::tuple<std::string, AlarmRule, std::string>, double> last_raised_;
};

}  // namespace icsrange::ids
