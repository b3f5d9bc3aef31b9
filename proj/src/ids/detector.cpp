#include "icsrange/ids/detector.hpp"

#include <cmath>

#include "icsrange/plc/tag.hpp"

namespace icsrange::ids {

using net::Frame;
using net::FrameKind;

IdsNode::IdsNode(std::string id, std::string segment, const net::Topology* topology,
                 CentralAggregator* central, IdsParams params)
    : id_(std::move(id)),
      segment_(std::move(segment)),
      topology_(topology),
      central_(central),
      params_(params) {}

std::optional<net::HostRole> IdsNode::role_of(net::Ipv4Address ip) const {
  if (!topology_) return std::nullopt;
  if (const auto* h = topology_->by_ip(ip, segment_)) return h->role;
  return std::nullopt;
}

void IdsNode::observe(const Frame& f) {
  if (f.link != segment_) return;
  detect_arp(f);
  detect_syn_flood(f);
  if (f.kind == FrameKind::data) inspect_tags(f);
}

void IdsNode::detect_arp(const Frame& f) {
  if (f.kind == FrameKind::arp_req) return;
  auto known = learned_.find(f.src_ip);
  if (f.kind == FrameKind::arp_rep) {
    if (known == learned_.end()) {
      learned_.emplace(f.src_ip, f.src_mac);
      return;
    }
    if (known->second == f.src_mac) return;
    Alarm a;
    a.ts = f.ts;
    a.source_node = id_;
    a.rule = AlarmRule::arp_poison;
    a.severity = "high";
    a.evidence = {"ip=" + f.src_ip.to_string(), "learned=" + known->second.to_string(),
                  "claimed=" + f.src_mac.to_string(), "target=" + f.dst_mac.to_string()};
    a.detail = "ARP reply remaps " + f.src_ip.to_string();
    central_->raise(std::move(a), id_ + "/" + f.src_ip.to_string());
    return;
  }
  if (known == learned_.end() || known->second == f.src_mac) return;
  Alarm a;
  a.ts = f.ts;
  a.source_node = id_;
  a.rule = AlarmRule::ip_mac_conflict;
  a.severity = "medium";
  a.evidence = {"ip=" + f.src_ip.to_string(), "learned=" + known->second.to_string(),
                "observed=" + f.src_mac.to_string(), std::string("kind=") + std::string(to_string(f.kind))};
  a.detail = "traffic from " + f.src_ip.to_string() + " with unexpected MAC";
  central_->raise(std::move(a), id_ + "/" + f.src_ip.to_string());
}

void IdsNode::detect_syn_flood(const Frame& f) {
  if (f.kind != FrameKind::syn && f.kind != FrameKind::ack) return;
  SynStats& s = syn_stats_[f.dst_ip];
  (f.kind == FrameKind::syn ? s.syns : s.completions).push_back(f.ts);
  const double horizon = f.ts - params_.syn_window;
  while (!s.syns.empty() && s.syns.front() < horizon) s.syns.pop_front();
  while (!s.completions.empty() && s.completions.front() < horizon) s.completions.pop_front();
  auto excess = static_cast<long>(s.syns.size()) - static_cast<long>(s.completions.size());
  if (excess <= params_.syn_threshold) return;
  Alarm a;
  a.ts = f.ts;
  a.source_node = id_;
  a.rule = AlarmRule::syn_flood;
  a.severity = "high";
  a.evidence = {"dst=" + f.dst_ip.to_string(), "syn=" + std::to_string(s.syns.size()),
                "completed=" + std::to_string(s.completions.size())};
  a.detail = "unanswered handshakes toward " + f.dst_ip.to_string();
  central_->raise(std::move(a), id_ + "/" + f.dst_ip.to_string());
}

void IdsNode::inspect_tags(const Frame& f) {
  auto msg = net::decode_tag_message(f.payload);
  if (!msg) {
    ++malformed_;
    return;
  }
  auto src_role = role_of(f.src_ip);
  if (const auto* req = std::get_if<net::TagRequest>(&*msg)) {
    if (req->op == net::TagOp::read) {
      pending_reads_[{f.src_ip, f.dst_ip}] = req->name;
      return;
    }
    if (src_role == net::HostRole::rio) {
      central_->field_value(id_, req->name, req->value, f.ts);
    } else if (src_role == net::HostRole::plc && segment_ == net::kControlSegment) {
      central_->control_value(id_, req->name, req->value, f.ts);
    }
    return;
  }
  const auto& resp = std::get<net::TagResponse>(*msg);
  auto pending = pending_reads_.find({f.dst_ip, f.src_ip});
  if (pending == pending_reads_.end()) return;
  std::string name = std::move(pending->second);
  pending_reads_.erase(pending);
  if (resp.op != net::TagOp::read || resp.status != net::TagStatus::ok) return;
  if (src_role == net::HostRole::plc && segment_ == net::kControlSegment) {
    central_->control_value(id_, name, resp.value, f.ts);
  }
}

bool CentralAggregator::raise(Alarm alarm, const std::string& key) {
  auto k = std::make_tuple(alarm.source_node, alarm.rule, key);
  if (auto it = last_raised_.find(k);
      it != last_raised_.end() && alarm.ts - it->second < params_.holdoff) {
    return false;
  }
  last_raised_[k] = alarm.ts;
  store_->append(std::move(alarm));
  return true;
}

void CentralAggregator::field_value(const std::string& node, const std::string& tag,
                                    const std::string& value, double ts) {
  field_[tag] = {value, ts, node};
}

void CentralAggregator::control_value(const std::string& node, const std::string& tag,
                                      const std::string& value, double ts) {
  auto field = field_.find(tag);
  if (field == field_.end() || ts - field->second.ts > params_.field_max_age) return;

  auto reported = plc::from_text(value);
  auto raw = plc::from_text(field->second.value);
  auto rn = plc::as_number(reported);
  auto fn = plc::as_number(raw);
  bool divergent = false;
  bool continuous = std::holds_alternative<double>(reported) || std::holds_alternative<double>(raw);
  if (rn && fn && continuous) {
    divergent = std::fabs(*rn - *fn) > params_.divergence_delta;
  } else {
    divergent = value != field->second.value;
  }

  int& run = divergent_runs_[tag];
  run = divergent ? run + 1 : 0;
  if (run < params_.divergence_count) return;
  Alarm a;
  a.ts = ts;
  a.source_node = "central";
  a.rule = AlarmRule::tag_divergence;
  a.severity = "high";
  a.evidence = {"tag=" + tag, "field=" + field->second.value + "@" + field->second.node,
                "control=" + value + "@" + node};
  a.detail = "field and control views of " + tag + " disagree";
  raise(std::move(a), tag);
}

}  // namespace icsrange::ids
