#include "icsrange/net/network.hpp"

#include <algorithm>
#include <stdexcept>

namespace icsrange::net {

Network::Network(Topology topology, NetParams params)
    : topology_(std::move(topology)), params_(params), rng_(params.seed) {
  for (const auto& s : topology_.segments) segments_.emplace(s, Segment{});
  for (const auto& h : topology_.hosts) {
    auto seg = segments_.find(h.segment);
    if (seg == segments_.end()) {
      throw std::invalid_argument("host '" + h.id + "' on unknown segment '" + h.segment + "'");
    }
    std::size_t idx = hosts_.size();
    if (!host_index_.emplace(h.id, idx).second) {
      throw std::invalid_argument("duplicate host id '" + h.id + "'");
    }
    if (!seg->second.by_mac.emplace(h.mac, idx).second) {
      throw std::invalid_argument("duplicate MAC on segment " + h.segment);
    }
    seg->second.hosts.push_back(idx);
    HostState state;
    state.config = h;
    state.forwarding = h.role == HostRole::attacker;
    hosts_.push_back(std::move(state));
  }
}

std::size_t Network::index_of(std::string_view host) const {
  auto it = host_index_.find(std::string(host));
  if (it == host_index_.end()) throw std::out_of_range("unknown host '" + std::string(host) + "'");
  return it->second;
}

void Network::post(std::function<void(Network&)> fn) {
  std::lock_guard lock(inbox_mutex_);
  inbox_.push_back(std::move(fn));
}

void Network::drain_inbox() {
  std::vector<std::function<void(Network&)>> pending;
  {
    std::lock_guard lock(inbox_mutex_);
    pending.swap(inbox_);
  }
  for (auto& fn : pending) fn(*this);
}

bool Network::pump(double deadline, const std::function<bool()>& done) {
  drain_inbox();
  if (done()) return true;
  while (!queue_.empty() && queue_.top().time <= deadline) {
    Event e = queue_.top();
    queue_.pop();
    now_ = std::max(now_, e.time);
    deliver(std::move(e.frame));
    if (done()) return true;
  }
  now_ = std::max(now_, deadline);
  return done();
}

void Network::run_until(double t) {
  pump(t, [] { return false; });
}

void Network::send_from(std::size_t host, Frame frame, std::optional<double> send_time) {
  frame.ts = send_time.value_or(now_);
  if (frame.link.empty()) frame.link = hosts_[host].config.segment;
  double due = frame.ts + params_.hop_delay;
  queue_.push(Event{due, order_++, std::move(frame)});
}

bool Network::send_ip(std::size_t host, Ipv4Address dst, FrameKind kind, std::uint32_t seq,
                      std::uint32_t ack, Bytes payload) {
  const HostState& h = hosts_[host];
  auto entry = h.arp.find(dst);
  if (entry == h.arp.end()) return false;
  Frame f;
  f.src_mac = h.config.mac;
  f.dst_mac = entry->second.mac;
  f.src_ip = h.config.ip;
  f.dst_ip = dst;
  f.kind = kind;
  f.seq = seq;
  f.ack = ack;
  f.payload = std::move(payload);
  send_from(host, std::move(f));
  return true;
}

void Network::inject(std::string_view host, Frame frame, std::optional<double> send_time) {
  send_from(index_of(host), std::move(frame), send_time);
}

void Network::announce(std::string_view host) {
  std::size_t idx = index_of(host);
  const HostConfig& c = hosts_[idx].config;
  Frame f;
  f.kind = FrameKind::arp_rep;
  f.src_mac = c.mac;
  f.dst_mac = MacAddress::broadcast();
  f.src_ip = c.ip;
  f.dst_ip = c.ip;
  send_from(idx, std::move(f));
}

void Network::announce_all() {
  for (const auto& h : topology_.hosts) announce(h.id);
}

std::optional<MacAddress> Network::arp_lookup(std::string_view host, Ipv4Address ip) const {
  const auto& table = hosts_[index_of(host)].arp;
  auto it = table.find(ip);
  if (it == table.end()) return std::nullopt;
  return it->second.mac;
}

const std::map<Ipv4Address, ArpEntry>& Network::arp_table(std::string_view host) const {
  return hosts_[index_of(host)].arp;
}

bool Network::resolve(std::string_view host, Ipv4Address ip) {
  std::size_t idx = index_of(host);
  if (hosts_[idx].arp.contains(ip)) return true;
  const HostConfig& c = hosts_[idx].config;
  Frame f;
  f.kind = FrameKind::arp_req;
  f.src_mac = c.mac;
  f.dst_mac = MacAddress::broadcast();
  f.src_ip = c.ip;
  f.dst_ip = ip;
  send_from(idx, std::move(f));
  return pump(now_ + params_.handshake_timeout,
              [&] { return hosts_[idx].arp.contains(ip); });
}

void Network::set_tag_handler(std::string_view host, TagHandler handler) {
  host_state(host).handler = std::move(handler);
}

void Network::set_forwarding(std::string_view host, bool on) { host_state(host).forwarding = on; }

const std::vector<TranscriptEntry>& Network::transcript(std::string_view host) const {
  return hosts_[index_of(host)].transcript;
}

void Network::clear_transcript(std::string_view host) { host_state(host).transcript.clear(); }

Network::ClientFlow* Network::client_flow_for(std::size_t host, Ipv4Address server_ip) {
  for (auto& [id, f] : flows_) {
    if (f.host == host && f.server_ip == server_ip) return &f;
  }
  return nullptr;
}

std::optional<FlowId> Network::handshake_open(std::string_view client, Ipv4Address server) {
  std::size_t idx = index_of(client);
  if (!resolve(client, server)) return std::nullopt;
  std::erase_if(flows_, [&](const auto& kv) {
    return kv.second.host == idx && kv.second.server_ip == server;
  });
  ClientFlow f;
  f.host = idx;
  f.server_ip = server;
  f.isn = static_cast<std::uint32_t>(rng_());
  FlowId id = next_flow_++;
  flows_.emplace(id, f);
  send_ip(idx, server, FrameKind::syn, f.isn, 0, {});
  bool ok = pump(now_ + params_.handshake_timeout, [&] {
    auto it = flows_.find(id);
    return it != flows_.end() && it->second.established;
  });
  if (!ok) {
    flows_.erase(id);
    return std::nullopt;
  }
  return id;
}

std::optional<TagResponse> Network::tag_request(FlowId id, const TagRequest& request) {
  auto it = flows_.find(id);
  if (it == flows_.end() || !it->second.established) return std::nullopt;
  ClientFlow& f = it->second;
  Bytes payload = encode(request);
  auto len = static_cast<std::uint32_t>(payload.size());
  f.sync_start = f.seq;
  f.sync_response.reset();
  if (!send_ip(f.host, f.server_ip, FrameKind::data, f.seq, f.server_next, std::move(payload))) {
    f.sync_start.reset();
    return std::nullopt;
  }
  f.seq += len;
  bool ok = pump(now_ + params_.request_timeout, [&] {
    auto cur = flows_.find(id);
    return cur != flows_.end() && cur->second.sync_response.has_value();
  });
  auto cur = flows_.find(id);
  if (cur == flows_.end()) return std::nullopt;
  cur->second.sync_start.reset();
  if (!ok) return std::nullopt;
  auto out = std::move(cur->second.sync_response);
  cur->second.sync_response.reset();
  return out;
}

bool Network::tag_send(FlowId id, const TagRequest& request) {
  auto it = flows_.find(id);
  if (it == flows_.end() || !it->second.established) return false;
  ClientFlow& f = it->second;
  Bytes payload = encode(request);
  auto len = static_cast<std::uint32_t>(payload.size());
  if (!send_ip(f.host, f.server_ip, FrameKind::data, f.seq, f.server_next, std::move(payload))) {
    return false;
  }
  f.seq += len;
  return true;
}

void Network::close(FlowId id) {
  auto it = flows_.find(id);
  if (it == flows_.end()) return;
  const ClientFlow& f = it->second;
  if (f.established) send_ip(f.host, f.server_ip, FrameKind::fin, f.seq, f.server_next, {});
  flows_.erase(it);
}

bool Network::flow_open(FlowId id) const {
  auto it = flows_.find(id);
  return it != flows_.end() && it->second.established;
}

void Network::expire_half_open(HostState& h) {
  std::erase_if(h.half_open, [&](const auto& kv) {
    return now_ - kv.second.since >= params_.half_open_timeout;
  });
}

std::size_t Network::half_open_count(std::string_view host) {
  HostState& h = host_state(host);
  expire_half_open(h);
  return h.half_open.size();
}

std::size_t Network::server_flow_count(std::string_view host) const {
  return hosts_[index_of(host)].server_flows.size();
}

int Network::add_hook(MitmHook hook) {
  int id = next_hook_++;
  hooks_.emplace(id, std::move(hook));
  return id;
}

void Network::remove_hook(int id) { hooks_.erase(id); }
void Network::clear_hooks() { hooks_.clear(); }

int Network::add_tap(std::string segment, Tap tap) {
  int id = next_tap_++;
  taps_.emplace(id, std::make_pair(std::move(segment), std::move(tap)));
  return id;
}

void Network::remove_tap(int id) { taps_.erase(id); }

void Network::deliver(Frame frame) {
  auto seg = segments_.find(frame.link);
  if (seg == segments_.end()) {
    faults_.push_back({frame.ts, frame.link, "unknown segment"});
    capture_.push_back({std::move(frame), Disposition::unroutable});
    return;
  }
  for (const auto& [id, tap] : taps_) {
    if (tap.first == frame.link) tap.second(frame);
  }
  for (const auto& [id, hook] : hooks_) {
    if (hook.segment != frame.link || !hook.predicate(frame)) continue;
    if (hook.action == HookAction::drop) {
      capture_.push_back({std::move(frame), Disposition::dropped_mitm});
      return;
    }
    if (hook.action == HookAction::modify && hook.transform) hook.transform(frame);
  }

  Disposition disposition = Disposition::unroutable;
  if (frame.dst_mac.is_broadcast()) {
    for (std::size_t idx : seg->second.hosts) {
      if (hosts_[idx].config.mac != frame.src_mac) receive(idx, frame);
    }
    disposition = Disposition::delivered;
  } else if (auto dst = seg->second.by_mac.find(frame.dst_mac); dst != seg->second.by_mac.end()) {
    disposition = receive(dst->second, frame);
  }
  capture_.push_back({std::move(frame), disposition});
}

Disposition Network::receive(std::size_t idx, const Frame& frame) {
  HostState& h = hosts_[idx];
  switch (frame.kind) {
    case FrameKind::arp_req:
      if (frame.dst_ip == h.config.ip) {
        Frame reply;
        reply.kind = FrameKind::arp_rep;
        reply.src_mac = h.config.mac;
        reply.dst_mac = frame.src_mac;
        reply.src_ip = h.config.ip;
        reply.dst_ip = frame.src_ip;
        send_from(idx, std::move(reply));
      }
      return Disposition::delivered;
    case FrameKind::arp_rep:
      // Every reply is believed; this is the poisoning surface.
      if (frame.src_ip != h.config.ip) h.arp[frame.src_ip] = {frame.src_mac, now_};
      return Disposition::delivered;
    default:
      break;
  }

  if (frame.dst_ip != h.config.ip) {
    if (frame.kind == FrameKind::data) {
      h.transcript.push_back({frame.ts, frame.src_ip, frame.dst_ip, frame.seq, frame.payload});
    }
    if (h.forwarding) {
      if (auto next = h.arp.find(frame.dst_ip); next != h.arp.end()) {
        Frame copy = frame;
        copy.src_mac = h.config.mac;
        copy.dst_mac = next->second.mac;
        copy.link.clear();
        send_from(idx, std::move(copy));
      }
    }
    return Disposition::delivered;
  }

  if (frame.kind == FrameKind::syn) {
    if (!h.handler) return Disposition::delivered;
    expire_half_open(h);
    if (h.half_open.size() >= params_.half_open_capacity) return Disposition::dropped_dos;
    auto isn = static_cast<std::uint32_t>(rng_());
    h.half_open[{frame.src_ip.value, frame.seq}] = {now_, isn};
    send_ip(idx, frame.src_ip, FrameKind::synack, isn, frame.seq + 1, {});
    return Disposition::delivered;
  }
  handle_ip(idx, frame);
  return Disposition::delivered;
}

void Network::handle_ip(std::size_t idx, const Frame& frame) {
  HostState& h = hosts_[idx];
  switch (frame.kind) {
    case FrameKind::synack: {
      ClientFlow* f = client_flow_for(idx, frame.src_ip);
      if (!f || f->established || frame.ack != f->isn + 1) return;
      f->established = true;
      f->seq = f->isn + 1;
      f->server_next = frame.seq + 1;
      send_ip(idx, frame.src_ip, FrameKind::ack, f->seq, f->server_next, {});
      return;
    }
    case FrameKind::ack: {
      auto it = h.half_open.find({frame.src_ip.value, frame.seq - 1});
      if (it == h.half_open.end() || frame.ack != it->second.server_isn + 1) return;
      h.server_flows[frame.src_ip.value] = ServerFlow{it->second.server_isn + 1};
      h.half_open.erase(it);
      return;
    }
    case FrameKind::fin:
      h.server_flows.erase(frame.src_ip.value);
      return;
    case FrameKind::data:
      break;
    default:
      return;
  }

  const bool is_response = !frame.payload.empty() && (frame.payload[0] & 0x80) != 0;
  if (!is_response) {
    auto sf = h.server_flows.find(frame.src_ip.value);
    if (sf == h.server_flows.end() || !h.handler) return;
    TagResponse response;
    if (auto req = decode_request(frame.payload)) {
      response = h.handler(*req, frame.src_ip, now_);
      response.op = req->op;
    } else {
      response.status = TagStatus::malformed;
    }
    Bytes payload = encode(response);
    auto len = static_cast<std::uint32_t>(payload.size());
    auto ack = frame.seq + static_cast<std::uint32_t>(frame.payload.size());
    if (send_ip(idx, frame.src_ip, FrameKind::data, sf->second.seq, ack, std::move(payload))) {
      sf->second.seq += len;
    }
    return;
  }

  ClientFlow* f = client_flow_for(idx, frame.src_ip);
  if (!f || !f->established) return;
  f->server_next = frame.seq + static_cast<std::uint32_t>(frame.payload.size());
  if (!f->sync_start) return;
  std::uint32_t distance = frame.ack - *f->sync_start;
  if (distance == 0 || distance >= 0x80000000u) return;
  if (auto resp = decode_response(frame.payload)) {
    f->sync_response = std::move(*resp);
  } else {
    f->sync_response = TagResponse{TagOp::read, TagStatus::malformed, {}};
  }
  f->sync_start.reset();
}

}  // namespace icsrange::net
