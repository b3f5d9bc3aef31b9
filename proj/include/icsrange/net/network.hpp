#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "icsrange/net/frame.hpp"
#include "icsrange/net/topology.hpp"

namespace icsrange::net {

struct NetParams {
  double hop_delay = 0.001;             // s per segment hop
  std::size_t half_open_capacity = 64;  // C
  double half_open_timeout = 5.0;       // T_half, s
  double handshake_timeout = 0.02;      // s
  double request_timeout = 0.02;        // s
  std::uint64_t seed = 7;
};

enum class HookAction { pass, drop, modify };

/// Interposition on a segment, applied in registration order before delivery.
/// A MODIFY hook rewrites the frame in place through `transform`.
struct MitmHook {
  std::string segment;
  std::function<bool(const Frame&)> predicate;
  HookAction action = HookAction::pass;
  std::function<void(Frame&)> transform;
  std::string label;
};

struct ArpEntry {
  MacAddress mac;
  double learned_at = 0.0;
};

struct TranscriptEntry {
  double ts = 0.0;
  Ipv4Address src_ip;
  Ipv4Address dst_ip;
  std::uint32_t seq = 0;
  Bytes payload;
};

struct RoutingFault {
  double ts = 0.0;
  std::string link;
  std::string reason;
};

using FlowId = std::uint64_t;
using TagHandler = std::function<TagResponse(const TagRequest&, Ipv4Address client, double now)>;
using Tap = std::function<void(const Frame&)>;

/// Discrete-event network on a shared simulation clock. Frames are events
/// keyed by (delivery time, injection order); one dispatcher delivers them.
/// The transport helpers are synchronous: they pump the queue until their
/// answer arrives or the timeout elapses.
class Network {
 public:
  explicit Network(Topology topology, NetParams params = {});

  const Topology& topology() const { return topology_; }
  const NetParams& params() const { return params_; }
  double now() const { return now_; }

  /// Drains the inbox, then delivers every event due at or before `t`.
  void run_until(double t);
  /// Thread-safe entry point for external injectors; executed on the next run.
  void post(std::function<void(Network&)> fn);

  // Address resolution.
  void announce(std::string_view host);
  void announce_all();
  std::optional<MacAddress> arp_lookup(std::string_view host, Ipv4Address ip) const;
  const std::map<Ipv4Address, ArpEntry>& arp_table(std::string_view host) const;
  bool resolve(std::string_view host, Ipv4Address ip);

  /// Raw frame from `host` (forged fields allowed). `ts` and, when empty,
  /// `link` are filled in. `send_time` schedules a future send.
  void inject(std::string_view host, Frame frame, std::optional<double> send_time = {});

  // Host services.
  void set_tag_handler(std::string_view host, TagHandler handler);
  void set_forwarding(std::string_view host, bool on);
  const std::vector<TranscriptEntry>& transcript(std::string_view host) const;
  void clear_transcript(std::string_view host);

  // Transport.
  std::optional<FlowId> handshake_open(std::string_view client, Ipv4Address server);
  std::optional<TagResponse> tag_request(FlowId flow, const TagRequest& request);
  bool tag_send(FlowId flow, const TagRequest& request);
  void close(FlowId flow);
  bool flow_open(FlowId flow) const;
  std::size_t half_open_count(std::string_view host);
  std::size_t server_flow_count(std::string_view host) const;

  // Interposition and observation.
  int add_hook(MitmHook hook);
  void remove_hook(int id);
  void clear_hooks();
  int add_tap(std::string segment, Tap tap);
  void remove_tap(int id);

  const std::vector<CaptureRecord>& capture() const { return capture_; }
  const std::vector<RoutingFault>& faults() const { return faults_; }

 private:
  struct HalfOpen {
    double since = 0.0;
    std::uint32_t server_isn = 0;
  };
  struct ServerFlow {
    std::uint32_t seq = 0;
  };
  struct HostState {
    HostConfig config;
    std::map<Ipv4Address, ArpEntry> arp;
    TagHandler handler;
    bool forwarding = false;
    std::map<std::pair<std::uint32_t, std::uint32_t>, HalfOpen> half_open;  // (client ip, isn)
    std::map<std::uint32_t, ServerFlow> server_flows;                        // by client ip
    std::vector<TranscriptEntry> transcript;
  };
  struct ClientFlow {
    std::size_t host = 0;
    Ipv4Address server_ip;
    std::uint32_t isn = 0;
    std::uint32_t seq = 0;
    std::uint32_t server_next = 0;
    bool established = false;
    std::optional<std::uint32_t> sync_start;
    std::optional<TagResponse> sync_response;
  };
  struct Segment {
    std::vector<std::size_t> hosts;
    std::map<MacAddress, std::size_t> by_mac;
  };
  struct Event {
    double time = 0.0;
    std::uint64_t order = 0;
    Frame frame;
  };
  struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.order > b.order;
    }
  };

  std::size_t index_of(std::string_view host) const;
  HostState& host_state(std::string_view host) { return hosts_[index_of(host)]; }
  void drain_inbox();
  bool pump(double deadline, const std::function<bool()>& done);
  void deliver(Frame frame);
  Disposition receive(std::size_t host, const Frame& frame);
  void handle_ip(std::size_t host, const Frame& frame);
  void send_from(std::size_t host, Frame frame, std::optional<double> send_time = {});
  bool send_ip(std::size_t host, Ipv4Address dst, FrameKind kind, std::uint32_t seq,
               std::uint32_t ack, Bytes payload);
  void expire_half_open(HostState& h);
  ClientFlow* client_flow_for(std::size_t host, Ipv4Address server_ip);

  Topology topology_;
  NetParams params_;
  double now_ = 0.0;
  std::uint64_t order_ = 0;
  std::mt19937_64 rng_;
  std::vector<HostState> hosts_;
  std::unordered_map<std::string, std::size_t> host_index_;
  std::map<std::string, Segment, std::less<>> segments_;
  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::map<FlowId, ClientFlow> flows_;
  FlowId next_flow_ = 1;
  std::map<int, MitmHook> hooks_;
  std::map<int, std::pair<std::string, Tap>> taps_;
  int next_hook_ = 1;
  int next_tap_ = 1;
  std::vector<CaptureRecord> capture_;
  std::vector<RoutingFault> faults_;
  std::mutex inbox_mutex_;
  std::vector<std::function<void(Network&)>> inbox_;
};

}  // namespace icsrange::net
