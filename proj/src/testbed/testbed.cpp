#include "icsrange/testbed/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "icsrange/plant/plant_config.hpp"

#include "icsrange/net/topology.hpp"

namespace icsrange::testbed {

namespace {

const net::HostConfig& interface_on(const net::Topology& t, std::string_view device,
                                    std::string_view segment) {
  if (const auto* h = t.interface_of(device, segment)) return *h;
  throw std::invalid_argument("device '" + std::string(device) + "' has no interface on " +
                              std::string(segment));
}

const net::HostConfig& first_interface(const net::Topology& t, std::string_view device) {
  for (const auto& h : t.hosts) {
    if (h.device == device) return h;
  }
  throw std::invalid_argument("device '" + std::string(device) + "' is not in the topology");
}

ids::AlarmRule rule_of(plc::PlcAlarm::Kind k) {
  return k == plc::PlcAlarm::Kind::invariant ? ids::AlarmRule::invariant
                                             : ids::AlarmRule::scan_fault;
}

}  // namespace

TestbedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read range file " + path);
  auto j = nlohmann::json::parse(in);
  if (!j.is_object()) throw std::invalid_argument("range file must hold an object");
  const auto base = std::filesystem::path(path).parent_path();
  TestbedConfig cfg = default_config();
  for (const auto& [key, value] : j.items()) {
    if (key == "plant") {
      cfg.plant = plant::load_plant_config((base / value.get<std::string>()).string());
    } else if (key == "topology") {
      std::ifstream t(base / value.get<std::string>());
      if (!t) throw std::runtime_error("cannot read topology " + value.get<std::string>());
      std::stringstream buf;
      buf << t.rdbuf();
      cfg.topology = net::parse_topology(buf.str());
    } else if (key == "seed") {
      cfg.net.seed = value.get<std::uint64_t>();
    } else if (key == "ids") {
      cfg.ids_enabled = value.get<bool>();
    } else if (key == "staleness") {
      cfg.staleness = value.get<double>();
    } else {
      throw std::invalid_argument("unknown range key '" + key + "'");
    }
  }
  return cfg;
}

Testbed::Testbed(TestbedConfig config)
    : config_(std::move(config)),
      plant_(config_.plant),
      network_(std::make_unique<net::Network>(config_.topology, config_.net)),
      central_(&alarms_, config_.ids) {
  for (const auto& pc : config_.plcs) {
    auto p = std::make_unique<plc::Plc>(pc);
    p->tags().attach_historian(&historian_);
    plcs_.emplace(pc.id, std::move(p));
  }
  for (const auto& w : config_.wiring) {
    plc::Plc& p = plc(w.plc);
    for (const auto& s : w.sensors) {
      if (!p.tags().contains(s)) p.tags().declare(s, plant::true_value(plant_.state(), s), true);
    }
    const auto& rio_host = first_interface(config_.topology, w.device);
    interface_on(config_.topology, w.plc, rio_host.segment);
    rios_.push_back({w, rio_host.id, std::nullopt, {}});
  }
  for (const auto& ex : config_.exchanges) {
    plc::Plc& to = plc(ex.to);
    if (to.tags().contains(ex.remote_tag)) continue;
    plc::TagValue initial = std::string();
    if (!ex.literal && plc(ex.from).tags().contains(ex.tag)) {
      initial = plc(ex.from).tags().record(ex.tag).value;
    }
    to.tags().declare(ex.remote_tag, initial, true);
  }

  install_services();
  if (config_.ids_enabled) {
    for (const auto& seg : config_.topology.segments) {
      auto node = std::make_unique<ids::IdsNode>("ids-" + seg, seg, &network_->topology(),
                                                 &central_, config_.ids);
      ids::IdsNode* raw = node.get();
      network_->add_tap(seg, [raw](const net::Frame& f) { raw->observe(f); });
      nodes_.push_back(std::move(node));
    }
  }
  network_->announce_all();
  network_->run_until(network_->now() + 0.005);
  open_persistent_flows();
}

plc::Plc& Testbed::plc(std::string_view id) {
  auto it = plcs_.find(id);
  if (it == plcs_.end()) throw std::out_of_range("unknown PLC '" + std::string(id) + "'");
  return *it->second;
}

const plc::Plc& Testbed::plc(std::string_view id) const {
  auto it = plcs_.find(id);
  if (it == plcs_.end()) throw std::out_of_range("unknown PLC '" + std::string(id) + "'");
  return *it->second;
}

std::vector<std::string> Testbed::plc_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, p] : plcs_) out.push_back(id);
  return out;
}

std::string Testbed::owner_of(std::string_view actuator) const {
  for (const auto& [id, p] : plcs_) {
    const auto& acts = p->actuators();
    if (std::find(acts.begin(), acts.end(), actuator) != acts.end()) return id;
  }
  throw std::out_of_range("no PLC owns '" + std::string(actuator) + "'");
}

void Testbed::install_services() {
  for (auto& [id, p] : plcs_) {
    plc::Plc* raw = p.get();
    for (const auto& h : config_.topology.hosts) {
      if (h.device != id) continue;
      network_->set_tag_handler(h.id, [this, raw](const net::TagRequest& req, net::Ipv4Address,
                                                  double now) { return serve_plc(*raw, req, now); });
    }
  }
  for (auto& rio : rios_) {
    RioState* raw = &rio;
    network_->set_tag_handler(rio.host, [this, raw](const net::TagRequest& req, net::Ipv4Address,
                                                    double) { return serve_rio(*raw, req); });
  }
}

net::TagResponse Testbed::serve_plc(plc::Plc& p, const net::TagRequest& req, double now) {
  net::TagResponse resp;
  resp.op = req.op;
  if (req.op == net::TagOp::read) {
    try {
      resp.value = plc::to_text(p.tags().read(req.name, now));
    } catch (const plc::UnknownTag&) {
      resp.status = net::TagStatus::unknown_tag;
    }
    return resp;
  }
  switch (p.tags().write(req.name, plc::from_text(req.value), now)) {
    case plc::WriteStatus::ok:
      break;
    case plc::WriteStatus::unknown_tag:
      resp.status = net::TagStatus::unknown_tag;
      break;
    case plc::WriteStatus::read_only:
      resp.status = net::TagStatus::read_only;
      break;
  }
  return resp;
}

net::TagResponse Testbed::serve_rio(RioState& rio, const net::TagRequest& req) {
  net::TagResponse resp;
  resp.op = req.op;
  const auto& w = rio.wiring;
  if (req.op == net::TagOp::read) {
    if (std::find(w.sensors.begin(), w.sensors.end(), req.name) == w.sensors.end()) {
      resp.status = net::TagStatus::unknown_tag;
    } else {
      resp.value = plc::to_text(plant_.read(req.name).value);
    }
    return resp;
  }
  if (!plc::is_valid_tag_name(req.name)) {
    resp.status = net::TagStatus::unknown_tag;
    return resp;
  }
  auto addr = plc::TagAddress::parse(req.name);
  const std::string& act = addr.name;
  if (std::find(w.actuators.begin(), w.actuators.end(), act) == w.actuators.end() ||
      (addr.instance != "MODE" && addr.instance != "CMD")) {
    resp.status = net::TagStatus::unknown_tag;
    return resp;
  }
  if (addr.instance == "MODE") {
    try {
      rio.modes[act] = plant::parse_control_mode(req.value);
    } catch (const std::invalid_argument&) {
      resp.status = net::TagStatus::malformed;
    }
    return resp;
  }
  auto mode_it = rio.modes.find(act);
  auto mode = mode_it == rio.modes.end() ? plant::ControlMode::automatic : mode_it->second;
  plant::PlantCommand cmd;
  cmd.target = act;
  cmd.command = req.value;
  cmd.mode = mode;
  if (mode == plant::ControlMode::manual) {
    cmd.type = plant::PlantCommand::Type::force;
  } else if (req.value.empty()) {
    cmd.type = plant::PlantCommand::Type::set_mode;
  } else {
    cmd.type = plant::PlantCommand::Type::plc;
  }
  plant_.enqueue(std::move(cmd));
  return resp;
}

std::optional<net::FlowId> Testbed::ensure_flow(std::optional<net::FlowId>& slot,
                                                const std::string& client,
                                                net::Ipv4Address server) {
  if (slot && network_->flow_open(*slot)) return slot;
  slot = network_->handshake_open(client, server);
  return slot;
}

void Testbed::open_persistent_flows() {
  for (auto& rio : rios_) {
    const auto& rio_host = config_.topology.host(rio.host);
    const auto& plc_host = interface_on(config_.topology, rio.wiring.plc, rio_host.segment);
    ensure_flow(rio.report_flow, rio.host, plc_host.ip);
    ensure_flow(plc_links_[rio.wiring.plc].command_flow, plc_host.id, rio_host.ip);
  }
  for (std::size_t i = 0; i < config_.exchanges.size(); ++i) {
    const auto& ex = config_.exchanges[i];
    const auto& from = interface_on(config_.topology, ex.from, net::kControlSegment);
    const auto& to = interface_on(config_.topology, ex.to, net::kControlSegment);
    ensure_flow(exchange_flows_[i], from.id, to.ip);
  }
}

std::uint64_t Testbed::every(double period) const {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(period / config_.dt)));
}

void Testbed::tick() {
  const double t = time();
  const std::uint64_t k = ticks_;
  network_->run_until(t);
  if (k > 0 && k % every(config_.announce_period) == 0) network_->announce_all();

  auto periodic = periodic_;
  for (auto& [id, fn] : periodic) fn(*this);

  report_sensors();
  network_->run_until(std::max(network_->now(), t) + 0.005);
  if (k % every(config_.exchange_period) == 0) {
    run_exchanges();
    network_->run_until(network_->now() + 0.005);
  }
  scan_plcs();
  network_->run_until(network_->now() + 0.005);
  if (k % every(config_.hmi_poll_period) == 0) poll_hmi();

  plant_.step(config_.dt);
  ++ticks_;
  check_flags();
}

void Testbed::run_for(double seconds) {
  auto n = static_cast<std::uint64_t>(std::llround(seconds / config_.dt));
  for (std::uint64_t i = 0; i < n; ++i) tick();
}

bool Testbed::run_until(const std::function<bool()>& done, double timeout) {
  const double end = time() + timeout;
  while (true) {
    if (done()) return true;
    if (time() >= end - 1e-9) return false;
    tick();
  }
}

void Testbed::report_sensors() {
  for (auto& rio : rios_) {
    const auto& rio_host = config_.topology.host(rio.host);
    const auto& plc_host = interface_on(config_.topology, rio.wiring.plc, rio_host.segment);
    auto flow = ensure_flow(rio.report_flow, rio.host, plc_host.ip);
    if (!flow) continue;
    for (const auto& s : rio.wiring.sensors) {
      network_->tag_send(*flow,
                         {net::TagOp::write, s, plc::to_text(plant_.read(s).value)});
    }
  }
}

void Testbed::run_exchanges() {
  for (std::size_t i = 0; i < config_.exchanges.size(); ++i) {
    const auto& ex = config_.exchanges[i];
    const auto& from = interface_on(config_.topology, ex.from, net::kControlSegment);
    const auto& to = interface_on(config_.topology, ex.to, net::kControlSegment);
    auto flow = ensure_flow(exchange_flows_[i], from.id, to.ip);
    if (!flow) continue;
    std::string value = ex.literal ? *ex.literal
                                   : plc::to_text(plc(ex.from).tags().record(ex.tag).value);
    network_->tag_send(*flow, {net::TagOp::write, ex.remote_tag, value});
  }
}

void Testbed::scan_plcs() {
  const double t = time();
  for (auto& [id, p] : plcs_) {
    plc::ScanResult result = p->scan(p->snapshot(t));
    for (const auto& a : result.alarms) {
      ids::Alarm alarm;
      alarm.ts = t;
      alarm.source_node = id;
      alarm.rule = rule_of(a.kind);
      alarm.severity = alarm.rule == ids::AlarmRule::invariant ? "high" : "low";
      alarm.evidence = {"rule=" + a.rule};
      alarm.detail = a.detail;
      central_.raise(std::move(alarm), a.rule);
    }
    if (result.commands.empty()) continue;
    auto rio = std::find_if(rios_.begin(), rios_.end(),
                            [&](const RioState& r) { return r.wiring.plc == id; });
    if (rio == rios_.end()) continue;
    const auto& rio_host = config_.topology.host(rio->host);
    const auto& plc_host = interface_on(config_.topology, id, rio_host.segment);
    auto flow = ensure_flow(plc_links_[id].command_flow, plc_host.id, rio_host.ip);
    if (!flow) continue;
    for (const auto& c : result.commands) {
      network_->tag_send(*flow, {net::TagOp::write, plc::mode_tag(c.target),
                                 std::string(plant::to_string(c.mode))});
      network_->tag_send(*flow, {net::TagOp::write, plc::manual_command_tag(c.target), c.command});
    }
  }
}

void Testbed::poll_hmi() {
  const double t = time();
  const bool heartbeat = ticks_ % every(config_.heartbeat_period) == 0;
  const auto& hmi = interface_on(config_.topology, "HMI", net::kControlSegment);
  for (const auto& [device, tags] : config_.hmi_tags) {
    const auto& server = interface_on(config_.topology, device, net::kControlSegment);
    auto flow = network_->handshake_open(hmi.id, server.ip);
    if (!flow) continue;
    if (heartbeat && device == "PLC3") {
      network_->tag_request(*flow, {net::TagOp::write, "HB",
                                    std::to_string(config_.heartbeat_value)});
    }
    for (const auto& tag : tags) {
      auto resp = network_->tag_request(*flow, {net::TagOp::read, tag, {}});
      if (!resp || resp->status != net::TagStatus::ok) continue;
      auto& reading = hmi_[{device, tag}];
      reading.device = device;
      reading.tag = tag;
      reading.value = resp->value;
      reading.updated_at = t;
    }
    network_->close(*flow);
  }
}

std::optional<HmiView> Testbed::hmi_view(std::string_view device, std::string_view tag) const {
  auto cfg = config_.hmi_tags.find(std::string(device));
  if (cfg == config_.hmi_tags.end() ||
      std::find(cfg->second.begin(), cfg->second.end(), tag) == cfg->second.end()) {
    return std::nullopt;
  }
  HmiView v;
  v.device = std::string(device);
  v.tag = std::string(tag);
  auto it = hmi_.find({v.device, v.tag});
  if (it != hmi_.end()) {
    v.value = it->second.value;
    v.age = time() - it->second.updated_at;
  }
  v.stale = !(v.age <= config_.staleness);
  v.rendered = v.stale ? "*" : v.value;
  return v;
}

std::vector<HmiView> Testbed::hmi_state() const {
  std::vector<HmiView> out;
  for (const auto& [device, tags] : config_.hmi_tags) {
    for (const auto& tag : tags) out.push_back(*hmi_view(device, tag));
  }
  return out;
}

bool Testbed::hmi_override(std::string_view actuator, std::string_view command,
                           plant::ControlMode mode) {
  const std::string owner = owner_of(actuator);
  const auto& hmi = interface_on(config_.topology, "HMI", net::kControlSegment);
  const auto& server = interface_on(config_.topology, owner, net::kControlSegment);
  auto flow = network_->handshake_open(hmi.id, server.ip);
  if (!flow) return false;
  bool ok = true;
  if (!command.empty()) {
    auto r = network_->tag_request(*flow, {net::TagOp::write, plc::manual_command_tag(actuator),
                                           std::string(command)});
    ok = r && r->status == net::TagStatus::ok;
  }
  if (ok) {
    auto r = network_->tag_request(*flow, {net::TagOp::write, plc::mode_tag(actuator),
                                           std::string(plant::to_string(mode))});
    ok = r && r->status == net::TagStatus::ok;
  }
  network_->close(*flow);
  return ok;
}

int Testbed::add_periodic(std::function<void(Testbed&)> fn) {
  int id = next_periodic_++;
  periodic_.emplace(id, std::move(fn));
  return id;
}

void Testbed::remove_periodic(int id) { periodic_.erase(id); }

std::optional<FlagRelease> Testbed::released(std::string_view challenge) const {
  for (const auto& r : releases_) {
    if (r.challenge == challenge) return r;
  }
  return std::nullopt;
}

void Testbed::check_flags() {
  const auto& events = plant_.state().overflow_events;
  for (; overflow_seen_ < events.size(); ++overflow_seen_) {
    const auto& e = events[overflow_seen_];
    std::string challenge = e.tank == "T101" ? "overflow_raw_tank" : "overflow_uf_tank";
    if (released(challenge)) continue;
    const std::string& flag =
        e.tank == "T101" ? config_.flags.raw_overflow : config_.flags.uf_overflow;
    releases_.push_back({challenge, flag, e.time, e.step});
  }

  if (released("keepalive_hijack") || !plcs_.contains("PLC3") || !plc("PLC3").tags().contains("HB")) {
    return;
  }
  auto hb = plc::as_number(plc("PLC3").tags().record("HB").value);
  if (hb && *hb == 3.0) {
    if (!keepalive_since_) keepalive_since_ = time();
    if (time() - *keepalive_since_ >= config_.keepalive_hold - 1e-9) {
      releases_.push_back({"keepalive_hijack", config_.flags.keepalive, time(),
                           plant_.state().steps});
    }
  } else {
    keepalive_since_.reset();
  }
}

}  // namespace icsrange::testbed
