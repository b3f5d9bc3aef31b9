#include "icsrange/attack/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "icsrange/plc/tag.hpp"

namespace icsrange::attack {

namespace {

using nlohmann::json;

std::vector<std::string> split_dots(std::string_view s, std::size_t parts) {
  std::vector<std::string> out;
  while (out.size() + 1 < parts) {
    auto dot = s.find('.');
    if (dot == std::string_view::npos) break;
    out.emplace_back(s.substr(0, dot));
    s.remove_prefix(dot + 1);
  }
  out.emplace_back(s);
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

std::string hmi_device_of(const testbed::Testbed& tb, std::string_view tag) {
  for (const auto& [device, tags] : tb.config().hmi_tags) {
    if (std::find(tags.begin(), tags.end(), tag) != tags.end()) return device;
  }
  throw std::invalid_argument("tag '" + std::string(tag) + "' is not on the HMI");
}

std::string join_args(const std::vector<std::string>& args, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) out += (i > from ? " " : "") + args[i];
  return out;
}

std::string apply_transform(const std::string& value, const std::string& how,
                            const std::string& operand) {
  if (how == "set") return operand;
  if (how == "xor") {
    auto key = static_cast<unsigned char>(static_cast<int>(to_double(operand)) & 0xff);
    std::string out = value;
    for (auto& c : out) c = static_cast<char>(static_cast<unsigned char>(c) ^ key);
    return out;
  }
  auto n = plc::as_number(plc::from_text(value));
  if (!n) return value;
  double x = how == "offset" ? *n + to_double(operand) : *n * to_double(operand);
  return plc::to_text(x);
}

}  // namespace

double subject_value(std::string_view subject, testbed::Testbed& tb) {
  if (subject == "true") return 1.0;
  auto parts = split_dots(subject, 3);
  const std::string& head = parts[0];
  if (head == "plant" && parts.size() == 3 && parts[1] == "overflow") {
    for (const auto& e : tb.plant().state().overflow_events) {
      if (e.tank == parts[2]) return 1.0;
    }
    return 0.0;
  }
  if (head == "plant") {
    auto p = split_dots(subject, 2);
    if (p.size() == 2) return plant::true_value(tb.plant().state(), p[1]);
  }
  if ((head == "tag" || head == "skew") && parts.size() == 3) {
    auto n = plc::as_number(tb.plc(parts[1]).tags().record(parts[2]).value);
    if (!n) throw std::invalid_argument("tag '" + parts[2] + "' is not numeric");
    if (head == "tag") return *n;
    return *n - plant::true_value(tb.plant().state(), parts[2]);
  }
  if (head == "hmi" && parts.size() == 3 && (parts[1] == "age" || parts[1] == "stale")) {
    auto view = tb.hmi_view(hmi_device_of(tb, parts[2]), parts[2]);
    return parts[1] == "age" ? view->age : (view->stale ? 1.0 : 0.0);
  }
  throw std::invalid_argument("unknown subject '" + std::string(subject) + "'");
}

bool evaluate(const Predicate& p, testbed::Testbed& tb, const Report& ctx) {
  switch (p.kind) {
    case Predicate::Kind::contains: {
      if (p.subject == "readout") return ctx.readout && ctx.readout->find(p.text) != std::string::npos;
      for (const auto& e : ctx.transcript) {
        std::string text(e.payload.begin(), e.payload.end());
        if (text.find(p.text) != std::string::npos) return true;
      }
      return false;
    }
    case Predicate::Kind::truthy:
      return subject_value(p.subject, tb) != 0.0;
    case Predicate::Kind::compare: {
      double v = subject_value(p.subject, tb);
      if (p.op == "==") return v == p.value;
      if (p.op == "!=") return v != p.value;
      if (p.op == "<") return v < p.value;
      if (p.op == "<=") return v <= p.value;
      if (p.op == ">") return v > p.value;
      return v >= p.value;
    }
  }
  return false;
}

json report_summary(const Report& r) {
  json j = {{"type", "summary"},
            {"run_id", r.run_id},
            {"scenario", r.scenario},
            {"profile", r.profile},
            {"seed", r.seed},
            {"refused", r.refused},
            {"success", r.success},
            {"undone", r.undone},
            {"reason", r.reason},
            {"start", r.start},
            {"end", r.end},
            {"frames_injected", r.frames_injected},
            {"alarms", r.alarms.size()},
            {"mechanisms", r.mechanisms}};
  j["failed_step"] = r.failed_step ? json(*r.failed_step) : json(nullptr);
  if (r.readout) j["readout"] = *r.readout;
  if (!r.transcript.empty()) {
    json t = json::array();
    for (const auto& e : r.transcript) {
      t.push_back({{"ts", e.ts},
                   {"src", e.src_ip.to_string()},
                   {"dst", e.dst_ip.to_string()},
                   {"seq", e.seq},
                   {"payload", net::to_hex(e.payload)}});
    }
    j["transcript"] = t;
  }
  return j;
}

std::string report_lines(const Report& r) {
  std::ostringstream out;
  out << report_summary(r).dump() << '\n';
  for (const auto& e : r.timeline) {
    out << json{{"type", "step"},   {"t", e.t},          {"step", e.step},
                {"action", e.action}, {"detail", e.detail}, {"ok", e.ok}}
               .dump()
        << '\n';
  }
  for (const auto& a : r.alarms) {
    json j = ids::to_json(a);
    j["type"] = "alarm";
    out << j.dump() << '\n';
  }
  return out.str();
}

AttackRunner::AttackRunner(testbed::Testbed& tb, std::uint64_t seed) : tb_(tb), rng_(seed) {
  for (const auto& h : tb.config().topology.hosts) {
    if (h.role == net::HostRole::attacker) {
      host_ = h.id;
      break;
    }
  }
  if (host_.empty()) throw std::invalid_argument("topology has no attacker host");
  periodic_ = tb_.add_periodic([this](testbed::Testbed& t) { on_tick(t); });
}

AttackRunner::~AttackRunner() { tb_.remove_periodic(periodic_); }

const net::HostConfig& AttackRunner::l1(const std::string& device) const {
  const auto* h = tb_.config().topology.interface_of(device, net::kControlSegment);
  if (!h) throw std::invalid_argument("'" + device + "' has no control-network interface");
  return *h;
}

void AttackRunner::sync() { tb_.network().run_until(std::max(tb_.network().now(), tb_.time())); }

void AttackRunner::send_poison(const Poison& p) {
  const auto& victim = l1(p.victim);
  const auto& imp = l1(p.impersonated);
  net::Frame f;
  f.kind = net::FrameKind::arp_rep;
  f.src_mac = tb_.config().topology.host(host_).mac;
  f.dst_mac = victim.mac;
  f.src_ip = imp.ip;
  f.dst_ip = victim.ip;
  tb_.network().inject(host_, f);
}

void AttackRunner::on_tick(testbed::Testbed& tb) {
  // Refresh after every announcement round and once a second.
  if (tb.ticks() % 10 == 0) {
    for (const auto& p : poisons_) send_poison(p);
  }
  const double t = tb.time();
  const double next = t + tb.config().dt;
  for (auto& f : floods_) {
    while (true) {
      double at = f.start + static_cast<double>(f.sent) / f.rate;
      if (at >= f.end || at >= next) break;
      net::Frame syn;
      syn.kind = net::FrameKind::syn;
      syn.src_mac = tb.config().topology.host(host_).mac;
      syn.dst_mac = f.mac;
      syn.src_ip = tb.config().topology.host(host_).ip;
      syn.dst_ip = f.ip;
      syn.seq = static_cast<std::uint32_t>(rng_());
      tb.network().inject(host_, syn, std::max(at, tb.network().now()));
      ++f.sent;
    }
  }
  std::erase_if(floods_, [&](const Flood& f) {
    return f.start + static_cast<double>(f.sent) / f.rate >= f.end;
  });
}

void AttackRunner::arp_poison(const std::string& victim, const std::string& impersonated) {
  sync();
  Poison p{victim, impersonated};
  send_poison(p);
  poisons_.push_back(p);
  tb_.network().run_until(tb_.network().now() + 0.005);
}

void AttackRunner::arp_restore(const std::string& victim, const std::string& impersonated) {
  sync();
  std::erase_if(poisons_, [&](const Poison& p) {
    return p.victim == victim && p.impersonated == impersonated;
  });
  const auto& v = l1(victim);
  const auto& imp = l1(impersonated);
  net::Frame f;
  f.kind = net::FrameKind::arp_rep;
  f.src_mac = imp.mac;
  f.dst_mac = v.mac;
  f.src_ip = imp.ip;
  f.dst_ip = v.ip;
  tb_.network().inject(host_, f);
  tb_.network().run_until(tb_.network().now() + 0.005);
}

void AttackRunner::arp_restore() {
  auto all = poisons_;
  for (const auto& p : all) arp_restore(p.victim, p.impersonated);
}

namespace {

struct Endpoints {
  std::string segment;
  bool inline_tap = false;
  std::optional<net::Ipv4Address> a;
  std::optional<net::Ipv4Address> b;
};

Endpoints endpoints(const net::Topology& topo, const std::string& a, const std::string& b) {
  Endpoints e;
  e.segment = std::string(net::kControlSegment);
  auto field_segment = [&](const std::string& dev) -> std::optional<std::string> {
    if (dev == "*") return std::nullopt;
    if (topo.interface_of(dev, net::kControlSegment)) return std::nullopt;
    for (const auto& h : topo.hosts) {
      if (h.device == dev) return h.segment;
    }
    throw std::invalid_argument("unknown device '" + dev + "'");
  };
  if (auto s = field_segment(a)) e.segment = *s;
  if (auto s = field_segment(b)) e.segment = *s;
  e.inline_tap = e.segment != net::kControlSegment;
  auto ip = [&](const std::string& dev) -> std::optional<net::Ipv4Address> {
    if (dev == "*") return std::nullopt;
    const auto* h = topo.interface_of(dev, e.segment);
    if (!h) throw std::invalid_argument("'" + dev + "' is not on " + e.segment);
    return h->ip;
  };
  e.a = ip(a);
  e.b = ip(b);
  return e;
}

bool between(const Endpoints& e, const net::Frame& f) {
  auto is = [](const std::optional<net::Ipv4Address>& want, net::Ipv4Address got) {
    return !want || *want == got;
  };
  return (is(e.a, f.src_ip) && is(e.b, f.dst_ip)) || (is(e.b, f.src_ip) && is(e.a, f.dst_ip));
}

}  // namespace

int AttackRunner::mitm_drop(const std::string& a, const std::string& b) {
  auto ep = endpoints(tb_.config().topology, a, b);
  auto mac = tb_.config().topology.host(host_).mac;
  net::MitmHook hook;
  hook.segment = ep.segment;
  hook.action = net::HookAction::drop;
  hook.label = "drop " + a + "<->" + b;
  hook.predicate = [ep, mac](const net::Frame& f) {
    if (f.kind == net::FrameKind::arp_req || f.kind == net::FrameKind::arp_rep) return false;
    return (ep.inline_tap || f.dst_mac == mac) && between(ep, f);
  };
  int id = tb_.network().add_hook(std::move(hook));
  hooks_.push_back(id);
  return id;
}

int AttackRunner::mitm_modify(const std::string& a, const std::string& b, const std::string& tag,
                              const std::string& how, const std::string& operand) {
  auto ep = endpoints(tb_.config().topology, a, b);
  auto mac = tb_.config().topology.host(host_).mac;
  auto pending = std::make_shared<std::set<std::pair<std::uint32_t, std::uint32_t>>>();
  net::MitmHook hook;
  hook.segment = ep.segment;
  hook.action = net::HookAction::modify;
  hook.label = "modify " + tag + " " + how + " " + operand;
  hook.predicate = [ep, mac](const net::Frame& f) {
    return f.kind == net::FrameKind::data && (ep.inline_tap || f.dst_mac == mac) && between(ep, f);
  };
  hook.transform = [tag, how, operand, pending](net::Frame& f) {
    auto msg = net::decode_tag_message(f.payload);
    if (!msg) return;
    if (auto* req = std::get_if<net::TagRequest>(&*msg)) {
      if (tag != "*" && req->name != tag) return;
      if (req->op == net::TagOp::read) {
        pending->insert({f.src_ip.value, f.dst_ip.value});
        return;
      }
      req->value = apply_transform(req->value, how, operand);
      f.payload = net::encode(*req);
    } else if (auto* resp = std::get_if<net::TagResponse>(&*msg)) {
      if (resp->op != net::TagOp::read) return;
      auto key = std::make_pair(f.dst_ip.value, f.src_ip.value);
      if (!pending->erase(key) || resp->status != net::TagStatus::ok) return;
      resp->value = apply_transform(resp->value, how, operand);
      f.payload = net::encode(*resp);
    }
  };
  int id = tb_.network().add_hook(std::move(hook));
  hooks_.push_back(id);
  return id;
}

void AttackRunner::mitm_clear() {
  for (int id : hooks_) tb_.network().remove_hook(id);
  hooks_.clear();
}

std::vector<net::TranscriptEntry> AttackRunner::passive_mitm(const std::string& a,
                                                             const std::string& b,
                                                             double seconds) {
  arp_poison(a, b);
  arp_poison(b, a);
  tb_.network().clear_transcript(host_);
  tb_.run_for(seconds);
  sync();
  auto ia = l1(a).ip;
  auto ib = l1(b).ip;
  std::vector<net::TranscriptEntry> out;
  for (const auto& e : tb_.network().transcript(host_)) {
    if ((e.src_ip == ia && e.dst_ip == ib) || (e.src_ip == ib && e.dst_ip == ia)) out.push_back(e);
  }
  arp_restore(a, b);
  arp_restore(b, a);
  return out;
}

void AttackRunner::syn_flood(const std::string& target, double rate, double duration) {
  if (rate <= 0.0 || duration <= 0.0) throw std::invalid_argument("syn_flood needs positive rate");
  const auto& t = l1(target);
  Flood f;
  f.ip = t.ip;
  f.mac = tb_.network().arp_lookup(host_, t.ip).value_or(t.mac);
  f.rate = rate;
  f.start = tb_.time();
  f.end = f.start + duration;
  floods_.push_back(f);
}

std::optional<net::TagResponse> AttackRunner::tag_read(const std::string& device,
                                                       const std::string& tag) {
  sync();
  auto flow = tb_.network().handshake_open(host_, l1(device).ip);
  if (!flow) return std::nullopt;
  auto r = tb_.network().tag_request(*flow, {net::TagOp::read, tag, {}});
  tb_.network().close(*flow);
  return r;
}

std::optional<net::TagResponse> AttackRunner::tag_write(const std::string& device,
                                                        const std::string& tag,
                                                        const std::string& value) {
  sync();
  auto flow = tb_.network().handshake_open(host_, l1(device).ip);
  if (!flow) return std::nullopt;
  auto r = tb_.network().tag_request(*flow, {net::TagOp::write, tag, value});
  tb_.network().close(*flow);
  return r;
}

bool AttackRunner::execute_step(const Step& st, Report& report, std::string& detail) {
  const auto& a = st.args;
  const std::string& act = st.action;
  if (act == "wait") {
    tb_.run_for(to_double(a[0]));
    return true;
  }
  if (act == "wait_until") {
    auto p = parse_predicate(join_args(a, 0, a.size() - 1));
    bool ok = tb_.run_until([&] { return evaluate(p, tb_, report); }, to_double(a.back()));
    detail = ok ? "reached" : "timed out waiting for " + p.source;
    return ok;
  }
  if (act == "assert") {
    auto p = parse_predicate(join_args(a, 0, a.size()));
    bool ok = evaluate(p, tb_, report);
    if (!ok) detail = "assertion failed: " + p.source;
    return ok;
  }
  if (act == "assert_hold") {
    auto p = parse_predicate(join_args(a, 0, a.size() - 1));
    const double end = tb_.time() + to_double(a.back());
    while (tb_.time() < end - 1e-9) {
      if (!evaluate(p, tb_, report)) {
        detail = "broke at t=" + plc::to_text(tb_.time()) + ": " + p.source;
        return false;
      }
      tb_.tick();
    }
    bool ok = evaluate(p, tb_, report);
    if (!ok) detail = "broke at t=" + plc::to_text(tb_.time()) + ": " + p.source;
    return ok;
  }
  if (act == "set_hardness") {
    plant::PlantCommand cmd;
    cmd.type = plant::PlantCommand::Type::set_hardness;
    cmd.value = to_double(a[0]);
    tb_.plant().enqueue(cmd);
    return true;
  }
  if (act == "arp_poison") {
    arp_poison(a[0], a[1]);
    return true;
  }
  if (act == "arp_restore") {
    if (a.empty()) {
      arp_restore();
    } else if (a.size() == 2) {
      arp_restore(a[0], a[1]);
    } else {
      throw std::invalid_argument("arp_restore takes zero or two devices");
    }
    return true;
  }
  if (act == "mitm_drop") {
    mitm_drop(a[0], a[1]);
    return true;
  }
  if (act == "mitm_modify") {
    mitm_modify(a[0], a[1], a[2], a[3], a[4]);
    return true;
  }
  if (act == "mitm_clear") {
    mitm_clear();
    return true;
  }
  if (act == "passive_mitm") {
    auto t = passive_mitm(a[0], a[1], to_double(a[2]));
    detail = std::to_string(t.size()) + " payloads captured";
    report.transcript.insert(report.transcript.end(), t.begin(), t.end());
    return true;
  }
  if (act == "syn_flood") {
    syn_flood(a[0], to_double(a[1]), to_double(a[2]));
    return true;
  }
  if (act == "tag_read") {
    auto r = tag_read(a[0], a[1]);
    if (!r || r->status != net::TagStatus::ok) {
      detail = r ? "status " + std::to_string(static_cast<int>(r->status)) : "no response";
      return false;
    }
    report.readout = r->value;
    detail = r->value;
    return true;
  }
  if (act == "tag_write") {
    auto r = tag_write(a[0], a[1], a[2]);
    if (!r || r->status != net::TagStatus::ok) {
      detail = r ? "status " + std::to_string(static_cast<int>(r->status)) : "no response";
      return false;
    }
    return true;
  }
  if (act == "hmi_override") {
    sync();
    std::string cmd = a[1] == "-" ? std::string() : a[1];
    bool ok = tb_.hmi_override(a[0], cmd, plant::parse_control_mode(a[2]));
    if (!ok) detail = "HMI write failed";
    return ok;
  }
  throw std::invalid_argument("unknown action '" + act + "'");
}

Report AttackRunner::execute(const Scenario& s, const score::AttackerProfile& profile,
                             const std::string& run_id, const std::vector<Step>& steps,
                             bool is_undo) {
  Report r;
  r.run_id = run_id;
  r.scenario = s.id;
  r.profile = profile.id;
  r.undone = is_undo;
  r.start = r.end = tb_.time();
  if (!score::permits(profile, s.capabilities)) {
    r.refused = true;
    std::string missing;
    for (auto c : s.capabilities) {
      if (!profile.capabilities.contains(c)) missing += " " + std::string(score::to_string(c));
    }
    r.reason = "profile " + profile.id + " lacks:" + missing;
    return r;
  }

  auto& store = tb_.alarms();
  const auto previous_session = store.active_session();
  store.begin_session(run_id);
  const std::size_t capture_start = tb_.network().capture().size();
  const auto attacker_mac = tb_.config().topology.host(host_).mac;

  bool failed = false;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    TimelineEntry e;
    e.t = tb_.time();
    e.step = i + 1;
    e.action = steps[i].action;
    for (const auto& arg : steps[i].args) e.action += " " + arg;
    try {
      e.ok = execute_step(steps[i], r, e.detail);
    } catch (const std::exception& ex) {
      e.ok = false;
      e.detail = ex.what();
    }
    r.timeline.push_back(e);
    if (!e.ok) {
      failed = true;
      r.failed_step = i + 1;
      r.reason = e.detail;
      break;
    }
  }
  if (is_undo) {
    mitm_clear();
    arp_restore();
    floods_.clear();
  }
  if (!failed) {
    try {
      r.success = is_undo || !s.success || evaluate(*s.success, tb_, r);
    } catch (const std::exception& ex) {
      r.reason = ex.what();
    }
    if (!r.success && r.reason.empty()) r.reason = "success condition not met: " + s.success->source;
  }
  sync();
  r.end = tb_.time();
  const auto& cap = tb_.network().capture();
  for (std::size_t i = capture_start; i < cap.size(); ++i) {
    if (cap[i].frame.src_mac == attacker_mac) ++r.frames_injected;
  }
  ids::AlarmFilter filter;
  filter.session = run_id;
  r.alarms = store.query(filter);
  for (const auto& a : r.alarms) {
    if (ids::is_detection(a.rule)) r.mechanisms.insert(std::string(ids::to_string(a.rule)));
  }
  store.end_session();
  if (previous_session) store.begin_session(*previous_session);
  return r;
}

Report AttackRunner::run(const Scenario& s, const score::AttackerProfile& profile,
                         const std::string& run_id) {
  return execute(s, profile, run_id, s.steps, false);
}

Report AttackRunner::undo(const Scenario& s, const score::AttackerProfile& profile,
                          const std::string& run_id) {
  return execute(s, profile, run_id, s.undo, true);
}

}  // namespace icsrange::attack
