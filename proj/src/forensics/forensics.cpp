#include "icsrange/forensics/forensics.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "icsrange/attack/runner.hpp"
#include "icsrange/testbed/testbed.hpp"

namespace icsrange::forensics {

using nlohmann::json;

std::vector<HostEntry> enumerate_hosts(const Capture& capture, const net::Ipv4Prefix& ics) {
  std::map<std::pair<net::Ipv4Address, net::MacAddress>, HostEntry> seen;
  for (const auto& rec : capture) {
    const auto& f = rec.frame;
    auto [it, fresh] = seen.try_emplace({f.src_ip, f.src_mac});
    if (fresh) {
      it->second.ip = f.src_ip;
      it->second.mac = f.src_mac;
      it->second.in_ics = ics.contains(f.src_ip);
      it->second.first_seen = f.ts;
    }
    ++it->second.frames;
  }
  std::vector<HostEntry> out;
  out.reserve(seen.size());
  for (auto& [key, entry] : seen) out.push_back(entry);
  return out;
}

std::string PoisonInterval::flag() const {
  return "ascflag{" + std::to_string(start) + "-" + std::to_string(end) + "}";
}

std::optional<PoisonInterval> find_poisoning_interval(const Capture& capture) {
  std::map<std::pair<std::string, net::Ipv4Address>, net::MacAddress> baseline;
  std::optional<PoisonInterval> found;
  for (const auto& rec : capture) {
    const auto& f = rec.frame;
    if (f.kind == net::FrameKind::arp_rep) {
      baseline.try_emplace({f.link, f.src_ip}, f.src_mac);
      continue;
    }
    if (f.kind != net::FrameKind::data || f.dst_mac.is_broadcast()) continue;
    auto dst = baseline.find({f.link, f.dst_ip});
    auto src = baseline.find({f.link, f.src_ip});
    if (dst == baseline.end() || src == baseline.end()) continue;
    if (dst->second == f.dst_mac || src->second != f.src_mac) continue;
    if (!found) {
      found = PoisonInterval{f.src_ip, f.dst_ip, f.seq, f.seq, 0};
    } else if (f.src_ip != found->victim || f.dst_ip != found->impersonated) {
      continue;
    }
    found->end = f.seq;
    ++found->frames;
  }
  return found;
}

double printable_ratio(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return 0.0;
  auto n = std::count_if(bytes.begin(), bytes.end(),
                         [](std::uint8_t b) { return b >= 0x20 && b <= 0x7e; });
  return static_cast<double>(n) / static_cast<double>(bytes.size());
}

net::Bytes xor_bytes(std::span<const std::uint8_t> data, std::span<const std::uint8_t> key) {
  if (key.empty()) throw std::invalid_argument("empty key");
  net::Bytes out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i] ^ key[i % key.size()];
  return out;
}

net::Bytes xor_decrypt(std::span<const std::uint8_t> payload, std::size_t key_length) {
  if (payload.empty()) throw std::invalid_argument("empty payload");
  if (key_length == 0 || key_length > payload.size()) {
    throw std::invalid_argument("key length outside payload");
  }
  return xor_bytes(payload.subspan(key_length), payload.first(key_length));
}

std::vector<KeyCandidate> rank_single_byte(std::span<const std::uint8_t> ciphertext) {
  if (ciphertext.empty()) throw std::invalid_argument("empty payload");
  std::vector<KeyCandidate> out;
  out.reserve(256);
  for (int k = 0; k < 256; ++k) {
    auto key = static_cast<std::uint8_t>(k);
    KeyCandidate c{key, 0.0, xor_bytes(ciphertext, std::span(&key, 1))};
    c.ratio = printable_ratio(c.plaintext);
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const KeyCandidate& a, const KeyCandidate& b) { return a.ratio > b.ratio; });
  return out;
}

KeyCandidate brute_force(std::span<const std::uint8_t> ciphertext) {
  return rank_single_byte(ciphertext).front();
}

FlowKey FlowKey::parse(std::string_view text) {
  auto dash = text.find('-');
  if (dash == std::string_view::npos) throw std::invalid_argument("flow id must be <src>-<dst>");
  return {net::Ipv4Address::parse(text.substr(0, dash)),
          net::Ipv4Address::parse(text.substr(dash + 1))};
}

std::string FlowKey::to_string() const { return src.to_string() + "-" + dst.to_string(); }

net::Bytes flow_payload(const Capture& capture, const FlowKey& flow) {
  std::map<std::uint32_t, const net::Bytes*> chunks;
  for (const auto& rec : capture) {
    const auto& f = rec.frame;
    if (f.kind == net::FrameKind::data && f.src_ip == flow.src && f.dst_ip == flow.dst) {
      chunks.try_emplace(f.seq, &f.payload);
    }
  }
  net::Bytes out;
  for (const auto& [seq, p] : chunks) out.insert(out.end(), p->begin(), p->end());
  return out;
}

std::optional<std::string> extract_flag(std::string_view text) {
  std::optional<std::size_t> best;
  for (std::string_view prefix : {"CTF{", "ascflag{"}) {
    auto at = text.find(prefix);
    if (at != std::string_view::npos && (!best || at < *best)) best = at;
  }
  if (!best) return std::nullopt;
  auto close = text.find('}', *best);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(text.substr(*best, close - *best + 1));
}

std::string_view to_string(ChallengeKind k) {
  switch (k) {
    case ChallengeKind::hosts: return "hosts";
    case ChallengeKind::arp_interval: return "arp-interval";
    case ChallengeKind::xor_cipher: return "xor";
    case ChallengeKind::composite: return "composite";
  }
  return "?";
}

ChallengeKind parse_challenge_kind(std::string_view s) {
  for (auto k : {ChallengeKind::hosts, ChallengeKind::arp_interval, ChallengeKind::xor_cipher,
                 ChallengeKind::composite}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown challenge kind '" + std::string(s) + "'");
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double tenths(double s) { return std::round(s * 10.0) / 10.0; }

testbed::TestbedConfig quiet_config(std::uint64_t seed) {
  auto cfg = testbed::default_config();
  cfg.net.seed = seed;
  cfg.ids_enabled = false;
  return cfg;
}

std::string random_flag(Rng& rng) {
  static constexpr std::string_view alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_";
  std::string body;
  int n = pick(rng, 10, 24);
  for (int i = 0; i < n; ++i) body += alphabet[pick(rng, 0, alphabet.size() - 1)];
  return "CTF{" + body + "}";
}

std::string cover_text(Rng& rng, const std::string& flag) {
  static const std::vector<std::string> words = {
      "pump",  "valve",   "level", "setpoint", "batch", "shift", "report", "ok",   "check",
      "raw",   "water",   "tank",  "dosing",   "ph",    "uf",    "ro",     "stage", "flow",
      "alarm", "cleared", "1.5",   "0.80",     "T101",  "P201",  "(note)", "-",     "#12"};
  std::string out = "maint log:";
  int before = pick(rng, 4, 10);
  for (int i = 0; i < before; ++i) out += " " + words[pick(rng, 0, words.size() - 1)];
  out += " key=" + flag + ";";
  int after = pick(rng, 3, 8);
  for (int i = 0; i < after; ++i) out += " " + words[pick(rng, 0, words.size() - 1)];
  return out;
}

/// Ciphertext whose planted key ranks first among single-byte candidates,
/// including the lowest-key tie-break.
net::Bytes single_byte_cipher(Rng& rng, const std::string& flag, std::uint8_t& key_out) {
  while (true) {
    std::string text = cover_text(rng, flag);
    auto key = static_cast<std::uint8_t>(pick(rng, 1, 255));
    net::Bytes plain(text.begin(), text.end());
    net::Bytes cipher = xor_bytes(plain, std::span(&key, 1));
    auto ranked = rank_single_byte(cipher);
    if (ranked[0].key == key) {
      key_out = key;
      return cipher;
    }
  }
}

void send_chunks(net::Network& net, const std::string& host, const net::HostConfig& from,
                 const net::HostConfig& to, const net::Bytes& data, Rng& rng) {
  auto seq = static_cast<std::uint32_t>(rng());
  std::size_t chunk = static_cast<std::size_t>(pick(rng, 12, 32));
  for (std::size_t off = 0; off < data.size(); off += chunk) {
    net::Frame f;
    f.kind = net::FrameKind::data;
    f.src_mac = from.mac;
    f.dst_mac = to.mac;
    f.src_ip = from.ip;
    f.dst_ip = to.ip;
    f.seq = seq;
    f.payload.assign(data.begin() + off, data.begin() + std::min(data.size(), off + chunk));
    seq += static_cast<std::uint32_t>(f.payload.size());
    net.inject(host, f);
    net.run_until(net.now() + 0.01);
  }
}

net::HostConfig external_host(Rng& rng) {
  net::HostConfig h;
  h.id = "external";
  h.segment = std::string(net::kControlSegment);
  std::array<std::uint8_t, 6> mac{0x02, 0xee, 0, 0, 0, 0};
  for (int i = 2; i < 6; ++i) mac[i] = static_cast<std::uint8_t>(pick(rng, 0, 255));
  h.mac = net::MacAddress{mac};
  const std::uint32_t bases[] = {0x0a000000u, 0xac100000u, 0xc6336400u};  // 10/8, 172.16/12, 198.51.100/24
  const std::uint32_t spans[] = {0x00ffffffu, 0x000fffffu, 0x000000ffu};
  int which = pick(rng, 0, 2);
  h.ip = net::Ipv4Address{bases[which] + 1 +
                          static_cast<std::uint32_t>(rng() % (spans[which] - 1))};
  return h;
}

const net::HostConfig& l1_host(const net::Topology& t, std::string_view device) {
  return *t.interface_of(device, net::kControlSegment);
}

GeneratedChallenge gen_hosts(std::uint64_t seed) {
  Rng rng(seed);
  testbed::Testbed tb(quiet_config(seed));
  tb.run_for(tenths(uniform(rng, 1.0, 3.0)));
  const auto& topo = tb.config().topology;
  const auto attacker = [&] {
    for (const auto& h : topo.hosts) {
      if (h.role == net::HostRole::attacker) return h.id;
    }
    throw std::logic_error("no attacker host");
  }();
  const auto plcs = tb.plc_ids();
  std::set<net::Ipv4Address> outside;
  int n = pick(rng, 1, 5);
  while (static_cast<int>(outside.size()) < n) {
    auto ext = external_host(rng);
    if (!outside.insert(ext.ip).second) continue;
    const auto& target = l1_host(topo, plcs[pick(rng, 0, plcs.size() - 1)]);
    net::Frame f;
    f.kind = pick(rng, 0, 1) ? net::FrameKind::syn : net::FrameKind::data;
    f.src_mac = ext.mac;
    f.dst_mac = target.mac;
    f.src_ip = ext.ip;
    f.dst_ip = target.ip;
    f.seq = static_cast<std::uint32_t>(rng());
    if (f.kind == net::FrameKind::data) f.payload = {0x13, 0x37};
    tb.network().run_until(std::max(tb.network().now(), tb.time()));
    tb.network().inject(attacker, f);
    tb.run_for(tenths(uniform(rng, 0.2, 1.0)));
  }
  tb.run_for(1.0);
  tb.network().run_until(tb.network().now() + 0.1);

  GeneratedChallenge g;
  g.kind = ChallengeKind::hosts;
  g.seed = seed;
  g.capture = tb.network().capture();
  g.flag = "CTF{hosts_" + std::to_string(topo.hosts.size()) + "_" + std::to_string(n) + "}";
  g.metadata = {{"ics_prefix", topo.ics_prefix.to_string()},
                {"answer", {{"inside", topo.hosts.size()}, {"outside", n}}}};
  return g;
}

GeneratedChallenge gen_arp_interval(std::uint64_t seed) {
  Rng rng(seed);
  testbed::Testbed tb(quiet_config(seed));
  const auto& exchanges = tb.config().exchanges;
  const auto& ex = exchanges[pick(rng, 0, exchanges.size() - 1)];
  const auto& topo = tb.config().topology;
  const auto& victim = l1_host(topo, ex.from);
  const auto& target = l1_host(topo, ex.to);

  tb.run_for(tenths(uniform(rng, 3.0, 8.0)));
  attack::AttackRunner runner(tb, seed);
  const auto attacker_mac = topo.host(runner.host()).mac;
  std::vector<std::uint32_t> truth;
  int tap = tb.network().add_tap(victim.segment, [&](const net::Frame& f) {
    if (f.kind == net::FrameKind::data && f.src_mac == victim.mac && f.src_ip == victim.ip &&
        f.dst_ip == target.ip && f.dst_mac == attacker_mac) {
      truth.push_back(f.seq);
    }
  });

  runner.arp_poison(ex.from, ex.to);
  tb.run_for(tenths(uniform(rng, 3.0, 8.0)));
  const bool gap = pick(rng, 0, 1) == 1;
  if (gap) {
    runner.arp_restore(ex.from, ex.to);
    tb.run_for(tenths(uniform(rng, 2.0, 4.0)));
    runner.arp_poison(ex.from, ex.to);
    tb.run_for(tenths(uniform(rng, 2.0, 5.0)));
  }
  runner.arp_restore(ex.from, ex.to);
  tb.run_for(3.0);
  tb.network().run_until(tb.network().now() + 0.1);
  tb.network().remove_tap(tap);
  if (truth.empty()) throw std::logic_error("poisoning episode carried no traffic");

  GeneratedChallenge g;
  g.kind = ChallengeKind::arp_interval;
  g.seed = seed;
  g.capture = tb.network().capture();
  g.flag = "ascflag{" + std::to_string(truth.front()) + "-" + std::to_string(truth.back()) + "}";
  g.metadata = {{"victim", victim.ip.to_string()},
                {"impersonated", target.ip.to_string()},
                {"sequence_numbers", "victim flow DATA seq"},
                {"relearn_gap", gap},
                {"forged_frames", truth.size()}};
  return g;
}

GeneratedChallenge gen_xor(std::uint64_t seed) {
  Rng rng(seed);
  testbed::Testbed tb(quiet_config(seed));
  tb.run_for(tenths(uniform(rng, 1.0, 3.0)));
  const auto& topo = tb.config().topology;
  const auto& from = l1_host(topo, "SCADA");
  const auto& to = l1_host(topo, "HISTORIAN");
  std::string flag = random_flag(rng);
  const bool prefixed = pick(rng, 0, 1) == 1;
  net::Bytes payload;
  std::size_t key_length = 1;
  if (prefixed) {
    key_length = static_cast<std::size_t>(pick(rng, 2, 8));
    net::Bytes key(key_length);
    for (auto& b : key) b = static_cast<std::uint8_t>(pick(rng, 1, 255));
    std::string text = cover_text(rng, flag);
    net::Bytes plain(text.begin(), text.end());
    payload = key;
    auto cipher = xor_bytes(plain, key);
    payload.insert(payload.end(), cipher.begin(), cipher.end());
  } else {
    std::uint8_t key = 0;
    payload = single_byte_cipher(rng, flag, key);
  }
  tb.network().run_until(std::max(tb.network().now(), tb.time()));
  send_chunks(tb.network(), from.id, from, to, payload, rng);
  tb.run_for(1.0);

  GeneratedChallenge g;
  g.kind = ChallengeKind::xor_cipher;
  g.seed = seed;
  g.capture = tb.network().capture();
  g.flag = flag;
  g.metadata = {{"flow", FlowKey{from.ip, to.ip}.to_string()},
                {"mode", prefixed ? "prefix" : "single"},
                {"key_length", key_length}};
  return g;
}

GeneratedChallenge gen_composite(std::uint64_t seed) {
  Rng rng(seed);
  testbed::Testbed tb(quiet_config(seed));
  tb.run_for(tenths(uniform(rng, 1.0, 3.0)));
  const auto& topo = tb.config().topology;
  std::string attacker;
  for (const auto& h : topo.hosts) {
    if (h.role == net::HostRole::attacker) attacker = h.id;
  }
  auto ext = external_host(rng);
  const auto plcs = tb.plc_ids();
  const auto& target = l1_host(topo, plcs[pick(rng, 0, plcs.size() - 1)]);
  std::string flag = random_flag(rng);
  std::uint8_t key = 0;
  auto cipher = single_byte_cipher(rng, flag, key);
  tb.network().run_until(std::max(tb.network().now(), tb.time()));
  send_chunks(tb.network(), attacker, ext, target, cipher, rng);
  tb.run_for(1.0);

  GeneratedChallenge g;
  g.kind = ChallengeKind::composite;
  g.seed = seed;
  g.capture = tb.network().capture();
  g.flag = flag;
  g.metadata = {{"ics_prefix", topo.ics_prefix.to_string()}};
  return g;
}

std::optional<std::string> decode_text(const net::Bytes& plain) {
  return extract_flag(std::string(plain.begin(), plain.end()));
}

}  // namespace

GeneratedChallenge generate(ChallengeKind kind, std::uint64_t seed) {
  switch (kind) {
    case ChallengeKind::hosts: return gen_hosts(seed);
    case ChallengeKind::arp_interval: return gen_arp_interval(seed);
    case ChallengeKind::xor_cipher: return gen_xor(seed);
    case ChallengeKind::composite: return gen_composite(seed);
  }
  throw std::invalid_argument("unknown challenge kind");
}

std::optional<std::string> solve(ChallengeKind kind, const Capture& capture,
                                 const json& metadata) {
  switch (kind) {
    case ChallengeKind::hosts: {
      auto prefix = net::Ipv4Prefix::parse(metadata.at("ics_prefix").get<std::string>());
      auto hosts = enumerate_hosts(capture, prefix);
      auto inside = std::count_if(hosts.begin(), hosts.end(), [](const HostEntry& h) { return h.in_ics; });
      return "CTF{hosts_" + std::to_string(inside) + "_" +
             std::to_string(hosts.size() - static_cast<std::size_t>(inside)) + "}";
    }
    case ChallengeKind::arp_interval: {
      auto interval = find_poisoning_interval(capture);
      if (!interval) return std::nullopt;
      return interval->flag();
    }
    case ChallengeKind::xor_cipher: {
      auto data = flow_payload(capture, FlowKey::parse(metadata.at("flow").get<std::string>()));
      if (data.empty()) return std::nullopt;
      if (metadata.value("mode", "single") == "prefix") {
        return decode_text(xor_decrypt(data, metadata.at("key_length").get<std::size_t>()));
      }
      return decode_text(brute_force(data).plaintext);
    }
    case ChallengeKind::composite: {
      auto prefix = net::Ipv4Prefix::parse(metadata.at("ics_prefix").get<std::string>());
      for (const auto& h : enumerate_hosts(capture, prefix)) {
        if (h.in_ics) continue;
        std::set<net::Ipv4Address> peers;
        for (const auto& rec : capture) {
          if (rec.frame.src_ip == h.ip && rec.frame.kind == net::FrameKind::data) {
            peers.insert(rec.frame.dst_ip);
          }
        }
        for (auto peer : peers) {
          auto data = flow_payload(capture, {h.ip, peer});
          if (auto flag = decode_text(brute_force(data).plaintext)) return flag;
        }
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace icsrange::forensics
