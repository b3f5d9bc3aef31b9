#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "icsrange/net/network.hpp"

using namespace icsrange::net;

namespace {

struct Lab {
  Topology topo = default_topology();
  Network net{topo};
  Lab() {
    net.announce_all();
    net.run_until(0.01);
    for (const auto& h : topo.hosts) {
      net.set_tag_handler(h.id, [](const TagRequest& r, Ipv4Address, double) {
        return TagResponse{r.op, TagStatus::ok, r.op == TagOp::read ? "echo:" + r.name : r.value};
      });
    }
  }
  const HostConfig& h(const std::string& id) { return topo.host(id); }
  std::size_t delivered_to(const std::string& id, std::size_t from = 0) {
    std::size_t n = 0;
    const auto& cap = net.capture();
    for (std::size_t i = from; i < cap.size(); ++i) {
      if (cap[i].frame.dst_mac == h(id).mac && cap[i].disposition == Disposition::delivered) ++n;
    }
    return n;
  }
};

Frame forged_reply(const HostConfig& victim, const HostConfig& claimed, const HostConfig& attacker) {
  Frame f;
  f.kind = FrameKind::arp_rep;
  f.src_mac = attacker.mac;
  f.dst_mac = victim.mac;
  f.src_ip = claimed.ip;
  f.dst_ip = victim.ip;
  return f;
}

}  // namespace

TEST(Address, ParseAndFormat) {
  EXPECT_EQ(MacAddress::parse("02:00:00:00:01:10").to_string(), "02:00:00:00:01:10");
  EXPECT_TRUE(MacAddress::broadcast().is_broadcast());
  EXPECT_EQ(Ipv4Address::parse("192.168.1.10").to_string(), "192.168.1.10");
  auto p = Ipv4Prefix::parse("192.168.0.0/16");
  EXPECT_TRUE(p.contains(Ipv4Address::parse("192.168.5.5")));
  EXPECT_FALSE(p.contains(Ipv4Address::parse("10.0.0.1")));
  EXPECT_THROW(Ipv4Address::parse("300.1.1.1"), std::invalid_argument);
  EXPECT_THROW(MacAddress::parse("zz:00:00:00:00:00"), std::invalid_argument);
}

TEST(Topology, DefaultShapeAndJsonRoundTrip) {
  auto t = default_topology();
  EXPECT_EQ(t.segments.size(), 7u);
  EXPECT_NE(t.interface_of("PLC1", "L0-1"), nullptr);
  EXPECT_NE(t.interface_of("PLC1", "L1"), nullptr);
  EXPECT_EQ(t.interface_of("RIO1", "L1"), nullptr);
  EXPECT_EQ(parse_topology(dump_topology(t)), t);
}

TEST(Network, DataReachesDestinationAndTap) {
  Lab lab;
  std::vector<Frame> seen;
  lab.net.add_tap("L1", [&](const Frame& f) { seen.push_back(f); });
  auto flow = lab.net.handshake_open("HMI@L1", lab.h("PLC1@L1").ip);
  ASSERT_TRUE(flow);
  auto r = lab.net.tag_request(*flow, {TagOp::read, "LIT101", ""});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->value, "echo:LIT101");
  bool tapped = false;
  for (const auto& f : seen) tapped |= f.kind == FrameKind::data && f.dst_mac == lab.h("PLC1@L1").mac;
  EXPECT_TRUE(tapped);
}

TEST(Network, HandshakeIsThreeFrames) {
  Lab lab;
  const auto before = lab.net.capture().size();
  ASSERT_TRUE(lab.net.handshake_open("HMI@L1", lab.h("PLC1@L1").ip));
  lab.net.run_until(lab.net.now() + 0.01);
  const auto& cap = lab.net.capture();
  ASSERT_EQ(cap.size() - before, 3u);
  EXPECT_EQ(cap[before].frame.kind, FrameKind::syn);
  EXPECT_EQ(cap[before + 1].frame.kind, FrameKind::synack);
  EXPECT_EQ(cap[before + 2].frame.kind, FrameKind::ack);
}

TEST(Network, PoisonedEntryDivertsToAttacker) {
  Lab lab;
  const auto& plc = lab.h("PLC1@L1");
  const auto& hmi = lab.h("HMI@L1");
  const auto& att = lab.h("ATTACKER@L1");
  lab.net.set_forwarding("ATTACKER@L1", false);
  lab.net.inject("ATTACKER@L1", forged_reply(plc, hmi, att));
  lab.net.run_until(lab.net.now() + 0.01);
  EXPECT_EQ(lab.net.arp_lookup("PLC1@L1", hmi.ip), att.mac);
  const auto mark = lab.net.capture().size();
  Frame f;
  f.kind = FrameKind::data;
  f.src_mac = plc.mac;
  f.dst_mac = *lab.net.arp_lookup("PLC1@L1", hmi.ip);
  f.src_ip = plc.ip;
  f.dst_ip = hmi.ip;
  f.payload = {1, 2, 3};
  lab.net.inject("PLC1@L1", f);
  lab.net.run_until(lab.net.now() + 0.01);
  EXPECT_EQ(lab.delivered_to("ATTACKER@L1", mark), 1u);
  EXPECT_EQ(lab.delivered_to("HMI@L1", mark), 0u);
  ASSERT_EQ(lab.net.transcript("ATTACKER@L1").size(), 1u);
}

TEST(Network, ForwardingAttackerRelaysToGenuineHost) {
  Lab lab;
  const auto& plc = lab.h("PLC1@L1");
  const auto& hmi = lab.h("HMI@L1");
  const auto& att = lab.h("ATTACKER@L1");
  lab.net.set_forwarding("ATTACKER@L1", true);
  lab.net.resolve("ATTACKER@L1", hmi.ip);
  lab.net.inject("ATTACKER@L1", forged_reply(plc, hmi, att));
  lab.net.run_until(lab.net.now() + 0.01);
  auto flow = lab.net.handshake_open("PLC1@L1", hmi.ip);
  ASSERT_TRUE(flow);
  auto r = lab.net.tag_request(*flow, {TagOp::write, "X", "5"});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->value, "5");
}

TEST(Network, DropHookSilencesPair) {
  Lab lab;
  const auto& hmi = lab.h("HMI@L1");
  const auto& plc3 = lab.h("PLC3@L1");
  lab.net.add_hook({"L1",
                    [&](const Frame& f) {
                      return (f.src_ip == hmi.ip && f.dst_ip == plc3.ip) ||
                             (f.src_ip == plc3.ip && f.dst_ip == hmi.ip);
                    },
                    HookAction::drop, nullptr, "drop"});
  const auto mark = lab.net.capture().size();
  EXPECT_FALSE(lab.net.handshake_open("HMI@L1", plc3.ip));
  EXPECT_EQ(lab.delivered_to("PLC3@L1", mark), 0u);
  bool dropped = false;
  for (std::size_t i = mark; i < lab.net.capture().size(); ++i) {
    dropped |= lab.net.capture()[i].disposition == Disposition::dropped_mitm;
  }
  EXPECT_TRUE(dropped);
  lab.net.clear_hooks();
  EXPECT_TRUE(lab.net.handshake_open("HMI@L1", plc3.ip));
}

TEST(Network, ModifyHookAltersClientView) {
  Lab lab;
  const auto& plc = lab.h("PLC2@L1");
  lab.net.add_hook({"L1", [&](const Frame& f) { return f.src_ip == plc.ip && f.kind == FrameKind::data; },
                    HookAction::modify,
                    [](Frame& f) {
                      auto r = decode_response(f.payload);
                      if (!r) return;
                      for (auto& c : r->value) c = static_cast<char>(c ^ 0x20);
                      f.payload = encode(*r);
                    },
                    "xor"});
  auto flow = lab.net.handshake_open("HMI@L1", plc.ip);
  ASSERT_TRUE(flow);
  auto r = lab.net.tag_request(*flow, {TagOp::read, "ab", ""});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->value, std::string("ECHO\x1a" "AB"));
}

TEST(Network, HalfOpenExhaustionBlocksUntilTimeout) {
  Topology topo = default_topology();
  NetParams params;
  params.half_open_capacity = 8;
  params.half_open_timeout = 1.0;
  Network net(topo, params);
  net.set_tag_handler("PLC1@L1", [](const TagRequest& r, Ipv4Address, double) {
    return TagResponse{r.op, TagStatus::ok, ""};
  });
  net.announce_all();
  net.run_until(0.01);
  const auto& att = topo.host("ATTACKER@L1");
  const auto& plc = topo.host("PLC1@L1");
  for (int i = 0; i < 8; ++i) {
    Frame syn;
    syn.kind = FrameKind::syn;
    syn.src_mac = att.mac;
    syn.dst_mac = plc.mac;
    syn.src_ip = att.ip;
    syn.dst_ip = plc.ip;
    syn.seq = 1000u + static_cast<std::uint32_t>(i);
    net.inject("ATTACKER@L1", syn);
  }
  net.run_until(0.05);
  EXPECT_EQ(net.half_open_count("PLC1@L1"), 8u);
  EXPECT_FALSE(net.handshake_open("HMI@L1", plc.ip));
  net.run_until(1.2);
  EXPECT_TRUE(net.handshake_open("HMI@L1", plc.ip));
}

TEST(Network, UnknownSegmentIsUnroutable) {
  Lab lab;
  Frame f;
  f.link = "L9";
  lab.net.inject("HMI@L1", f);
  lab.net.run_until(lab.net.now() + 0.01);
  EXPECT_EQ(lab.net.capture().back().disposition, Disposition::unroutable);
  EXPECT_FALSE(lab.net.faults().empty());
}

TEST(TagCodec, RoundTripAndRejectsGarbage) {
  TagRequest w{TagOp::write, "HB", "3"};
  auto back = decode_request(encode(w));
  ASSERT_TRUE(back);
  EXPECT_EQ(*back, w);
  TagResponse r{TagOp::read, TagStatus::read_only, "x"};
  EXPECT_EQ(*decode_response(encode(r)), r);
  EXPECT_FALSE(decode_tag_message(Bytes{0x01}));
  auto extra = encode(w);
  extra.push_back(0);
  EXPECT_FALSE(decode_tag_message(extra));
  EXPECT_EQ(from_hex(to_hex(Bytes{0, 0xff, 0x10})), (Bytes{0, 0xff, 0x10}));
  EXPECT_THROW(from_hex("abc"), std::invalid_argument);
}

TEST(Capture, EmptyLogRoundTrips) {
  std::stringstream ss;
  write_capture({}, ss);
  EXPECT_TRUE(ss.str().empty());
  EXPECT_TRUE(read_capture(ss).empty());
}

TEST(Capture, HandshakeRoundTripsFieldForField) {
  Lab lab;
  const auto before = lab.net.capture().size();
  ASSERT_TRUE(lab.net.handshake_open("HMI@L1", lab.h("PLC1@L1").ip));
  lab.net.run_until(lab.net.now() + 0.01);
  std::vector<CaptureRecord> three(lab.net.capture().begin() + static_cast<long>(before),
                                   lab.net.capture().end());
  std::stringstream ss;
  write_capture(three, ss);
  EXPECT_EQ(read_capture(ss), three);
}

TEST(Capture, LargeLogRoundTripsWithEqualHash) {
  std::mt19937_64 rng(5);
  std::vector<CaptureRecord> log;
  log.reserve(100000);
  const auto topo = default_topology();
  for (int i = 0; i < 100000; ++i) {
    const auto& a = topo.hosts[rng() % topo.hosts.size()];
    const auto& b = topo.hosts[rng() % topo.hosts.size()];
    CaptureRecord r;
    r.frame.ts = static_cast<double>(i) * 0.001 + static_cast<double>(rng() % 1000) * 1e-7;
    r.frame.link = a.segment;
    r.frame.src_mac = a.mac;
    r.frame.dst_mac = b.mac;
    r.frame.src_ip = a.ip;
    r.frame.dst_ip = b.ip;
    r.frame.kind = static_cast<FrameKind>(rng() % 7);
    r.frame.seq = static_cast<std::uint32_t>(rng());
    r.frame.ack = static_cast<std::uint32_t>(rng());
    r.frame.payload.resize(rng() % 24);
    for (auto& x : r.frame.payload) x = static_cast<std::uint8_t>(rng());
    r.disposition = static_cast<Disposition>(rng() % 4);
    log.push_back(std::move(r));
  }
  std::stringstream first;
  write_capture(log, first);
  auto back = read_capture(first);
  ASSERT_EQ(back.size(), log.size());
  EXPECT_TRUE(back == log);
  std::stringstream second;
  write_capture(back, second);
  EXPECT_EQ(std::hash<std::string>{}(first.str()), std::hash<std::string>{}(second.str()));
}

TEST(Capture, ParseErrorsCarryPosition) {
  try {
    parse_capture_line("0.1,L1,02:00:00:00:01:10,bad,1.2.3.4,1.2.3.5,data,0,0,delivered,", 7);
    FAIL();
  } catch (const CaptureParseError& e) {
    EXPECT_EQ(e.line(), 7u);
    EXPECT_EQ(e.field(), 4u);
  }
  EXPECT_THROW(parse_capture_line("1,2,3", 1), CaptureParseError);
}
