// Capture analysis: host enumeration, poisoning interval, XOR recovery,
// and seeded challenge generation.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "icsrange/forensics/forensics.hpp"

using namespace icsrange;
using nlohmann::json;

int main(int argc, char** argv) {
  CLI::App app{"Forensics toolkit"};
  app.require_subcommand(1);

  std::string capture_path, prefix = "192.168.0.0/16";
  auto* hosts = app.add_subcommand("hosts", "Enumerate hosts and classify them against the ICS prefix");
  hosts->add_option("capture", capture_path)->required();
  hosts->add_option("--prefix", prefix, "ICS address range");

  auto* arp = app.add_subcommand("arp-interval", "Locate the ARP-poisoning episode");
  arp->add_option("capture", capture_path)->required();

  std::string flow;
  std::size_t key_length = 0;
  bool brute = false;
  auto* x = app.add_subcommand("xor", "Decrypt the payload of one flow");
  x->add_option("capture", capture_path)->required();
  x->add_option("--flow", flow, "<src-ip>-<dst-ip>")->required();
  x->add_option("--key-length", key_length, "Key bytes prefixed to the payload");
  x->add_flag("--brute", brute, "Try all single-byte keys");

  std::string kind, out, meta_out;
  std::uint64_t seed = 1;
  auto* gen = app.add_subcommand("generate", "Generate a challenge capture");
  gen->add_option("kind", kind, "hosts | arp-interval | xor | composite")->required();
  gen->add_option("--seed", seed);
  gen->add_option("--out", out, "Capture file")->required();
  gen->add_option("--meta", meta_out, "Metadata file (default <out>.meta.json)");

  std::string meta_in;
  auto* solve = app.add_subcommand("solve", "Solve a generated challenge");
  solve->add_option("kind", kind)->required();
  solve->add_option("capture", capture_path)->required();
  solve->add_option("--meta", meta_in, "Metadata file (default <capture>.meta.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (hosts->parsed()) {
      auto ics = net::Ipv4Prefix::parse(prefix);
      for (const auto& h : forensics::enumerate_hosts(net::read_capture(capture_path), ics)) {
        std::cout << h.ip.to_string() << ' ' << h.mac.to_string() << ' '
                  << (h.in_ics ? "inside" : "outside") << ' ' << h.frames << '\n';
      }
    } else if (arp->parsed()) {
      auto interval = forensics::find_poisoning_interval(net::read_capture(capture_path));
      if (!interval) {
        std::cout << "not found\n";
        return 1;
      }
      std::cout << interval->flag() << "  victim " << interval->victim.to_string()
                << " impersonated " << interval->impersonated.to_string() << ", "
                << interval->frames << " frames\n";
    } else if (x->parsed()) {
      auto data = forensics::flow_payload(net::read_capture(capture_path),
                                          forensics::FlowKey::parse(flow));
      if (data.empty()) throw std::runtime_error("flow carries no payload");
      net::Bytes plain;
      if (brute) {
        auto best = forensics::brute_force(data);
        std::cerr << "key 0x" << std::hex << int(best.key) << std::dec << " printable "
                  << best.ratio << '\n';
        plain = best.plaintext;
      } else if (key_length > 0) {
        plain = forensics::xor_decrypt(data, key_length);
      } else {
        throw std::runtime_error("give --key-length or --brute");
      }
      std::cout << std::string(plain.begin(), plain.end()) << '\n';
    } else if (gen->parsed()) {
      auto g = forensics::generate(forensics::parse_challenge_kind(kind), seed);
      net::write_capture(g.capture, out);
      json meta = g.metadata;
      meta["kind"] = kind;
      meta["seed"] = seed;
      std::ofstream(meta_out.empty() ? out + ".meta.json" : meta_out) << meta.dump(2) << '\n';
      std::cerr << g.capture.size() << " frames written\n";
    } else if (solve->parsed()) {
      std::ifstream in(meta_in.empty() ? capture_path + ".meta.json" : meta_in);
      json meta = in ? json::parse(in) : json::object();
      auto flag = forensics::solve(forensics::parse_challenge_kind(kind),
                                   net::read_capture(capture_path), meta);
      if (!flag) {
        std::cout << "not found\n";
        return 1;
      }
      std::cout << *flag << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "forensics: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
