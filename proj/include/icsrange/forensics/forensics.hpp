#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icsrange/net/address.hpp"
#include "icsrange/net/frame.hpp"

namespace icsrange::forensics {

using Capture = std::vector<net::CaptureRecord>;

struct HostEntry {
  net::Ipv4Address ip;
  net::MacAddress mac;
  bool in_ics = false;
  std::size_t frames = 0;
  double first_seen = 0.0;
};

/// Distinct (source ip, source mac) pairs, ordered by ip then mac.
std::vector<HostEntry> enumerate_hosts(const Capture& capture, const net::Ipv4Prefix& ics);

struct PoisonInterval {
  net::Ipv4Address victim;
  net::Ipv4Address impersonated;
  std::uint32_t start = 0;
  std::uint32_t end = 0;
  std::size_t frames = 0;
  std::string flag() const;  // ascflag{start-end}
};

/// DATA frames sent by their genuine owner to a MAC that differs from the
/// first binding announced for the destination IP. Bindings are learned per
/// segment. The interval spans the victim flow of the first such frame.
std::optional<PoisonInterval> find_poisoning_interval(const Capture& capture);

double printable_ratio(std::span<const std::uint8_t> bytes);
net::Bytes xor_bytes(std::span<const std::uint8_t> data, std::span<const std::uint8_t> key);
/// Key-prefixed payload: the first `key_length` bytes are the key.
net::Bytes xor_decrypt(std::span<const std::uint8_t> payload, std::size_t key_length);

struct KeyCandidate {
  std::uint8_t key = 0;
  double ratio = 0.0;
  net::Bytes plaintext;
};

/// All 256 single-byte keys, best printable ratio first, ties by lowest key.
std::vector<KeyCandidate> rank_single_byte(std::span<const std::uint8_t> ciphertext);
KeyCandidate brute_force(std::span<const std::uint8_t> ciphertext);

/// Flow id `<src-ip>-<dst-ip>`.
struct FlowKey {
  net::Ipv4Address src;
  net::Ipv4Address dst;
  static FlowKey parse(std::string_view text);
  std::string to_string() const;
};

/// DATA payloads of one direction, one copy per sequence number, in
/// sequence order.
net::Bytes flow_payload(const Capture& capture, const FlowKey& flow);

/// First `CTF{...}` or `ascflag{...}` token in text.
std::optional<std::string> extract_flag(std::string_view text);

enum class ChallengeKind { hosts, arp_interval, xor_cipher, composite };
std::string_view to_string(ChallengeKind k);
ChallengeKind parse_challenge_kind(std::string_view s);

struct GeneratedChallenge {
  ChallengeKind kind = ChallengeKind::hosts;
  std::uint64_t seed = 0;
  Capture capture;
  std::string flag;
  nlohmann::json metadata;
};

/// Seeded challenge built from a short range run plus planted traffic.
GeneratedChallenge generate(ChallengeKind kind, std::uint64_t seed);

/// Solver for a generated challenge; reads only the capture and metadata.
std::optional<std::string> solve(ChallengeKind kind, const Capture& capture,
                                 const nlohmann::json& metadata);

}  // namespace icsrange::forensics
