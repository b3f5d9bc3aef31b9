#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "icsrange/net/address.hpp"

namespace icsrange::net {

enum class FrameKind { arp_req, arp_rep, syn, synack, ack, data, fin };
enum class Disposition { delivered, dropped_mitm, dropped_dos, unroutable };

std::string_view to_string(FrameKind k);
std::string_view to_string(Disposition d);
FrameKind parse_frame_kind(std::string_view s);
Disposition parse_disposition(std::string_view s);

using Bytes = std::vector<std::uint8_t>;

struct Frame {
  double ts = 0.0;  // send time
  std::string link;
  MacAddress src_mac;
  MacAddress dst_mac;
  Ipv4Address src_ip;
  Ipv4Address dst_ip;
  FrameKind kind = FrameKind::data;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

struct CaptureRecord {
  Frame frame;
  Disposition disposition = Disposition::delivered;

  bool operator==(const CaptureRecord&) const = default;
};

// Tag protocol carried in DATA payloads.
//   request:  op(1: 0x01 read, 0x02 write) | name_len(1) | name | value_len(2, BE) | value
//   response: 0x81/0x82 | status(1) | value_len(2, BE) | value

enum class TagOp : std::uint8_t { read = 0x01, write = 0x02 };
enum class TagStatus : std::uint8_t { ok = 0, unknown_tag = 1, read_only = 2, malformed = 3 };

struct TagRequest {
  TagOp op = TagOp::read;
  std::string name;
  std::string value;

  bool operator==(const TagRequest&) const = default;
};

struct TagResponse {
  TagOp op = TagOp::read;
  TagStatus status = TagStatus::ok;
  std::string value;

  bool operator==(const TagResponse&) const = default;
};

using TagMessage = std::variant<TagRequest, TagResponse>;

Bytes encode(const TagRequest& r);
Bytes encode(const TagResponse& r);
/// Returns nullopt for anything that is not exactly one well-formed message.
std::optional<TagMessage> decode_tag_message(std::span<const std::uint8_t> payload);
std::optional<TagRequest> decode_request(std::span<const std::uint8_t> payload);
std::optional<TagResponse> decode_response(std::span<const std::uint8_t> payload);

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);  // throws std::invalid_argument

// Capture file: one frame per line,
//   ts,link,src_mac,dst_mac,src_ip,dst_ip,kind,seq,ack,disposition,payload_hex

class CaptureParseError : public std::runtime_error {
 public:
  CaptureParseError(std::size_t line, std::size_t field, const std::string& message);
  std::size_t line() const { return line_; }
  std::size_t field() const { return field_; }

 private:
  std::size_t line_;
  std::size_t field_;
};

std::string format_capture_line(const CaptureRecord& r);
CaptureRecord parse_capture_line(std::string_view line, std::size_t line_no = 1);

void write_capture(const std::vector<CaptureRecord>& log, std::ostream& out);
void write_capture(const std::vector<CaptureRecord>& log, const std::string& path);
std::vector<CaptureRecord> read_capture(std::istream& in);
std::vector<CaptureRecord> read_capture(const std::string& path);

}  // namespace icsrange::net
