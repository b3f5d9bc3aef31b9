#include "icsrange/net/frame.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace icsrange::net {

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {"ARP_REQ", "ARP_REP", "SYN", "SYNACK",
                                                        "ACK",     "DATA",    "FIN"};
constexpr std::array<std::string_view, 4> kDispositionNames = {"DELIVERED", "DROPPED_MITM",
                                                               "DROPPED_DOS", "UNROUTABLE"};

void put_u16(Bytes& out, std::size_t v) {
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

}  // namespace

std::string_view to_string(FrameKind k) { return kKindNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(Disposition d) {
  return kDispositionNames[static_cast<std::size_t>(d)];
}

FrameKind parse_frame_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<FrameKind>(i);
  }
  throw std::invalid_argument("unknown frame kind '" + std::string(s) + "'");
}

Disposition parse_disposition(std::string_view s) {
  for (std::size_t i = 0; i < kDispositionNames.size(); ++i) {
    if (kDispositionNames[i] == s) return static_cast<Disposition>(i);
  }
  throw std::invalid_argument("unknown disposition '" + std::string(s) + "'");
}

Bytes encode(const TagRequest& r) {
  if (r.name.size() > 0xff) throw std::length_error("tag name longer than 255 bytes");
  if (r.value.size() > 0xffff) throw std::length_error("tag value longer than 65535 bytes");
  Bytes out;
  out.reserve(4 + r.name.size() + r.value.size());
  out.push_back(static_cast<std::uint8_t>(r.op));
  out.push_back(static_cast<std::uint8_t>(r.name.size()));
  out.insert(out.end(), r.name.begin(), r.name.end());
  put_u16(out, r.value.size());
  out.insert(out.end(), r.value.begin(), r.value.end());
  return out;
}

Bytes encode(const TagResponse& r) {
  if (r.value.size() > 0xffff) throw std::length_error("tag value longer than 65535 bytes");
  Bytes out;
  out.reserve(4 + r.value.size());
  out.push_back(static_cast<std::uint8_t>(0x80 | static_cast<std::uint8_t>(r.op)));
  out.push_back(static_cast<std::uint8_t>(r.status));
  put_u16(out, r.value.size());
  out.insert(out.end(), r.value.begin(), r.value.end());
  return out;
}

std::optional<TagRequest> decode_request(std::span<const std::uint8_t> p) {
  if (p.size() < 4 || (p[0] != 0x01 && p[0] != 0x02)) return std::nullopt;
  std::size_t name_len = p[1];
  if (p.size() < 2 + name_len + 2) return std::nullopt;
  std::size_t vpos = 2 + name_len;
  std::size_t value_len = (std::size_t{p[vpos]} << 8) | p[vpos + 1];
  if (p.size() != vpos + 2 + value_len) return std::nullopt;
  TagRequest r;
  r.op = static_cast<TagOp>(p[0]);
  r.name.assign(p.begin() + 2, p.begin() + 2 + name_len);
  r.value.assign(p.begin() + vpos + 2, p.end());
  return r;
}

std::optional<TagResponse> decode_response(std::span<const std::uint8_t> p) {
  if (p.size() < 4 || (p[0] != 0x81 && p[0] != 0x82) || p[1] > 3) return std::nullopt;
  std::size_t value_len = (std::size_t{p[2]} << 8) | p[3];
  if (p.size() != 4 + value_len) return std::nullopt;
  TagResponse r;
  r.op = static_cast<TagOp>(p[0] & 0x7f);
  r.status = static_cast<TagStatus>(p[1]);
  r.value.assign(p.begin() + 4, p.end());
  return r;
}

std::optional<TagMessage> decode_tag_message(std::span<const std::uint8_t> payload) {
  if (auto r = decode_request(payload)) return TagMessage{*r};
  if (auto r = decode_response(payload)) return TagMessage{*r};
  return std::nullopt;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto [p, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, out[i], 16);
    if (ec != std::errc() || p != hex.data() + 2 * i + 2) {
      throw std::invalid_argument("invalid hex digit at offset " + std::to_string(2 * i));
    }
  }
  return out;
}

CaptureParseError::CaptureParseError(std::size_t line, std::size_t field, const std::string& message)
    : std::runtime_error("capture line " + std::to_string(line) + ", field " +
                         std::to_string(field) + ": " + message),
      line_(line),
      field_(field) {}

std::string format_capture_line(const CaptureRecord& r) {
  const Frame& f = r.frame;
  char ts[64];
  auto [end, ec] = std::to_chars(ts, ts + sizeof(ts), f.ts);
  std::string out(ts, end);
  out += ',';
  out += f.link;
  out += ',';
  out += f.src_mac.to_string();
  out += ',';
  out += f.dst_mac.to_string();
  out += ',';
  out += f.src_ip.to_string();
  out += ',';
  out += f.dst_ip.to_string();
  out += ',';
  out += to_string(f.kind);
  out += ',';
  out += std::to_string(f.seq);
  out += ',';
  out += std::to_string(f.ack);
  out += ',';
  out += to_string(r.disposition);
  out += ',';
  out += to_hex(f.payload);
  return out;
}

CaptureRecord parse_capture_line(std::string_view line, std::size_t line_no) {
  std::array<std::string_view, 11> fields;
  std::size_t n = 0;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (n == fields.size()) throw CaptureParseError(line_no, n + 1, "too many fields");
    fields[n++] = line.substr(start, comma == std::string_view::npos ? comma : comma - start);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (n != fields.size()) {
    throw CaptureParseError(line_no, n, "expected 11 fields, found " + std::to_string(n));
  }

  std::size_t field = 0;
  try {
    CaptureRecord r;
    Frame& f = r.frame;
    auto number = [&](std::string_view s, auto& out) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
        throw std::invalid_argument("bad number '" + std::string(s) + "'");
      }
    };
    field = 1;
    number(fields[0], f.ts);
    field = 2;
    if (fields[1].empty()) throw std::invalid_argument("empty link");
    f.link = std::string(fields[1]);
    field = 3;
    f.src_mac = MacAddress::parse(fields[2]);
    field = 4;
    f.dst_mac = MacAddress::parse(fields[3]);
    field = 5;
    f.src_ip = Ipv4Address::parse(fields[4]);
    field = 6;
    f.dst_ip = Ipv4Address::parse(fields[5]);
    field = 7;
    f.kind = parse_frame_kind(fields[6]);
    field = 8;
    number(fields[7], f.seq);
    field = 9;
    number(fields[8], f.ack);
    field = 10;
    r.disposition = parse_disposition(fields[9]);
    field = 11;
    f.payload = from_hex(fields[10]);
    return r;
  } catch (const std::invalid_argument& e) {
    throw CaptureParseError(line_no, field, e.what());
  }
}

void write_capture(const std::vector<CaptureRecord>& log, std::ostream& out) {
  for (const auto& r : log) out << format_capture_line(r) << '\n';
}

void write_capture(const std::vector<CaptureRecord>& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open capture for writing: " + path);
  write_capture(log, out);
  if (!out) throw std::runtime_error("failed writing capture: " + path);
}

std::vector<CaptureRecord> read_capture(std::istream& in) {
  std::vector<CaptureRecord> log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    log.push_back(parse_capture_line(line, line_no));
  }
  return log;
}

std::vector<CaptureRecord> read_capture(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open capture: " + path);
  return read_capture(in);
}

}  // namespace icsrange::net
