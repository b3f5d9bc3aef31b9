#include "icsrange/net/address.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace icsrange::net {

namespace {

[[noreturn]] void bad(std::string_view what, std::string_view text) {
  throw std::invalid_argument("malformed " + std::string(what) + " '" + std::string(text) + "'");
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::uint32_t prefix_mask(int length) {
  return length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
}

}  // namespace

MacAddress MacAddress::parse(std::string_view text) {
  if (text.size() != 17) bad("MAC address", text);
  MacAddress m;
  for (std::size_t i = 0; i < 6; ++i) {
    std::size_t p = i * 3;
    int hi = hex_digit(text[p]);
    int lo = hex_digit(text[p + 1]);
    if (hi < 0 || lo < 0 || (i < 5 && text[p + 2] != ':')) bad("MAC address", text);
    m.bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return m;
}

MacAddress MacAddress::broadcast() {
  MacAddress m;
  m.bytes.fill(0xff);
  return m;
}

bool MacAddress::is_broadcast() const { return *this == broadcast(); }

std::string MacAddress::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x", bytes[0], bytes[1], bytes[2],
                bytes[3], bytes[4], bytes[5]);
  return buf;
}

Ipv4Address Ipv4Address::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned part = 0;
    auto [next, ec] = std::from_chars(p, end, part);
    if (ec != std::errc() || next == p || part > 255 || next - p > 3) bad("IPv4 address", text);
    value = (value << 8) | part;
    p = next;
    if (octet < 3) {
      if (p == end || *p != '.') bad("IPv4 address", text);
      ++p;
    }
  }
  if (p != end) bad("IPv4 address", text);
  return Ipv4Address{value};
}

std::string Ipv4Address::to_string() const {
  return std::to_string(value >> 24) + "." + std::to_string((value >> 16) & 0xff) + "." +
         std::to_string((value >> 8) & 0xff) + "." + std::to_string(value & 0xff);
}

Ipv4Prefix Ipv4Prefix::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) bad("IPv4 prefix", text);
  Ipv4Prefix p;
  p.network = Ipv4Address::parse(text.substr(0, slash));
  auto len = text.substr(slash + 1);
  auto [next, ec] = std::from_chars(len.data(), len.data() + len.size(), p.length);
  if (ec != std::errc() || next != len.data() + len.size() || p.length < 0 || p.length > 32) {
    bad("IPv4 prefix", text);
  }
  p.network.value &= prefix_mask(p.length);
  return p;
}

bool Ipv4Prefix::contains(Ipv4Address ip) const {
  return (ip.value & prefix_mask(length)) == network.value;
}

std::string Ipv4Prefix::to_string() const {
  return network.to_string() + "/" + std::to_string(length);
}

}  // namespace icsrange::net
