#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace icsrange::net {

struct MacAddress {
  std::array<std::uint8_t, 6> bytes{};

  static MacAddress parse(std::string_view text);  // aa:bb:cc:dd:ee:ff
  static MacAddress broadcast();
  bool is_broadcast() const;
  std::string to_string() const;

  auto operator<=>(const MacAddress&) const = default;
};

struct Ipv4Address {
  std::uint32_t value = 0;

  static Ipv4Address parse(std::string_view text);
  std::string to_string() const;

  auto operator<=>(const Ipv4Address&) const = default;
};

struct Ipv4Prefix {
  Ipv4Address network;
  int length = 0;

  static Ipv4Prefix parse(std::string_view text);  // a.b.c.d/n
  bool contains(Ipv4Address ip) const;
  std::string to_string() const;

  bool operator==(const Ipv4Prefix&) const = default;
};

}  // namespace icsrange::net
