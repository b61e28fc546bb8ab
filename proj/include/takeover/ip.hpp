#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace takeover {

/// An IPv4 or IPv6 address. IPv4-mapped IPv6 literals (::ffff:a.b.c.d) are
/// folded to IPv4.
class IpAddress {
 public:
  enum class Family : std::uint8_t { V4, V6 };

  /// Accepts a bare literal, "a.b.c.d:port", or "[v6]:port".
  static std::optional<IpAddress> parse(std::string_view text);

  static IpAddress v4(std::uint32_t host_order);

  Family family() const { return family_; }
  int bit_width() const { return family_ == Family::V4 ? 32 : 128; }

  /// Network-order bytes; IPv4 uses the first four.
  const std::array<std::uint8_t, 16>& bytes() const { return bytes_; }

  std::uint32_t v4_value() const;

  /// Copy with every bit past `prefix_len` cleared.
  IpAddress masked(int prefix_len) const;

  /// Canonical text form (inet_ntop).
  std::string to_string() const;

  /// Loopback, RFC1918, link-local, unspecified, and the IPv6 equivalents.
  bool is_private_or_reserved() const;

  friend auto operator<=>(const IpAddress&, const IpAddress&) = default;

 private:
  std::array<std::uint8_t, 16> bytes_{};
  Family family_ = Family::V4;
};

struct IpAddressHash {
  std::size_t operator()(const IpAddress& ip) const noexcept;
};

}  // namespace takeover
