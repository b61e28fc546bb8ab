#include "takeover/ip.hpp"

#include <arpa/inet.h>

#include <cstring>

#include "takeover/rng.hpp"

namespace takeover {

namespace {

bool parse_bare(std::string_view text, IpAddress::Family& fam,
                std::array<std::uint8_t, 16>& bytes) {
  if (text.empty() || text.size() >= INET6_ADDRSTRLEN) return false;
  char buf[INET6_ADDRSTRLEN];
  std::memcpy(buf, text.data(), text.size());
  buf[text.size()] = '\0';
  bytes.fill(0);
  if (inet_pton(AF_INET, buf, bytes.data()) == 1) {
    fam = IpAddress::Family::V4;
    return true;
  }
  if (inet_pton(AF_INET6, buf, bytes.data()) == 1) {
    fam = IpAddress::Family::V6;
    return true;
  }
  return false;
}

}  // namespace

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
  std::string_view bare = text;
  if (!bare.empty() && bare.front() == '[') {
    const auto close = bare.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    const std::string_view rest = bare.substr(close + 1);
    if (!rest.empty() && rest.front() != ':') return std::nullopt;
    bare = bare.substr(1, close - 1);
  } else if (const auto colon = bare.find(':');
             colon != std::string_view::npos && bare.find(':', colon + 1) == std::string_view::npos) {
    // Exactly one colon: IPv4 with a port.
    bare = bare.substr(0, colon);
  }

  IpAddress ip;
  if (!parse_bare(bare, ip.family_, ip.bytes_)) return std::nullopt;
  if (ip.family_ == Family::V6) {
    static constexpr std::uint8_t kMapped[12] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0xff, 0xff};
    if (std::memcmp(ip.bytes_.data(), kMapped, 12) == 0) {
      std::memmove(ip.bytes_.data(), ip.bytes_.data() + 12, 4);
      std::memset(ip.bytes_.data() + 4, 0, 12);
      ip.family_ = Family::V4;
    }
  }
  return ip;
}

IpAddress IpAddress::v4(std::uint32_t host_order) {
  IpAddress ip;
  ip.bytes_[0] = static_cast<std::uint8_t>(host_order >> 24);
  ip.bytes_[1] = static_cast<std::uint8_t>(host_order >> 16);
  ip.bytes_[2] = static_cast<std::uint8_t>(host_order >> 8);
  ip.bytes_[3] = static_cast<std::uint8_t>(host_order);
  return ip;
}

std::uint32_t IpAddress::v4_value() const {
  return (std::uint32_t{bytes_[0]} << 24) | (std::uint32_t{bytes_[1]} << 16) |
         (std::uint32_t{bytes_[2]} << 8) | std::uint32_t{bytes_[3]};
}

IpAddress IpAddress::masked(int prefix_len) const {
  IpAddress out = *this;
  const int width = bit_width();
  for (int bit = prefix_len < 0 ? 0 : prefix_len; bit < width; ++bit) {
    out.bytes_[bit / 8] &= static_cast<std::uint8_t>(~(0x80u >> (bit % 8)));
  }
  return out;
}

std::string IpAddress::to_string() const {
  char buf[INET6_ADDRSTRLEN];
  inet_ntop(family_ == Family::V4 ? AF_INET : AF_INET6, bytes_.data(), buf, sizeof buf);
  return buf;
}

bool IpAddress::is_private_or_reserved() const {
  const auto& b = bytes_;
  if (family_ == Family::V4) {
    return b[0] == 10 || b[0] == 127 || b[0] == 0 || (b[0] == 172 && (b[1] & 0xf0) == 16) ||
           (b[0] == 192 && b[1] == 168) || (b[0] == 169 && b[1] == 254);
  }
  bool zero_prefix = true;
  for (int i = 0; i < 15; ++i) zero_prefix = zero_prefix && b[i] == 0;
  if (zero_prefix && (b[15] == 0 || b[15] == 1)) return true;  // :: and ::1
  if ((b[0] & 0xfe) == 0xfc) return true;                       // fc00::/7
  if (b[0] == 0xfe && (b[1] & 0xc0) == 0x80) return true;       // fe80::/10
  return false;
}

std::size_t IpAddressHash::operator()(const IpAddress& ip) const noexcept {
  std::uint64_t hi = 0, lo = 0;
  std::memcpy(&hi, ip.bytes().data(), 8);
  std::memcpy(&lo, ip.bytes().data() + 8, 8);
  return static_cast<std::size_t>(splitmix64(hi ^ splitmix64(lo)) ^
                                  static_cast<std::uint64_t>(ip.family()));
}

}  // namespace takeover
