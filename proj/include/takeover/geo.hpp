#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "takeover/audit.hpp"
#include "takeover/ip.hpp"

namespace takeover {

struct GeoInfo {
  std::string country;                     // ISO-3166-1 alpha-2
  std::optional<std::string> subdivision;  // ISO-3166-2, prefixed by country
  std::optional<std::string> isp;
  bool is_tor = false;

  friend bool operator==(const GeoInfo&, const GeoInfo&) = default;
};

enum class NotFoundReason { Private, Unmapped, NoIp, InvalidIp };

std::string_view to_string(NotFoundReason r);

struct NotFound {
  NotFoundReason reason;
  friend bool operator==(const NotFound&, const NotFound&) = default;
};

using GeoLookup = std::variant<GeoInfo, NotFound>;

inline const GeoInfo* resolved(const GeoLookup& g) { return std::get_if<GeoInfo>(&g); }

struct Cidr {
  IpAddress network;
  int prefix_len = 0;

  /// "a.b.c.d/n" or "v6/n"; a bare address is a host route. Host bits are
  /// cleared.
  static std::optional<Cidr> parse(std::string_view text);
  bool contains(const IpAddress& ip) const;
  std::string to_string() const;
};

/// Offline IP geolocation: longest-prefix match over CIDR entries plus a
/// separate Tor exit list. Immutable once loaded; lookups are const.
class GeoTable {
 public:
  struct Entry {
    Cidr prefix;
    GeoInfo info;
  };

  /// Throws InputError on a duplicate prefix or a subdivision that does not
  /// start with "<country>-".
  void add(const Cidr& prefix, GeoInfo info);
  void add_tor_exit(const IpAddress& ip) { tor_exits_.insert(ip); }

  GeoLookup resolve(const IpAddress& ip) const;
  GeoLookup resolve(std::string_view ip_literal) const;
  bool is_tor(const IpAddress& ip) const { return tor_exits_.count(ip) != 0; }
  bool is_tor(std::string_view ip_literal) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t tor_exit_count() const { return tor_exits_.size(); }

 private:
  struct FamilyIndex {
    // Keyed by prefix length, longest first.
    std::map<int, std::unordered_map<IpAddress, std::size_t, IpAddressHash>, std::greater<>>
        by_length;
  };

  const Entry* longest_match(const IpAddress& ip) const;

  std::vector<Entry> entries_;
  FamilyIndex v4_;
  FamilyIndex v6_;
  std::unordered_set<IpAddress, IpAddressHash> tor_exits_;
};

/// CSV with header cidr,country,subdivision,isp (subdivision/isp may be empty).
GeoTable load_geo_table(std::istream& in, std::string_view source);

/// One IP per line; '#' starts a comment. Adds to `table`.
void load_tor_list(std::istream& in, GeoTable& table, std::string_view source);

/// Element i is the lookup for events[i]; non-login events map to
/// NotFound{NoIp}.
std::vector<GeoLookup> enrich(std::span<const AuditEvent> events, const GeoTable& table);

}  // namespace takeover
