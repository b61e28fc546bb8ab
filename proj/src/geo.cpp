#include "takeover/geo.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "takeover/csv.hpp"

namespace takeover {

std::string_view to_string(NotFoundReason r) {
  switch (r) {
    case NotFoundReason::Private: return "private";
    case NotFoundReason::Unmapped: return "unmapped";
    case NotFoundReason::NoIp: return "no_ip";
    case NotFoundReason::InvalidIp: return "invalid_ip";
  }
  return "unknown";
}

std::optional<Cidr> Cidr::parse(std::string_view text) {
  text = trim(text);
  const auto slash = text.find('/');
  const auto ip = IpAddress::parse(text.substr(0, slash));
  if (!ip) return std::nullopt;
  int len = ip->bit_width();
  if (slash != std::string_view::npos) {
    const auto digits = text.substr(slash + 1);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), len);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || len < 0 ||
        len > ip->bit_width()) {
      return std::nullopt;
    }
  }
  return Cidr{ip->masked(len), len};
}

bool Cidr::contains(const IpAddress& ip) const {
  return ip.family() == network.family() && ip.masked(prefix_len) == network;
}

std::string Cidr::to_string() const {
  return network.to_string() + "/" + std::to_string(prefix_len);
}

void GeoTable::add(const Cidr& prefix, GeoInfo info) {
  if (info.subdivision && info.subdivision->rfind(info.country + "-", 0) != 0) {
    throw InputError("subdivision '" + *info.subdivision + "' is not under country '" +
                     info.country + "'");
  }
  auto& index = prefix.network.family() == IpAddress::Family::V4 ? v4_ : v6_;
  auto& bucket = index.by_length[prefix.prefix_len];
  if (!bucket.emplace(prefix.network, entries_.size()).second) {
    throw InputError("duplicate prefix " + prefix.to_string());
  }
  info.is_tor = false;
  entries_.push_back({prefix, std::move(info)});
}

const GeoTable::Entry* GeoTable::longest_match(const IpAddress& ip) const {
  const auto& index = ip.family() == IpAddress::Family::V4 ? v4_ : v6_;
  for (const auto& [len, bucket] : index.by_length) {
    const auto it = bucket.find(ip.masked(len));
    if (it != bucket.end()) return &entries_[it->second];
  }
  return nullptr;
}

GeoLookup GeoTable::resolve(const IpAddress& ip) const {
  if (ip.is_private_or_reserved()) return NotFound{NotFoundReason::Private};
  const Entry* hit = longest_match(ip);
  if (!hit) return NotFound{NotFoundReason::Unmapped};
  GeoInfo info = hit->info;
  info.is_tor = is_tor(ip);
  return info;
}

GeoLookup GeoTable::resolve(std::string_view ip_literal) const {
  const auto ip = IpAddress::parse(ip_literal);
  if (!ip) return NotFound{NotFoundReason::InvalidIp};
  return resolve(*ip);
}

bool GeoTable::is_tor(std::string_view ip_literal) const {
  const auto ip = IpAddress::parse(ip_literal);
  return ip && is_tor(*ip);
}

namespace {

bool valid_country(std::string_view c) {
  return c.size() == 2 && std::isupper(static_cast<unsigned char>(c[0])) &&
         std::isupper(static_cast<unsigned char>(c[1]));
}

}  // namespace

GeoTable load_geo_table(std::istream& in, std::string_view source) {
  CsvReader csv(in);
  csv.expect_header({"cidr", "country", "subdivision", "isp"}, source);
  GeoTable table;
  std::vector<std::string> row;
  while (csv.next(row)) {
    const std::string where = std::string(source) + ":" + std::to_string(csv.line()) + ": ";
    if (row.size() < 4) throw InputError(where + "expected 4 columns");
    const auto cidr = Cidr::parse(row[0]);
    if (!cidr) throw InputError(where + "bad CIDR '" + row[0] + "'");
    GeoInfo info;
    info.country = std::string(trim(row[1]));
    if (!valid_country(info.country)) throw InputError(where + "bad country '" + row[1] + "'");
    if (const auto sub = trim(row[2]); !sub.empty()) info.subdivision = std::string(sub);
    if (const auto isp = trim(row[3]); !isp.empty()) info.isp = std::string(isp);
    try {
      table.add(*cidr, std::move(info));
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
  }
  return table;
}

void load_tor_list(std::istream& in, GeoTable& table, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto ip = IpAddress::parse(v);
    if (!ip) {
      throw InputError(std::string(source) + ":" + std::to_string(line_no) + ": bad IP '" +
                       std::string(v) + "'");
    }
    table.add_tor_exit(*ip);
  }
}

std::vector<GeoLookup> enrich(std::span<const AuditEvent> events, const GeoTable& table) {
  std::vector<GeoLookup> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    if (!e.is_login()) {
      out.emplace_back(NotFound{NotFoundReason::NoIp});
    } else {
      out.push_back(table.resolve(*e.client_ip));
    }
  }
  return out;
}

}  // namespace takeover
