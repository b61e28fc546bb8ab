#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include "takeover/audit.hpp"
#include "takeover/geo.hpp"

namespace fixtures {

using takeover::AuditEvent;
using takeover::Instant;

inline constexpr Instant kT = 1567296000;  // 2019-09-01T00:00:00Z

inline AuditEvent login(std::string id, Instant ts, std::string ip, std::string ua,
                        std::string app = "app-owa", std::string user = "alice@corp.example") {
  AuditEvent e;
  e.id = std::move(id);
  e.user_id = std::move(user);
  e.timestamp = ts;
  e.client_ip = std::move(ip);
  e.user_agent = std::move(ua);
  e.operation = "UserLoggedIn";
  e.application_id = std::move(app);
  return e;
}

inline AuditEvent operation(std::string id, Instant ts, std::string op,
                            std::string user = "alice@corp.example") {
  AuditEvent e;
  e.id = std::move(id);
  e.user_id = std::move(user);
  e.timestamp = ts;
  e.operation = std::move(op);
  return e;
}

// cidr, country, subdivision ("" for none), isp
using Row = std::tuple<std::string, std::string, std::string, std::string>;

inline takeover::GeoTable table(const std::vector<Row>& rows) {
  takeover::GeoTable t;
  for (const auto& [cidr, country, sub, isp] : rows) {
    takeover::GeoInfo g;
    g.country = country;
    if (!sub.empty()) g.subdivision = sub;
    if (!isp.empty()) g.isp = isp;
    t.add(*takeover::Cidr::parse(cidr), g);
  }
  return t;
}

// Two US states, Japan, and a country-only Canadian block.
inline takeover::GeoTable standard_table() {
  return table({{"20.0.0.0/16", "US", "US-IL", "Comcast"},
                {"20.1.0.0/16", "US", "US-MO", "Charter"},
                {"20.2.0.0/16", "JP", "JP-27", "NTT"},
                {"20.3.0.0/16", "CA", "", "Rogers"},
                {"20.4.0.0/16", "US", "", "Generic US"}});
}

inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("takeover-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  f << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace fixtures
