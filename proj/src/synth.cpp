#include "takeover/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>

#include "takeover/csv.hpp"
#include "takeover/rng.hpp"

namespace takeover::synth {

using nlohmann::json;

std::string_view to_string(Archetype a) {
  switch (a) {
    case Archetype::BenignOnly: return "BenignOnly";
    case Archetype::EndToEndAttacker: return "EndToEndAttacker";
    case Archetype::SegmentedTwoActor: return "SegmentedTwoActor";
    case Archetype::EvasiveAttacker: return "EvasiveAttacker";
  }
  return "unknown";
}

namespace {

std::optional<Archetype> parse_archetype(std::string_view s) {
  for (auto a : {Archetype::BenignOnly, Archetype::EndToEndAttacker, Archetype::SegmentedTwoActor,
                 Archetype::EvasiveAttacker}) {
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

std::vector<LocationSpec> default_home_pool() {
  return {
      {"US-IL", "Comcast Cable", 40.0, -89.2},
      {"US-MO", "Charter Communications", 38.4, -92.5},
      {"US-CA", "AT&T Internet", 37.2, -119.4},
      {"US-NY", "Verizon Fios", 42.9, -75.5},
      {"US-TX", "Spectrum", 31.5, -99.3},
  };
}

std::vector<LocationSpec> default_attacker1_pool() {
  return {
      {"NG-LA", "MTN Nigeria", 6.55, 3.39},     {"RU-MOW", "Rostelecom", 55.75, 37.62},
      {"VN-SG", "Viettel", 10.82, 106.63},      {"BR-SP", "Vivo", -23.0, -49.0},
      {"RO-B", "RCS & RDS", 44.43, 26.10},      {"UA-30", "Kyivstar", 50.45, 30.52},
  };
}

std::vector<LocationSpec> default_attacker2_pool() {
  return {
      {"JP-27", "NTT OCN", 34.69, 135.52},
      {"DE-BE", "Deutsche Telekom", 52.52, 13.40},
      {"GB-ENG", "British Telecom", 52.36, -1.17},
      {"IN-MH", "Bharti Airtel", 19.6, 75.7},
      {"ZA-GT", "Vodacom", -26.27, 28.11},
      {"FR-IDF", "Orange", 48.85, 2.35},
      {"NL-NH", "KPN", 52.52, 4.79},
      {"ES-MD", "Telefonica", 40.42, -3.70},
      {"IT-62", "TIM", 41.9, 12.5},
      {"PL-MZ", "Orange Polska", 52.23, 21.01},
      {"SE-AB", "Telia", 59.33, 18.07},
      {"NO-03", "Telenor", 59.91, 10.75},
      {"FI-18", "Elisa", 60.2, 24.9},
      {"DK-84", "TDC", 55.68, 12.57},
      {"CH-ZH", "Swisscom", 47.37, 8.54},
      {"AT-9", "A1 Telekom", 48.21, 16.37},
      {"CZ-10", "O2 Czech", 50.08, 14.44},
      {"TR-34", "Turk Telekom", 41.01, 28.98},
      {"EG-C", "TE Data", 30.04, 31.24},
      {"KE-30", "Safaricom", -1.29, 36.82},
      {"AU-NSW", "Telstra", -33.0, 147.0},
      {"NZ-AUK", "Spark", -36.85, 174.76},
      {"SG-01", "Singtel", 1.29, 103.85},
      {"KR-11", "KT Corporation", 37.57, 126.98},
      {"TH-10", "True Internet", 13.76, 100.50},
      {"MY-14", "TM Net", 3.14, 101.69},
      {"AR-C", "Telecom Argentina", -34.6, -58.38},
      {"MX-CMX", "Telmex", 19.43, -99.13},
      {"CL-RM", "Movistar Chile", -33.45, -70.67},
      {"PH-00", "PLDT", 14.6, 120.98},
      {"ID-JK", "Telkom Indonesia", -6.2, 106.85},
  };
}

}  // namespace

ScenarioSpec paper_mix() {
  ScenarioSpec s;
  s.archetypes = {Archetype::BenignOnly, Archetype::EndToEndAttacker,
                  Archetype::SegmentedTwoActor, Archetype::EvasiveAttacker};
  s.home_pool = default_home_pool();
  s.attacker1_pool = default_attacker1_pool();
  s.attacker2_pool = default_attacker2_pool();
  s.benign_user_agents = {
      "iPhone9C4/{v}",
      "Mozilla/5.0 (Windows NT 10.0; Win64; x64) Gecko/20100101 Firefox/{v}",
      "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_15_7) AppleWebKit/605.1.15 (KHTML, like "
      "Gecko) Version/{v} Safari/605.1.15",
      "Outlook-iOS/{v}",
      "Microsoft Office/16.0 (Windows NT 10.0; Microsoft Outlook {v}; Pro)",
  };
  s.attacker1_user_agents = {
      "python-requests/{v}",
      "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/{v} "
      "Safari/537.36",
      "BAV2ROPC",
  };
  s.attacker2_user_agents = {
      "Mozilla/5.0 (Windows NT 6.1; WOW64; Trident/7.0; rv:11.0) like Gecko",
      "okhttp/{v}",
      "iPhone10C2/{v}",
  };
  s.ua_versions = {"1706.56", "1708.57", "70.0", "71.0", "13.0.3", "16.0.12026"};
  s.email_apps = {"app-exchange-online", "app-outlook", "app-owa"};
  s.other_apps = {"app-sharepoint", "app-bing", "app-ibiza-portal", "app-teams", "app-forms"};
  s.sectors = {"Education", "Healthcare", "Finance", "Technology", "Government"};
  return s;
}

namespace {

template <typename T>
T get_as(const json& v, const std::string& field) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw SpecError(field, "wrong type");
  }
}

double get_rate(const json& v, const std::string& field) {
  const double r = get_as<double>(v, field);
  if (!(r >= 0.0 && r <= 1.0)) throw SpecError(field, "must be within [0, 1]");
  return r;
}

std::vector<LocationSpec> get_pool(const json& v, const std::string& field) {
  if (!v.is_array()) throw SpecError(field, "must be an array");
  std::vector<LocationSpec> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    const auto& e = v[i];
    if (!e.is_object()) throw SpecError(f, "must be an object");
    LocationSpec loc;
    for (const auto& [key, val] : e.items()) {
      if (key == "subdivision") loc.subdivision = get_as<std::string>(val, f + ".subdivision");
      else if (key == "isp") loc.isp = get_as<std::string>(val, f + ".isp");
      else if (key == "latitude") loc.latitude = get_as<double>(val, f + ".latitude");
      else if (key == "longitude") loc.longitude = get_as<double>(val, f + ".longitude");
      else throw SpecError(f + "." + key, "unknown field");
    }
    out.push_back(std::move(loc));
  }
  return out;
}

json pool_to_json(const std::vector<LocationSpec>& pool) {
  json arr = json::array();
  for (const auto& l : pool) {
    arr.push_back({{"subdivision", l.subdivision},
                   {"isp", l.isp},
                   {"latitude", l.latitude},
                   {"longitude", l.longitude}});
  }
  return arr;
}

}  // namespace

ScenarioSpec parse_spec(const json& j) {
  if (!j.is_object()) throw SpecError("<root>", "spec must be a JSON object");
  ScenarioSpec s = paper_mix();
  using Setter = std::function<void(const json&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"seed", [&](const json& v, const std::string& f) { s.seed = get_as<std::uint64_t>(v, f); }},
      {"users", [&](const json& v, const std::string& f) { s.users = get_as<std::size_t>(v, f); }},
      {"organizations",
       [&](const json& v, const std::string& f) { s.organizations = get_as<std::size_t>(v, f); }},
      {"start",
       [&](const json& v, const std::string& f) {
         const auto t = parse_iso8601(get_as<std::string>(v, f));
         if (!t) throw SpecError(f, "not an ISO-8601 instant with offset");
         s.start = *t;
       }},
      {"archetypes",
       [&](const json& v, const std::string& f) {
         const auto names = get_as<std::vector<std::string>>(v, f);
         s.archetypes.clear();
         for (const auto& n : names) {
           const auto a = parse_archetype(n);
           if (!a) throw SpecError(f, "unknown archetype '" + n + "'");
           s.archetypes.push_back(*a);
         }
       }},
      {"home_pool", [&](const json& v, const std::string& f) { s.home_pool = get_pool(v, f); }},
      {"attacker1_pool",
       [&](const json& v, const std::string& f) { s.attacker1_pool = get_pool(v, f); }},
      {"attacker2_pool",
       [&](const json& v, const std::string& f) { s.attacker2_pool = get_pool(v, f); }},
      {"benign_user_agents",
       [&](const json& v, const std::string& f) {
         s.benign_user_agents = get_as<std::vector<std::string>>(v, f);
       }},
      {"attacker1_user_agents",
       [&](const json& v, const std::string& f) {
         s.attacker1_user_agents = get_as<std::vector<std::string>>(v, f);
       }},
      {"attacker2_user_agents",
       [&](const json& v, const std::string& f) {
         s.attacker2_user_agents = get_as<std::vector<std::string>>(v, f);
       }},
      {"ua_versions",
       [&](const json& v, const std::string& f) {
         s.ua_versions = get_as<std::vector<std::string>>(v, f);
       }},
      {"email_apps",
       [&](const json& v, const std::string& f) {
         s.email_apps = get_as<std::vector<std::string>>(v, f);
       }},
      {"other_apps",
       [&](const json& v, const std::string& f) {
         s.other_apps = get_as<std::vector<std::string>>(v, f);
       }},
      {"sectors",
       [&](const json& v, const std::string& f) {
         s.sectors = get_as<std::vector<std::string>>(v, f);
       }},
      {"benign_logins_per_day",
       [&](const json& v, const std::string& f) {
         s.benign_logins_per_day = get_as<double>(v, f);
       }},
      {"attacker_events_min",
       [&](const json& v, const std::string& f) {
         s.attacker_events_min = get_as<std::size_t>(v, f);
       }},
      {"attacker_events_max",
       [&](const json& v, const std::string& f) {
         s.attacker_events_max = get_as<std::size_t>(v, f);
       }},
      {"gap_days", [&](const json& v, const std::string& f) { s.gap_days = get_as<int>(v, f); }},
      {"phishing_rate",
       [&](const json& v, const std::string& f) { s.phishing_rate = get_rate(v, f); }},
      {"inbox_rule_rate",
       [&](const json& v, const std::string& f) { s.inbox_rule_rate = get_rate(v, f); }},
      {"tor_rate", [&](const json& v, const std::string& f) { s.tor_rate = get_rate(v, f); }},
      {"non_email_rate",
       [&](const json& v, const std::string& f) { s.non_email_rate = get_rate(v, f); }},
      {"sensitive_op_rate",
       [&](const json& v, const std::string& f) { s.sensitive_op_rate = get_rate(v, f); }},
      {"unmapped_rate",
       [&](const json& v, const std::string& f) { s.unmapped_rate = get_rate(v, f); }},
      {"breach_rate",
       [&](const json& v, const std::string& f) { s.breach_rate = get_rate(v, f); }},
      {"rotating_proxy_users",
       [&](const json& v, const std::string& f) {
         s.rotating_proxy_users = get_as<std::size_t>(v, f);
       }},
      {"rotating_proxy_events",
       [&](const json& v, const std::string& f) {
         s.rotating_proxy_events = get_as<std::size_t>(v, f);
       }},
      {"rotating_proxy_hours",
       [&](const json& v, const std::string& f) {
         s.rotating_proxy_hours = get_as<std::size_t>(v, f);
       }},
      {"disjoint_actor_pools",
       [&](const json& v, const std::string& f) {
         s.disjoint_actor_pools = get_as<bool>(v, f);
       }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw SpecError(key, "unknown field");
    it->second(value, key);
  }
  validate(s);
  return s;
}

json spec_to_json(const ScenarioSpec& s) {
  std::vector<std::string> archetypes;
  for (auto a : s.archetypes) archetypes.emplace_back(to_string(a));
  return {
      {"seed", s.seed},
      {"users", s.users},
      {"organizations", s.organizations},
      {"start", format_iso8601(s.start)},
      {"archetypes", archetypes},
      {"home_pool", pool_to_json(s.home_pool)},
      {"attacker1_pool", pool_to_json(s.attacker1_pool)},
      {"attacker2_pool", pool_to_json(s.attacker2_pool)},
      {"benign_user_agents", s.benign_user_agents},
      {"attacker1_user_agents", s.attacker1_user_agents},
      {"attacker2_user_agents", s.attacker2_user_agents},
      {"ua_versions", s.ua_versions},
      {"email_apps", s.email_apps},
      {"other_apps", s.other_apps},
      {"sectors", s.sectors},
      {"benign_logins_per_day", s.benign_logins_per_day},
      {"attacker_events_min", s.attacker_events_min},
      {"attacker_events_max", s.attacker_events_max},
      {"gap_days", s.gap_days},
      {"phishing_rate", s.phishing_rate},
      {"inbox_rule_rate", s.inbox_rule_rate},
      {"tor_rate", s.tor_rate},
      {"non_email_rate", s.non_email_rate},
      {"sensitive_op_rate", s.sensitive_op_rate},
      {"unmapped_rate", s.unmapped_rate},
      {"breach_rate", s.breach_rate},
      {"rotating_proxy_users", s.rotating_proxy_users},
      {"rotating_proxy_events", s.rotating_proxy_events},
      {"rotating_proxy_hours", s.rotating_proxy_hours},
      {"disjoint_actor_pools", s.disjoint_actor_pools},
  };
}

namespace {

bool uses(const ScenarioSpec& s, Archetype a) {
  return std::find(s.archetypes.begin(), s.archetypes.end(), a) != s.archetypes.end();
}

void check_pool(const std::vector<LocationSpec>& pool, const std::string& field) {
  if (pool.empty()) throw SpecError(field, "must not be empty");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& l = pool[i];
    const std::string f = field + "[" + std::to_string(i) + "]";
    if (l.subdivision.size() < 4 || l.subdivision[2] != '-' ||
        !std::isupper(static_cast<unsigned char>(l.subdivision[0])) ||
        !std::isupper(static_cast<unsigned char>(l.subdivision[1]))) {
      throw SpecError(f + ".subdivision", "expected an ISO-3166-2 code like US-IL");
    }
    if (l.isp.empty()) throw SpecError(f + ".isp", "must not be empty");
    if (std::abs(l.latitude) > 90 || std::abs(l.longitude) > 180) {
      throw SpecError(f, "coordinates out of range");
    }
    if (!seen.insert(l.subdivision).second) throw SpecError(f, "duplicate subdivision");
  }
}

void check_foreign(const std::vector<LocationSpec>& pool, const std::string& field,
                   const std::set<std::string>& home_countries) {
  for (const auto& l : pool) {
    if (home_countries.count(l.country())) {
      throw SpecError(field, "country " + l.country() + " also appears in home_pool");
    }
  }
}

}  // namespace

void validate(const ScenarioSpec& s) {
  if (s.users == 0) return;
  if (s.archetypes.empty()) throw SpecError("archetypes", "must not be empty");
  if (s.organizations == 0) throw SpecError("organizations", "must be at least 1");
  if (!(s.benign_logins_per_day > 0)) throw SpecError("benign_logins_per_day", "must be > 0");
  if (s.benign_user_agents.empty()) throw SpecError("benign_user_agents", "must not be empty");
  if (s.email_apps.empty()) throw SpecError("email_apps", "must not be empty");
  if (s.sectors.empty()) throw SpecError("sectors", "must not be empty");
  check_pool(s.home_pool, "home_pool");
  std::set<std::string> home_countries;
  for (const auto& l : s.home_pool) home_countries.insert(l.country());

  const bool attackers = uses(s, Archetype::EndToEndAttacker) ||
                         uses(s, Archetype::SegmentedTwoActor) ||
                         uses(s, Archetype::EvasiveAttacker);
  if (attackers) {
    if (s.attacker_events_min < 2) throw SpecError("attacker_events_min", "must be at least 2");
    if (s.attacker_events_max < s.attacker_events_min) {
      throw SpecError("attacker_events_max", "must be >= attacker_events_min");
    }
    if (s.attacker1_user_agents.empty()) {
      throw SpecError("attacker1_user_agents", "must not be empty");
    }
    if (s.non_email_rate > 0 && s.other_apps.empty()) {
      throw SpecError("other_apps", "must not be empty when non_email_rate > 0");
    }
  }
  if (uses(s, Archetype::EndToEndAttacker) || uses(s, Archetype::SegmentedTwoActor)) {
    check_pool(s.attacker1_pool, "attacker1_pool");
    check_foreign(s.attacker1_pool, "attacker1_pool", home_countries);
  }
  if (uses(s, Archetype::SegmentedTwoActor)) {
    if (s.gap_days < 1) throw SpecError("gap_days", "must be at least 1 for SegmentedTwoActor");
    if (s.gap_days > 25) throw SpecError("gap_days", "must be at most 25 to stay inside t+30d");
    check_pool(s.attacker2_pool, "attacker2_pool");
    check_foreign(s.attacker2_pool, "attacker2_pool", home_countries);
    if (s.attacker2_user_agents.empty()) {
      throw SpecError("attacker2_user_agents", "must not be empty");
    }
    if (s.disjoint_actor_pools) {
      std::set<std::string> subs, isps;
      for (const auto& l : s.attacker1_pool) {
        subs.insert(l.subdivision);
        isps.insert(l.isp);
      }
      for (const auto& l : s.attacker2_pool) {
        if (subs.count(l.subdivision) || isps.count(l.isp)) {
          throw SpecError("attacker2_pool", "overlaps attacker1_pool (" + l.subdivision + ", " +
                                                l.isp + ") while disjoint_actor_pools is set");
        }
      }
    }
    if (s.rotating_proxy_users > 0) {
      if (s.rotating_proxy_hours < 1) throw SpecError("rotating_proxy_hours", "must be >= 1");
      if (s.rotating_proxy_events < s.rotating_proxy_hours) {
        throw SpecError("rotating_proxy_events", "must be >= rotating_proxy_hours");
      }
      if (s.rotating_proxy_events > s.attacker2_pool.size()) {
        throw SpecError("rotating_proxy_events", "exceeds the attacker2_pool size");
      }
    }
  }
  bool has_placeholder = false;
  for (const auto* pool : {&s.benign_user_agents, &s.attacker1_user_agents,
                           &s.attacker2_user_agents}) {
    for (const auto& ua : *pool) {
      if (trim(ua).empty()) throw SpecError("user_agents", "empty user agent");
      has_placeholder = has_placeholder || ua.find("{v}") != std::string::npos;
    }
  }
  if (has_placeholder && s.ua_versions.empty()) {
    throw SpecError("ua_versions", "must not be empty when user agents use {v}");
  }
}

namespace {

struct Draft {
  AuditEvent event;
  TruthTag tag = TruthTag::Benign;
};

struct Universe {
  std::map<std::string, std::size_t> index;  // subdivision -> block number
  std::vector<LocationSpec> locations;

  void add(const std::vector<LocationSpec>& pool) {
    for (const auto& l : pool) {
      if (index.emplace(l.subdivision, locations.size()).second) locations.push_back(l);
    }
  }
  std::string cidr(std::size_t k) const {
    return std::to_string(20 + k / 256) + "." + std::to_string(k % 256) + ".0.0/16";
  }
  // Benign hosts use third octets 0-127, attacker hosts 128-255.
  std::string host(std::size_t k, Rng& rng, bool attacker) const {
    const auto third = attacker ? rng.between(128, 255) : rng.between(0, 127);
    return std::to_string(20 + k / 256) + "." + std::to_string(k % 256) + "." +
           std::to_string(third) + "." + std::to_string(rng.between(1, 254));
  }
};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

std::string render_ua(const std::string& tmpl, const ScenarioSpec& s, Rng& rng) {
  const auto pos = tmpl.find("{v}");
  if (pos == std::string::npos) return tmpl;
  std::string out = tmpl;
  out.replace(pos, 3, pick(s.ua_versions, rng));
  return out;
}

std::string org_name(std::size_t k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "org%03zu.example.com", k);
  return buf;
}

struct UserOutput {
  std::vector<Draft> drafts;
  std::vector<EmailRecord> emails;
  std::vector<Instant> detections;
  std::vector<std::string> tor_exits;
  Instant t = 0;
  bool breached = false;
};

// Actor event times: n draws in [start, start + span], sorted, first at start.
std::vector<Instant> burst(Instant start, Seconds span, std::size_t n, Rng& rng) {
  std::vector<Instant> times{start};
  for (std::size_t i = 1; i < n; ++i) times.push_back(start + rng.between(0, span));
  std::sort(times.begin(), times.end());
  return times;
}

UserOutput generate_user(const ScenarioSpec& s, const Universe& uni, std::size_t index,
                         const std::string& user, Archetype archetype,
                         std::size_t segmented_ordinal) {
  Rng rng = Rng::derive(s.seed, index);
  UserOutput out;
  out.t = s.start + 2 * kMonth + rng.between(0, 10 * kDay);
  const Instant t = out.t;

  auto app_for = [&](double other_rate) -> std::string {
    if (!s.other_apps.empty() && rng.chance(other_rate)) return pick(s.other_apps, rng);
    return pick(s.email_apps, rng);
  };
  auto login = [&](Instant ts, std::string ip, std::string ua, std::string app, TruthTag tag) {
    Draft d;
    d.event.user_id = user;
    d.event.timestamp = ts;
    d.event.client_ip = std::move(ip);
    d.event.user_agent = std::move(ua);
    d.event.operation = "UserLoggedIn";
    d.event.application_id = std::move(app);
    d.tag = tag;
    out.drafts.push_back(std::move(d));
  };
  auto operation = [&](Instant ts, std::string op, TruthTag tag) {
    Draft d;
    d.event.user_id = user;
    d.event.timestamp = ts;
    d.event.operation = std::move(op);
    d.tag = tag;
    out.drafts.push_back(std::move(d));
  };

  // Benign user: one or two home locations in one country, one or two devices.
  const LocationSpec& primary = pick(s.home_pool, rng);
  std::vector<std::size_t> home_blocks{uni.index.at(primary.subdivision)};
  {
    std::vector<const LocationSpec*> same_country;
    for (const auto& l : s.home_pool) {
      if (l.country() == primary.country() && l.subdivision != primary.subdivision) {
        same_country.push_back(&l);
      }
    }
    if (!same_country.empty() && rng.chance(0.5)) {
      home_blocks.push_back(uni.index.at(pick(same_country, rng)->subdivision));
    }
  }
  std::vector<std::string> home_ips;
  for (auto k : home_blocks) home_ips.push_back(uni.host(k, rng, false));
  std::vector<std::string> devices{pick(s.benign_user_agents, rng)};
  if (s.benign_user_agents.size() > 1 && rng.chance(0.5)) {
    const auto& second = pick(s.benign_user_agents, rng);
    if (second != devices.front()) devices.push_back(second);
  }

  const Instant hist_lo = t - 2 * kMonth;
  const Instant hist_hi = t - kMonth;
  const Instant end = t + kMonth;
  // Every benign (location, device) pair appears in the historical window.
  for (std::size_t li = 0; li < home_ips.size(); ++li) {
    for (const auto& dev : devices) {
      login(rng.between(hist_lo, hist_hi - 1), home_ips[li], render_ua(dev, s, rng),
            app_for(0.15), TruthTag::Benign);
    }
  }
  const auto benign_total = static_cast<std::size_t>(
      std::llround(s.benign_logins_per_day * static_cast<double>((end - hist_lo) / kDay)));
  for (std::size_t i = out.drafts.size(); i < benign_total; ++i) {
    const Instant ts = rng.between(hist_lo, end);
    std::string ip = rng.chance(s.unmapped_rate)
                         ? "198.51.100." + std::to_string(rng.between(1, 254))
                         : pick(home_ips, rng);
    login(ts, std::move(ip), render_ua(pick(devices, rng), s, rng), app_for(0.15),
          TruthTag::Benign);
  }
  for (std::int64_t i = 0, n = rng.between(0, 3); i < n; ++i) {
    operation(rng.between(hist_lo, end), "Set-Mailbox", TruthTag::Benign);
  }
  for (std::int64_t i = 0, n = rng.between(2, 8); i < n; ++i) {
    out.emails.push_back({user, rng.between(hist_lo, end), false});
  }

  // Attacker activity.
  std::vector<Instant> attack_times;
  auto attacker_ip = [&](std::size_t block) {
    std::string ip = uni.host(block, rng, true);
    if (rng.chance(s.tor_rate)) out.tor_exits.push_back(ip);
    return ip;
  };
  auto actor = [&](const std::vector<LocationSpec>& pool, const std::vector<std::string>& uas,
                   const std::vector<Instant>& times, std::size_t max_locations, TruthTag tag) {
    std::vector<std::string> ips;
    const std::size_t nloc = std::min<std::size_t>(
        pool.size(), 1 + rng.below(max_locations));
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      std::swap(order[i], order[i + rng.below(order.size() - i)]);
    }
    for (std::size_t i = 0; i < nloc; ++i) {
      ips.push_back(attacker_ip(uni.index.at(pool[order[i]].subdivision)));
    }
    const std::string ua = render_ua(pick(uas, rng), s, rng);
    for (const Instant ts : times) {
      login(ts, pick(ips, rng), ua, app_for(s.non_email_rate), tag);
      attack_times.push_back(ts);
    }
  };
  auto count = [&]() {
    return static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(s.attacker_events_min),
                                                static_cast<std::int64_t>(s.attacker_events_max)));
  };

  switch (archetype) {
    case Archetype::BenignOnly:
      break;
    case Archetype::EndToEndAttacker: {
      const Instant start = t - rng.between(0, 12 * kHour);
      actor(s.attacker1_pool, s.attacker1_user_agents,
            burst(start, rng.between(kHour, 20 * kHour), count(), rng), 2, TruthTag::Attacker1);
      break;
    }
    case Archetype::SegmentedTwoActor: {
      const Instant start = t - rng.between(0, 12 * kHour);
      const auto first = burst(start, rng.between(kHour, 6 * kHour), count(), rng);
      actor(s.attacker1_pool, s.attacker1_user_agents, first, 2, TruthTag::Attacker1);
      const Instant second_start = first.back() + s.gap_days * kDay + rng.between(0, 6 * kHour);
      if (segmented_ordinal < s.rotating_proxy_users) {
        // Fresh location for every login, spread over exactly N hours.
        std::vector<std::size_t> order(s.attacker2_pool.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
          std::swap(order[i], order[i + rng.below(order.size() - i)]);
        }
        const Instant base = (second_start / kHour + 1) * kHour;
        const std::string ua = render_ua(pick(s.attacker2_user_agents, rng), s, rng);
        for (std::size_t j = 0; j < s.rotating_proxy_events; ++j) {
          const auto hour = static_cast<Seconds>(j % s.rotating_proxy_hours);
          const Instant ts = base + hour * kHour + rng.between(0, kHour - 1);
          const auto block = uni.index.at(s.attacker2_pool[order[j]].subdivision);
          login(ts, attacker_ip(block), ua, app_for(s.non_email_rate), TruthTag::Attacker2);
          attack_times.push_back(ts);
        }
      } else {
        // Stable proxy: one location across several hours.
        actor(s.attacker2_pool, s.attacker2_user_agents,
              burst(second_start, rng.between(3 * kHour, 20 * kHour), std::max<std::size_t>(3, count()),
                    rng),
              1, TruthTag::Attacker2);
      }
      break;
    }
    case Archetype::EvasiveAttacker: {
      // Logs in from the user's own primary territory.
      const Instant start = t - rng.between(0, kDay);
      const auto times = burst(start, rng.between(kHour, 2 * kDay), count(), rng);
      const std::string ip = attacker_ip(home_blocks.front());
      const std::string ua = render_ua(pick(s.attacker1_user_agents, rng), s, rng);
      for (const Instant ts : times) {
        login(ts, ip, ua, app_for(s.non_email_rate), TruthTag::Attacker1);
        attack_times.push_back(ts);
      }
      break;
    }
  }

  if (!attack_times.empty()) {
    std::sort(attack_times.begin(), attack_times.end());
    if (rng.chance(s.phishing_rate)) {
      const Seconds offset = rng.chance(0.5) ? rng.between(0, 4 * kHour)
                                             : 3 * kDay + rng.between(0, 2 * kDay);
      out.emails.push_back({user, attack_times.front() + offset, true});
    }
    if (rng.chance(s.inbox_rule_rate)) {
      out.detections.push_back(pick(attack_times, rng) + rng.between(0, 2 * kHour));
    }
    if (rng.chance(s.sensitive_op_rate)) {
      operation(pick(attack_times, rng) + 30 * 60, "Change user password", TruthTag::Attacker1);
    }
  }
  out.breached = rng.chance(s.breach_rate);

  std::stable_sort(out.drafts.begin(), out.drafts.end(), [](const Draft& a, const Draft& b) {
    return a.event.timestamp < b.event.timestamp;
  });
  char buf[48];
  for (std::size_t seq = 0; seq < out.drafts.size(); ++seq) {
    std::snprintf(buf, sizeof buf, "evt-%06zu-%06zu", index, seq);
    out.drafts[seq].event.id = buf;
  }
  return out;
}

}  // namespace

Corpus generate(const ScenarioSpec& spec) {
  validate(spec);
  Corpus c;
  if (spec.users == 0) return c;
  Universe uni;
  uni.add(spec.home_pool);
  uni.add(spec.attacker1_pool);
  uni.add(spec.attacker2_pool);
  for (std::size_t k = 0; k < uni.locations.size(); ++k) {
    c.geo_rows.emplace_back(uni.cidr(k), uni.locations[k]);
  }
  c.email_apps = spec.email_apps;
  for (std::size_t k = 0; k < spec.organizations; ++k) {
    c.org_sectors[org_name(k)] = spec.sectors[k % spec.sectors.size()];
  }

  std::vector<Draft> all;
  std::set<std::string> tor;
  std::size_t segmented = 0;
  for (std::size_t i = 0; i < spec.users; ++i) {
    const Archetype a = spec.archetypes[i % spec.archetypes.size()];
    char buf[32];
    std::snprintf(buf, sizeof buf, "user%05zu@", i);
    const std::string org = org_name(i % spec.organizations);
    const std::string user = buf + org;
    const std::size_t ordinal = a == Archetype::SegmentedTwoActor ? segmented++ : 0;
    UserOutput u = generate_user(spec, uni, i, user, a, ordinal);
    c.users.push_back({user, org, a});
    c.compromise_times[user] = u.t;
    c.emails.insert(c.emails.end(), u.emails.begin(), u.emails.end());
    if (!u.detections.empty()) c.inbox_rules[user] = u.detections;
    tor.insert(u.tor_exits.begin(), u.tor_exits.end());
    if (u.breached) c.breached_accounts.push_back(user);
    for (auto& d : u.drafts) all.push_back(std::move(d));
  }
  std::sort(all.begin(), all.end(),
            [](const Draft& a, const Draft& b) { return event_before(a.event, b.event); });
  c.events.reserve(all.size());
  c.truth.reserve(all.size());
  for (auto& d : all) {
    c.truth.emplace_back(d.event.id, d.tag);
    c.events.push_back(std::move(d.event));
  }
  std::sort(c.truth.begin(), c.truth.end());
  std::sort(c.emails.begin(), c.emails.end(), [](const auto& a, const auto& b) {
    return std::tie(a.sender, a.sent_at, a.flagged_phishing) <
           std::tie(b.sender, b.sent_at, b.flagged_phishing);
  });
  c.tor_exits.assign(tor.begin(), tor.end());
  return c;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot write " + p.string());
  return f;
}

}  // namespace

void write_corpus(const Corpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto f = open_out(dir / "events.jsonl");
    for (const auto& e : c.events) f << serialize_event(e) << '\n';
  }
  {
    auto f = open_out(dir / "compromise_times.csv");
    f << "user_id,confirmed_at\n";
    for (const auto& [u, t] : c.compromise_times) f << csv_escape(u) << ',' << format_iso8601(t) << '\n';
  }
  {
    auto f = open_out(dir / "emails.csv");
    f << "sender,sent_at,flagged_phishing\n";
    for (const auto& m : c.emails) {
      f << csv_escape(m.sender) << ',' << format_iso8601(m.sent_at) << ','
        << (m.flagged_phishing ? 1 : 0) << '\n';
    }
  }
  {
    auto f = open_out(dir / "inbox_rules.csv");
    f << "user_id,detected_at\n";
    for (const auto& [u, times] : c.inbox_rules) {
      for (const auto t : times) f << csv_escape(u) << ',' << format_iso8601(t) << '\n';
    }
  }
  {
    auto f = open_out(dir / "geo.csv");
    f << "cidr,country,subdivision,isp\n";
    for (const auto& [cidr, loc] : c.geo_rows) {
      f << cidr << ',' << loc.country() << ',' << loc.subdivision << ',' << csv_escape(loc.isp)
        << '\n';
    }
  }
  {
    auto f = open_out(dir / "centroids.csv");
    f << "code,latitude,longitude\n";
    char buf[64];
    for (const auto& [cidr, loc] : c.geo_rows) {
      std::snprintf(buf, sizeof buf, "%.4f,%.4f", loc.latitude, loc.longitude);
      f << loc.subdivision << ',' << buf << '\n';
    }
  }
  {
    auto f = open_out(dir / "tor.txt");
    f << "# synthetic Tor exit list\n";
    for (const auto& ip : c.tor_exits) f << ip << '\n';
  }
  {
    auto f = open_out(dir / "email_apps.txt");
    for (const auto& a : c.email_apps) f << a << '\n';
  }
  {
    auto f = open_out(dir / "truth.csv");
    f << "id,truth_tag\n";
    for (const auto& [id, tag] : c.truth) f << csv_escape(id) << ',' << to_string(tag) << '\n';
  }
  {
    auto f = open_out(dir / "users.csv");
    f << "user_id,organization,archetype\n";
    for (const auto& u : c.users) {
      f << csv_escape(u.user_id) << ',' << csv_escape(u.organization) << ',' << to_string(u.archetype)
        << '\n';
    }
  }
  {
    auto f = open_out(dir / "breach_list.txt");
    for (const auto& u : c.breached_accounts) f << u << '\n';
  }
  {
    auto f = open_out(dir / "org_sectors.csv");
    f << "organization,sector\n";
    for (const auto& [org, sector] : c.org_sectors) {
      f << csv_escape(org) << ',' << csv_escape(sector) << '\n';
    }
  }
}

}  // namespace takeover::synth
