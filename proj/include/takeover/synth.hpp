#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "takeover/audit.hpp"
#include "takeover/session.hpp"

namespace takeover::synth {

enum class Archetype : std::uint8_t { BenignOnly, EndToEndAttacker, SegmentedTwoActor, EvasiveAttacker };

std::string_view to_string(Archetype a);

struct LocationSpec {
  std::string subdivision;  // "CC-XXX"
  std::string isp;
  double latitude = 0;
  double longitude = 0;

  std::string country() const { return subdivision.substr(0, 2); }
};

/// Field-level validation failure in a scenario spec.
class SpecError : public std::runtime_error {
 public:
  SpecError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  std::size_t users = 8;
  std::size_t organizations = 4;
  Instant start = 1564617600;  // 2019-08-01T00:00:00Z
  std::vector<Archetype> archetypes;  // assigned round-robin

  std::vector<LocationSpec> home_pool;
  std::vector<LocationSpec> attacker1_pool;
  std::vector<LocationSpec> attacker2_pool;

  // "{v}" in a user agent is replaced by a draw from ua_versions.
  std::vector<std::string> benign_user_agents;
  std::vector<std::string> attacker1_user_agents;
  std::vector<std::string> attacker2_user_agents;
  std::vector<std::string> ua_versions;

  std::vector<std::string> email_apps;
  std::vector<std::string> other_apps;
  std::vector<std::string> sectors;

  double benign_logins_per_day = 4.0;
  std::size_t attacker_events_min = 4;
  std::size_t attacker_events_max = 12;
  int gap_days = 3;

  double phishing_rate = 0.5;
  double inbox_rule_rate = 0.3;
  double tor_rate = 0.1;
  double non_email_rate = 0.2;
  double sensitive_op_rate = 0.1;
  double unmapped_rate = 0.01;
  double breach_rate = 0.2;

  // The first `rotating_proxy_users` segmented users switch location on
  // every second-actor login, packed into `rotating_proxy_hours` hours.
  std::size_t rotating_proxy_users = 1;
  std::size_t rotating_proxy_events = 29;
  std::size_t rotating_proxy_hours = 3;

  bool disjoint_actor_pools = true;
};

/// Default scenario: all four archetypes, disjoint actor pools, one
/// rotating-proxy case.
ScenarioSpec paper_mix();

/// Starts from paper_mix() and overrides the fields present. Unknown keys
/// and bad values raise SpecError naming the field.
ScenarioSpec parse_spec(const nlohmann::json& j);
nlohmann::json spec_to_json(const ScenarioSpec& spec);

/// Throws SpecError for infeasible specs.
void validate(const ScenarioSpec& spec);

struct UserTruth {
  std::string user_id;
  std::string organization;
  Archetype archetype = Archetype::BenignOnly;
};

struct Corpus {
  std::vector<AuditEvent> events;  // sorted by (timestamp, id)
  CompromiseTimes compromise_times;
  std::vector<EmailRecord> emails;
  RuleDetections inbox_rules;
  std::vector<std::pair<std::string, TruthTag>> truth;  // event id order
  std::vector<UserTruth> users;
  std::vector<std::pair<std::string, LocationSpec>> geo_rows;  // cidr, location
  std::vector<std::string> tor_exits;
  std::vector<std::string> email_apps;
  std::vector<std::string> breached_accounts;
  std::map<std::string, std::string> org_sectors;
};

/// Deterministic per spec: user i draws only from the stream (seed, i).
Corpus generate(const ScenarioSpec& spec);

/// Writes the ingest-format files plus the truth sidecar under `dir`:
/// events.jsonl compromise_times.csv emails.csv inbox_rules.csv geo.csv
/// tor.txt centroids.csv email_apps.txt truth.csv users.csv
/// breach_list.txt org_sectors.csv.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

}  // namespace takeover::synth
