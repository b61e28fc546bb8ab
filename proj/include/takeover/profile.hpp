#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "takeover/audit.hpp"
#include "takeover/geo.hpp"
#include "takeover/user_agent.hpp"

namespace takeover {

/// Locations and devices a user logged in with during [t-60d, t-30d), plus
/// whatever benign activity later augments it.
struct HistoricalProfile {
  std::string user_id;
  Instant window_start = 0;
  Instant window_end = 0;  // exclusive
  std::set<std::string> countries;
  std::set<std::string> subdivisions;
  std::set<NormalizedUA> user_agents;

  bool empty() const { return countries.empty(); }
  bool has_subdivision_in(std::string_view country) const;

  /// Adds the event's country, subdivision (if any) and user agent.
  void add(const GeoInfo& geo, const NormalizedUA& ua);
};

struct InsufficientHistory {
  std::string user_id;
};

/// geo: 0 known location, 1 new subdivision in a known country, 2 new
/// country. ua: 0 known device, 1 new device.
struct FeatureVector {
  std::uint8_t geo = 0;
  std::uint8_t ua = 0;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class Label : std::uint8_t { Benign, Attacker };
enum class Phase : std::uint8_t { PreT, PostT };

std::string_view to_string(Label l);
std::string_view to_string(Phase p);

struct LabeledEvent {
  const AuditEvent* event = nullptr;  // owned by the CompromiseCase
  std::optional<GeoInfo> geo;         // absent when unclassifiable
  NormalizedUA ua;
  std::optional<FeatureVector> features;
  Label label = Label::Benign;
  Phase phase = Phase::PreT;
  // Set when the IP could not be resolved; such events are labeled Benign.
  std::optional<NotFoundReason> unclassifiable;

  const AuditEvent& ev() const { return *event; }
  Instant timestamp() const { return event->timestamp; }
};

std::variant<HistoricalProfile, InsufficientHistory> build_profile(
    const CompromiseCase& c, std::span<const GeoLookup> enriched);

FeatureVector extract_features(const GeoInfo& geo, const NormalizedUA& ua,
                               const HistoricalProfile& profile);

/// Attacker iff geo == 2, or geo == 1 and ua == 1.
constexpr Label classify(FeatureVector f) {
  if (f.geo == 2) return Label::Attacker;
  if (f.geo == 1 && f.ua == 1) return Label::Attacker;
  return Label::Benign;
}

struct CaseClassification {
  HistoricalProfile profile;    // historical window only
  HistoricalProfile augmented;  // plus benign pre-t activity
  std::vector<LabeledEvent> events;
  std::size_t unclassifiable = 0;
  std::size_t attacker_events = 0;
};

/// Two-phase labeling of every login event in [t-30d, t+30d]. Events in
/// [t-30d, t) are judged against the historical profile; events in
/// [t, t+30d] against that profile augmented with the benign pre-t events.
/// `enriched[i]` is the lookup for `c.events[i]`. The result points into
/// `c.events`, which must outlive it.
std::variant<CaseClassification, InsufficientHistory> classify_case(
    const CompromiseCase& c, std::span<const GeoLookup> enriched);

/// Most frequent subdivision among the historical-window login events;
/// ties go to the lexicographically smallest.
std::optional<std::string> home_territory(const CompromiseCase& c,
                                          std::span<const GeoLookup> enriched);

}  // namespace takeover
