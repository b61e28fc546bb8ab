#pragma once

#include <compare>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "takeover/profile.hpp"

namespace takeover {

inline constexpr Seconds kIndicatorWindow = 5 * kHour;  // +/- 5 h, inclusive

struct SessionKey {
  std::string ip;
  NormalizedUA ua;

  friend auto operator<=>(const SessionKey&, const SessionKey&) = default;
};

struct IndicatorSet {
  bool phishing = false;
  bool inbox_rules = false;
  bool interarrival = false;
  bool tor = false;

  constexpr bool any() const { return phishing || inbox_rules || interarrival || tor; }
};

enum class TruthSource : std::uint8_t { Indicators, Manual, Sidecar };

std::string_view to_string(TruthSource s);

/// All of one user's login events sharing an (IP, normalized UA) pair. A key
/// whose events were labeled differently before and after t is split into
/// one session per phase, recorded in `phase`.
struct Session {
  std::string user_id;
  SessionKey key;
  std::optional<Phase> phase;
  std::vector<const LabeledEvent*> events;  // time-ordered, non-owning
  Label rule_label = Label::Benign;
  std::optional<Label> truth_label;
  TruthSource truth_source = TruthSource::Indicators;
  IndicatorSet indicators;
  std::vector<std::string> flags;

  Instant first_time() const { return events.front()->timestamp(); }
  /// Location shared by every member event; absent when unresolvable.
  const GeoInfo* geo() const { return events.front()->geo ? &*events.front()->geo : nullptr; }
};

/// Partitions the labeled login events of one case. Sessions come out
/// ordered by first event time, then key.
std::vector<Session> sessionize(std::span<const LabeledEvent> labeled);

/// True iff some flagged email lies within +/- window of a session login.
bool phishing_indicator(const Session& s, std::span<const EmailRecord> emails,
                        Seconds window = kIndicatorWindow);

/// True iff some detection lies within +/- window of a session login.
/// `detections` must be sorted.
bool inbox_rules_indicator(const Session& s, std::span<const Instant> detections,
                           Seconds window = kIndicatorWindow);

bool tor_indicator(const Session& s, const GeoTable& table);

struct Coordinates {
  double latitude = 0;
  double longitude = 0;
};

/// Centroids keyed by subdivision (ISO-3166-2) or country code.
using CentroidTable = std::map<std::string, Coordinates, std::less<>>;

/// CSV with header code,latitude,longitude.
CentroidTable load_centroids(std::istream& in, std::string_view source);

class MissingCentroid : public std::runtime_error {
 public:
  explicit MissingCentroid(const std::string& code)
      : std::runtime_error("no centroid for '" + code + "'") {}
};

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kCruiseSpeedKmh = 800.0;
inline constexpr Seconds kTravelOverhead = kHour;

double great_circle_km(Coordinates a, Coordinates b);

/// Great-circle distance at 800 km/h plus one hour, or 0 when a == b.
/// Throws MissingCentroid.
Seconds expected_travel_time(std::string_view a, std::string_view b,
                             const CentroidTable& centroids);

/// Home territory of a case and the times of every retained login event
/// located there.
struct HomeContext {
  std::optional<std::string> territory;
  std::vector<Instant> event_times;  // sorted
};

HomeContext make_home_context(const CompromiseCase& c, std::span<const GeoLookup> enriched);

struct InterarrivalResult {
  bool value = false;
  std::optional<std::string> flag;  // why the indicator could not fire
  std::optional<Seconds> min_gap;
};

/// Smallest gap from a session login to a home-territory login, compared
/// with the travel time between the home territory and the session location.
InterarrivalResult interarrival_indicator(const Session& s, const HomeContext& home,
                                          const CentroidTable& centroids);

struct ManualOverride {
  std::string user_id;
  std::string session_ip;
  NormalizedUA session_ua;
  Label truth = Label::Benign;
  std::string reason;
};

/// CSV with header user_id,session_ip,session_ua,truth_label,reason.
std::vector<ManualOverride> load_overrides(std::istream& in, std::string_view source);

class UnknownSession : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Attacker iff any indicator fired.
constexpr Label ground_truth(const IndicatorSet& ind) {
  return ind.any() ? Label::Attacker : Label::Benign;
}

/// Flips truth labels for every session matching an override (both halves
/// of a phase-split key). Throws UnknownSession when nothing matches.
void apply_overrides(std::span<Session> sessions, std::span<const ManualOverride> overrides);

enum class TruthTag : std::uint8_t { Benign, Attacker1, Attacker2 };
std::string_view to_string(TruthTag t);
std::optional<TruthTag> parse_truth_tag(std::string_view s);

/// Sidecar CSV with header id,truth_tag.
std::unordered_map<std::string, TruthTag> load_truth_sidecar(std::istream& in,
                                                             std::string_view source);

/// Attacker iff any member event carries an attacker tag.
Label sidecar_truth(const Session& s, const std::unordered_map<std::string, TruthTag>& tags);

struct EvalMetrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  // Absent when the denominator is zero.
  std::optional<double> precision, fpr, fnr, recall;

  static EvalMetrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
  std::size_t total() const { return tp + fp + fn + tn; }
};

/// Confusion matrix of rule labels against truth labels. Throws
/// std::invalid_argument if a session has no truth label.
EvalMetrics evaluate(std::span<const Session> sessions);

/// Keeps up to `max_attacker` rule-attacker and `max_benign` rule-benign
/// sessions per user, drawn with a seeded shuffle.
std::vector<Session> sample_sessions(std::vector<Session> sessions, std::uint64_t seed,
                                     std::size_t max_attacker = 2, std::size_t max_benign = 1);

}  // namespace takeover
