#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "takeover/profile.hpp"
#include "takeover/session.hpp"

namespace takeover {

using EventRefs = std::span<const LabeledEvent* const>;

/// Attacker-labeled events in time order.
std::vector<const LabeledEvent*> attacker_events(std::span<const LabeledEvent> labeled);

/// Seconds between the first and the last event; absent for no events.
std::optional<Seconds> dwell_time(EventRefs events);

struct Gap {
  std::size_t left = 0;  // index of the event before the gap
  Seconds length = 0;
};

/// Largest gap between consecutive events, earliest on ties. Absent for
/// fewer than two events.
std::optional<Gap> max_gap(EventRefs events);
std::optional<Seconds> max_interarrival(EventRefs events);

enum class AccessMode : std::uint8_t { EndToEnd, Segmented, Indeterminate };
std::string_view to_string(AccessMode m);

constexpr AccessMode segment_mode(std::optional<Seconds> max_ia, Seconds day = kDay) {
  if (!max_ia) return AccessMode::Indeterminate;
  return *max_ia >= day ? AccessMode::Segmented : AccessMode::EndToEnd;
}

/// |a ∩ b| / |a ∪ b|; absent when both are empty.
template <typename T, typename Cmp>
std::optional<double> jaccard(const std::set<T, Cmp>& a, const std::set<T, Cmp>& b) {
  if (a.empty() && b.empty()) return std::nullopt;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  const Cmp less = a.key_comp();
  while (ia != a.end() && ib != b.end()) {
    if (less(*ia, *ib)) {
      ++ia;
    } else if (less(*ib, *ia)) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

/// Attribute sets of a run of attacker events. The location is the
/// subdivision, or the country when the table has none.
struct AttributeSets {
  std::set<std::string> subdivisions;
  std::set<NormalizedUA> user_agents;
  std::set<std::string> isps;
};

AttributeSets attribute_sets(EventRefs events);

struct JaccardTriple {
  std::optional<double> geo, ua, isp;
};

/// Splits at the maximal gap (left endpoint before, right endpoint after)
/// and compares location, user agent and ISP sets. Absent for fewer than
/// two events.
std::optional<JaccardTriple> split_analysis(EventRefs events);

/// Distinct locations per distinct UTC login hour.
std::optional<double> stability_ratio(EventRefs events);

/// Distinct application ids per distinct UTC hour.
std::optional<double> access_rate(EventRefs events);

enum class AppAccess : std::uint8_t { AttackerOnly, BenignOnly, Both };
std::string_view to_string(AppAccess a);

struct AppUsage {
  std::map<std::string, AppAccess> apps;
  /// At least one attacker event touched an application and all of them
  /// were email applications.
  bool email_only = false;
  bool any_email = false;
};

AppUsage app_usage(std::span<const LabeledEvent> labeled,
                   const std::set<std::string, std::less<>>& email_apps);

struct SensitiveOps {
  std::size_t change_password = 0;
  std::size_t add_oauth = 0;
};

enum class SensitiveKind : std::uint8_t { None, ChangePassword, AddOAuth };

/// Case-insensitive, trailing '.' ignored: "Change user password",
/// "Add OAuth..." prefixes.
SensitiveKind sensitive_kind(std::string_view operation);

/// Counts sensitive operations within +/- window of any attacker event.
SensitiveOps sensitive_ops(std::span<const AuditEvent> case_events, EventRefs attackers,
                           Seconds window = kIndicatorWindow);

/// First flagged email time minus first attacker login, restricted to emails
/// sent inside [from, to]. Signed.
std::optional<Seconds> phish_gap(std::span<const EmailRecord> emails, EventRefs attackers,
                                 Instant from, Instant to);

struct AnalysisConfig {
  Seconds day = kDay;
  Seconds week = kWeek;
  Seconds indicator_window = kIndicatorWindow;
  std::set<std::string, std::less<>> email_apps;
};

struct CaseReport {
  std::string user_id;
  std::string organization;
  std::size_t login_events = 0;
  std::size_t attacker_event_count = 0;
  std::optional<Instant> first_attack;
  std::optional<Seconds> dwell_seconds;
  std::optional<Seconds> max_interarrival_seconds;
  AccessMode mode = AccessMode::Indeterminate;
  std::optional<JaccardTriple> jaccard;  // iff Segmented
  std::optional<double> stability_ratio;
  std::optional<double> access_rate_before;
  std::optional<double> access_rate_after;
  std::optional<bool> escalation;
  bool email_only = false;
  bool any_email = false;
  std::map<std::string, AppAccess> apps_accessed;
  SensitiveOps sensitive_ops;
  std::optional<Seconds> phish_gap_seconds;
  bool phish_before_attack = false;
};

CaseReport analyze_case(const CompromiseCase& c, const CaseClassification& cls,
                        const AnalysisConfig& cfg);

/// One case from each (organization, 30-day bucket of first attack) group,
/// chosen by a seeded uniform draw. Cases without attacker events are
/// dropped first. Output is in user_id order and independent of input order.
std::vector<CaseReport> dedup_sample(std::span<const CaseReport> reports, std::uint64_t seed);

struct BreachOverlap {
  std::map<std::string, std::size_t> organizations_per_sector;
  std::size_t accounts = 0;
};

/// Organizations without a sector fall under "unknown".
BreachOverlap breach_overlap(std::span<const CaseReport> reports,
                             const std::unordered_set<std::string>& breached_accounts,
                             const std::map<std::string, std::string>& org_sectors);

/// Sorted distinct values with cumulative fractions; the last is exactly 1.
/// Throws std::invalid_argument on empty input.
std::vector<std::pair<double, double>> ecdf(std::span<const double> values);

inline constexpr double kLowSimilarity = 0.3;

/// Population summary over case reports. add() and merge() are associative
/// and commutative; value series are sorted on output.
class AggregateReport {
 public:
  struct AppCounts {
    std::size_t via_attacker = 0;
    std::size_t attacker_only = 0;
    std::size_t benign_only = 0;
  };

  explicit AggregateReport(AnalysisConfig cfg = {}) : cfg_(std::move(cfg)) {}

  void add(const CaseReport& r);
  void merge(const AggregateReport& other);

  std::size_t cases() const { return cases_; }
  std::size_t with_attacks() const { return with_attacks_; }
  std::size_t dwell_at_least_day() const { return dwell_day_; }
  std::size_t dwell_at_least_week() const { return dwell_week_; }
  std::size_t end_to_end() const { return end_to_end_; }
  std::size_t segmented() const { return segmented_; }
  std::size_t low_similarity() const { return low_similarity_; }
  std::size_t escalated() const { return escalated_; }
  std::size_t stability_at_most_one() const { return stability_le1_; }
  std::size_t stability_below_one() const { return stability_lt1_; }
  std::size_t email_only() const { return email_only_; }
  std::size_t any_email() const { return any_email_; }
  std::size_t password_change_accounts() const { return password_accounts_; }
  std::size_t oauth_accounts() const { return oauth_accounts_; }
  std::size_t phish_within_day() const { return phish_lt_day_; }
  std::size_t phish_over_three_days() const { return phish_gt_3d_; }
  const std::map<std::string, AppCounts>& non_email_apps() const { return apps_; }

  /// Series named dwell, max_interarrival, jaccard_geo, stability, phish_gap.
  std::map<std::string, std::vector<double>> series() const;

 private:
  AnalysisConfig cfg_;
  std::size_t cases_ = 0, with_attacks_ = 0, dwell_day_ = 0, dwell_week_ = 0;
  std::size_t end_to_end_ = 0, segmented_ = 0, low_similarity_ = 0, escalated_ = 0;
  std::size_t stability_le1_ = 0, stability_lt1_ = 0, email_only_ = 0, any_email_ = 0;
  std::size_t password_accounts_ = 0, oauth_accounts_ = 0, phish_lt_day_ = 0, phish_gt_3d_ = 0;
  std::map<std::string, AppCounts> apps_;
  std::vector<double> dwell_, max_ia_, jaccard_geo_, stability_, phish_gap_;
};

}  // namespace takeover
