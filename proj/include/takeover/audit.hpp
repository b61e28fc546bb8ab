#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "takeover/time.hpp"

namespace takeover {

/// One cloud audit record: a login/application access or an account
/// operation.
struct AuditEvent {
  std::string id;
  std::string user_id;  // lowercase
  Instant timestamp = 0;
  std::optional<std::string> user_agent;
  std::optional<std::string> client_ip;  // canonical literal
  std::string operation;
  std::optional<std::string> application_id;

  /// Only login and application-access records carry both a user agent and
  /// a client IP.
  bool is_login() const { return user_agent.has_value() && client_ip.has_value(); }

  friend bool operator==(const AuditEvent&, const AuditEvent&) = default;
};

/// Sort order for a user's events: timestamp, then id.
bool event_before(const AuditEvent& a, const AuditEvent& b);

enum class RejectReason {
  Empty,
  Syntax,
  NotObject,
  MissingField,
  BadType,
  BadTimestamp,
  BadIp,
  DuplicateId,
};

std::string_view to_string(RejectReason r);

struct RejectRecord {
  std::size_t line = 0;  // 1-based
  RejectReason reason = RejectReason::Syntax;
  std::string detail;
};

/// Single-pass JSONL parser. Holds only the set of ids seen so far, so
/// duplicates can be rejected; the first occurrence of an id wins.
class CorpusParser {
 public:
  using Result = std::variant<AuditEvent, RejectRecord>;

  /// Parses the next physical line of the corpus.
  Result parse_line(std::string_view line);

  std::size_t lines_seen() const { return line_no_; }

 private:
  std::size_t line_no_ = 0;
  std::unordered_set<std::string> seen_ids_;
};

struct ParsedCorpus {
  std::vector<AuditEvent> events;
  std::vector<RejectRecord> rejects;
};

/// Streams `in` line by line, invoking exactly one callback per line.
void parse_corpus(std::istream& in, const std::function<void(AuditEvent&&)>& on_event,
                  const std::function<void(RejectRecord&&)>& on_reject);

ParsedCorpus parse_corpus(std::istream& in);

/// One JSONL record using the ingest field names, timestamp in UTC.
std::string serialize_event(const AuditEvent& e);

struct EmailRecord {
  std::string sender;  // lowercase
  Instant sent_at = 0;
  bool flagged_phishing = false;
};

struct CompromiseCase {
  std::string user_id;
  std::string organization;
  Instant t = 0;  // first confirmed compromise
  std::vector<AuditEvent> events;
  std::vector<EmailRecord> emails;
  std::vector<Instant> inbox_rule_detections;
  /// No login events in the historical window [t-60d, t-30d).
  bool insufficient_history = false;
  // t lies outside [first, last] event timestamp of the corpus.
  bool t_outside_span = false;
};

using CompromiseTimes = std::map<std::string, Instant>;
using RuleDetections = std::map<std::string, std::vector<Instant>>;

/// Organization of an account: the domain part of its email address.
std::string organization_of(std::string_view user_id);

/// One case per user in `compromise_times`, in user_id order. Events of other
/// users are dropped; each case's events are sorted by event_before.
std::vector<CompromiseCase> build_cases(std::vector<AuditEvent> events,
                                        const CompromiseTimes& compromise_times,
                                        const std::vector<EmailRecord>& emails,
                                        const RuleDetections& rule_detections);

/// Sets `insufficient_history` from the events already in the case.
void mark_history(CompromiseCase& c);

// Companion file loaders. `source` names the file in error messages.
CompromiseTimes load_compromise_times(std::istream& in, std::string_view source);
std::vector<EmailRecord> load_emails(std::istream& in, std::string_view source);
RuleDetections load_inbox_rules(std::istream& in, std::string_view source);

}  // namespace takeover
