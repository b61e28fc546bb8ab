#include "takeover/audit.hpp"

#include <algorithm>
#include <limits>

#include <json.hpp>

#include "takeover/csv.hpp"
#include "takeover/ip.hpp"

namespace takeover {

using nlohmann::json;

bool event_before(const AuditEvent& a, const AuditEvent& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.id < b.id;
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::Empty: return "empty";
    case RejectReason::Syntax: return "syntax";
    case RejectReason::NotObject: return "not_object";
    case RejectReason::MissingField: return "missing_field";
    case RejectReason::BadType: return "bad_type";
    case RejectReason::BadTimestamp: return "bad_timestamp";
    case RejectReason::BadIp: return "bad_ip";
    case RejectReason::DuplicateId: return "duplicate_id";
  }
  return "unknown";
}

namespace {

struct FieldError {
  RejectReason reason;
  std::string detail;
};

// Absent, null and "" all mean "not set".
std::optional<std::string> optional_string(const json& obj, const char* key,
                                           std::optional<FieldError>& err) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    err = FieldError{RejectReason::BadType, std::string(key) + " is not a string"};
    return std::nullopt;
  }
  const auto& s = it->get_ref<const std::string&>();
  if (trim(s).empty()) return std::nullopt;
  return s;
}

std::optional<std::string> required_string(const json& obj, const char* key,
                                           std::optional<FieldError>& err) {
  if (err) return std::nullopt;
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    err = FieldError{RejectReason::MissingField, key};
    return std::nullopt;
  }
  if (!it->is_string()) {
    err = FieldError{RejectReason::BadType, std::string(key) + " is not a string"};
    return std::nullopt;
  }
  return it->get<std::string>();
}

}  // namespace

CorpusParser::Result CorpusParser::parse_line(std::string_view line) {
  const std::size_t line_no = ++line_no_;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (trim(line).empty()) return RejectRecord{line_no, RejectReason::Empty, "blank line"};

  json obj = json::parse(line.begin(), line.end(), nullptr, false);
  if (obj.is_discarded()) return RejectRecord{line_no, RejectReason::Syntax, "invalid JSON"};
  if (!obj.is_object()) {
    return RejectRecord{line_no, RejectReason::NotObject, "record is not a JSON object"};
  }

  std::optional<FieldError> err;
  auto id = required_string(obj, "Id", err);
  auto user = required_string(obj, "UserId", err);
  auto operation = required_string(obj, "Operation", err);
  auto created = required_string(obj, "CreationTime", err);
  auto ua = err ? std::nullopt : optional_string(obj, "UserAgent", err);
  auto ip_text = err ? std::nullopt : optional_string(obj, "ClientIp", err);
  auto app = err ? std::nullopt : optional_string(obj, "ApplicationId", err);
  if (err) return RejectRecord{line_no, err->reason, std::move(err->detail)};

  if (trim(*id).empty()) return RejectRecord{line_no, RejectReason::MissingField, "Id"};
  if (trim(*user).empty()) return RejectRecord{line_no, RejectReason::MissingField, "UserId"};

  const auto ts = parse_iso8601(trim(*created));
  if (!ts) {
    return RejectRecord{line_no, RejectReason::BadTimestamp,
                        "CreationTime '" + *created + "' is not ISO-8601 with an offset"};
  }

  AuditEvent ev;
  if (ip_text) {
    const auto ip = IpAddress::parse(trim(*ip_text));
    if (!ip) return RejectRecord{line_no, RejectReason::BadIp, "ClientIp '" + *ip_text + "'"};
    ev.client_ip = ip->to_string();
  }
  if (!seen_ids_.insert(*id).second) {
    return RejectRecord{line_no, RejectReason::DuplicateId, "Id '" + *id + "' seen earlier"};
  }
  ev.id = std::move(*id);
  ev.user_id = to_lower(trim(*user));
  ev.timestamp = *ts;
  ev.user_agent = std::move(ua);
  ev.operation = std::move(*operation);
  ev.application_id = std::move(app);
  return ev;
}

void parse_corpus(std::istream& in, const std::function<void(AuditEvent&&)>& on_event,
                  const std::function<void(RejectRecord&&)>& on_reject) {
  CorpusParser parser;
  std::string line;
  while (std::getline(in, line)) {
    auto result = parser.parse_line(line);
    if (auto* ev = std::get_if<AuditEvent>(&result)) {
      on_event(std::move(*ev));
    } else {
      on_reject(std::move(std::get<RejectRecord>(result)));
    }
  }
}

ParsedCorpus parse_corpus(std::istream& in) {
  ParsedCorpus out;
  parse_corpus(
      in, [&](AuditEvent&& e) { out.events.push_back(std::move(e)); },
      [&](RejectRecord&& r) { out.rejects.push_back(std::move(r)); });
  return out;
}

std::string serialize_event(const AuditEvent& e) {
  json obj;
  obj["Id"] = e.id;
  obj["UserId"] = e.user_id;
  obj["CreationTime"] = format_iso8601(e.timestamp);
  obj["Operation"] = e.operation;
  obj["UserAgent"] = e.user_agent ? json(*e.user_agent) : json(nullptr);
  obj["ClientIp"] = e.client_ip ? json(*e.client_ip) : json(nullptr);
  obj["ApplicationId"] = e.application_id ? json(*e.application_id) : json(nullptr);
  return obj.dump();
}

std::string organization_of(std::string_view user_id) {
  const auto at = user_id.rfind('@');
  if (at == std::string_view::npos) return std::string(user_id);
  return std::string(user_id.substr(at + 1));
}

void mark_history(CompromiseCase& c) {
  const Instant lo = c.t - 2 * kMonth;
  const Instant hi = c.t - kMonth;
  c.insufficient_history = std::none_of(c.events.begin(), c.events.end(), [&](const auto& e) {
    return e.is_login() && e.timestamp >= lo && e.timestamp < hi;
  });
}

std::vector<CompromiseCase> build_cases(std::vector<AuditEvent> events,
                                        const CompromiseTimes& compromise_times,
                                        const std::vector<EmailRecord>& emails,
                                        const RuleDetections& rule_detections) {
  std::map<std::string, CompromiseCase> by_user;
  for (const auto& [user, t] : compromise_times) {
    auto& c = by_user[to_lower(user)];
    c.user_id = to_lower(user);
    c.organization = organization_of(c.user_id);
    c.t = t;
  }

  Instant first = std::numeric_limits<Instant>::max();
  Instant last = std::numeric_limits<Instant>::min();
  for (auto& e : events) {
    first = std::min(first, e.timestamp);
    last = std::max(last, e.timestamp);
    const auto it = by_user.find(e.user_id);
    if (it != by_user.end()) it->second.events.push_back(std::move(e));
  }
  for (const auto& m : emails) {
    const auto it = by_user.find(m.sender);
    if (it != by_user.end()) it->second.emails.push_back(m);
  }
  for (const auto& [user, times] : rule_detections) {
    const auto it = by_user.find(to_lower(user));
    if (it == by_user.end()) continue;
    auto& dst = it->second.inbox_rule_detections;
    dst.insert(dst.end(), times.begin(), times.end());
  }

  std::vector<CompromiseCase> out;
  out.reserve(by_user.size());
  for (auto& [user, c] : by_user) {
    std::sort(c.events.begin(), c.events.end(), event_before);
    std::sort(c.emails.begin(), c.emails.end(),
              [](const auto& a, const auto& b) { return a.sent_at < b.sent_at; });
    std::sort(c.inbox_rule_detections.begin(), c.inbox_rule_detections.end());
    mark_history(c);
    c.t_outside_span = first > last || c.t < first || c.t > last;
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

Instant require_time(std::string_view text, std::string_view source, std::size_t line) {
  const auto t = parse_iso8601(trim(text));
  if (!t) {
    throw InputError(std::string(source) + ":" + std::to_string(line) + ": bad timestamp '" +
                     std::string(text) + "'");
  }
  return *t;
}

void require_columns(const std::vector<std::string>& row, std::size_t n, std::string_view source,
                     std::size_t line) {
  if (row.size() < n) {
    throw InputError(std::string(source) + ":" + std::to_string(line) + ": expected " +
                     std::to_string(n) + " columns");
  }
}

}  // namespace

CompromiseTimes load_compromise_times(std::istream& in, std::string_view source) {
  CsvReader csv(in);
  csv.expect_header({"user_id", "confirmed_at"}, source);
  CompromiseTimes out;
  std::vector<std::string> row;
  while (csv.next(row)) {
    require_columns(row, 2, source, csv.line());
    const std::string user = to_lower(trim(row[0]));
    const Instant t = require_time(row[1], source, csv.line());
    // Several confirmations for one user: the earliest is t.
    auto [it, inserted] = out.emplace(user, t);
    if (!inserted) it->second = std::min(it->second, t);
  }
  return out;
}

std::vector<EmailRecord> load_emails(std::istream& in, std::string_view source) {
  CsvReader csv(in);
  csv.expect_header({"sender", "sent_at", "flagged_phishing"}, source);
  std::vector<EmailRecord> out;
  std::vector<std::string> row;
  while (csv.next(row)) {
    require_columns(row, 3, source, csv.line());
    const auto flag = trim(row[2]);
    if (flag != "0" && flag != "1") {
      throw InputError(std::string(source) + ":" + std::to_string(csv.line()) +
                       ": flagged_phishing must be 0 or 1");
    }
    out.push_back({to_lower(trim(row[0])), require_time(row[1], source, csv.line()), flag == "1"});
  }
  return out;
}

RuleDetections load_inbox_rules(std::istream& in, std::string_view source) {
  CsvReader csv(in);
  csv.expect_header({"user_id", "detected_at"}, source);
  RuleDetections out;
  std::vector<std::string> row;
  while (csv.next(row)) {
    require_columns(row, 2, source, csv.line());
    out[to_lower(trim(row[0]))].push_back(require_time(row[1], source, csv.line()));
  }
  return out;
}

}  // namespace takeover
