#include "takeover/report.hpp"

#include <charconv>
#include <cmath>

namespace takeover {

double round4(double x) { return std::round(x * 1e4) / 1e4; }

std::string format_number(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

Json opt_ratio(const std::optional<double>& v) { return v ? Json(round4(*v)) : Json(nullptr); }

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json fraction(std::size_t num, std::size_t den) {
  return den == 0 ? Json(nullptr)
                  : Json(round4(static_cast<double>(num) / static_cast<double>(den)));
}

Json count_and_share(std::size_t num, std::size_t den) {
  return Json{{"count", num}, {"fraction", fraction(num, den)}};
}

}  // namespace

Json to_json(const EvalMetrics& m) {
  return Json{{"tp", m.tp},
              {"fp", m.fp},
              {"fn", m.fn},
              {"tn", m.tn},
              {"precision", opt_ratio(m.precision)},
              {"fpr", opt_ratio(m.fpr)},
              {"fnr", opt_ratio(m.fnr)},
              {"recall", opt_ratio(m.recall)}};
}

Json to_json(const CaseReport& r) {
  Json j;
  j["user_id"] = r.user_id;
  j["organization"] = r.organization;
  j["login_events"] = r.login_events;
  j["attacker_events"] = r.attacker_event_count;
  j["first_attack"] = r.first_attack ? Json(format_iso8601(*r.first_attack)) : Json(nullptr);
  j["dwell_seconds"] = opt(r.dwell_seconds);
  j["max_interarrival_seconds"] = opt(r.max_interarrival_seconds);
  j["mode"] = std::string(to_string(r.mode));
  if (r.jaccard) {
    j["jaccard"] = Json{{"geo", opt_ratio(r.jaccard->geo)},
                        {"ua", opt_ratio(r.jaccard->ua)},
                        {"isp", opt_ratio(r.jaccard->isp)}};
  } else {
    j["jaccard"] = nullptr;
  }
  j["stability_ratio"] = opt_ratio(r.stability_ratio);
  j["access_rate_before"] = opt_ratio(r.access_rate_before);
  j["access_rate_after"] = opt_ratio(r.access_rate_after);
  j["escalation"] = opt(r.escalation);
  j["email_only"] = r.email_only;
  j["any_email"] = r.any_email;
  Json apps = Json::object();
  for (const auto& [app, access] : r.apps_accessed) apps[app] = std::string(to_string(access));
  j["apps_accessed"] = std::move(apps);
  j["sensitive_ops"] = Json{{"change_password", r.sensitive_ops.change_password},
                            {"add_oauth", r.sensitive_ops.add_oauth}};
  j["phish_gap_seconds"] = opt(r.phish_gap_seconds);
  j["phish_before_attack"] = r.phish_before_attack;
  return j;
}

Json to_json(const AggregateReport& a) {
  const std::size_t n = a.with_attacks();
  Json j;
  j["cases"] = a.cases();
  j["cases_with_attacks"] = n;
  j["dwell_at_least_day"] = count_and_share(a.dwell_at_least_day(), n);
  j["dwell_at_least_week"] = count_and_share(a.dwell_at_least_week(), n);
  j["end_to_end"] = count_and_share(a.end_to_end(), n);
  j["segmented"] = count_and_share(a.segmented(), n);
  j["segmented_low_similarity"] = count_and_share(a.low_similarity(), a.segmented());
  j["low_similarity_escalated"] = count_and_share(a.escalated(), a.low_similarity());
  const std::size_t with_ratio = a.series().at("stability").size();
  j["stability_at_most_one"] = count_and_share(a.stability_at_most_one(), with_ratio);
  j["stability_below_one"] = count_and_share(a.stability_below_one(), with_ratio);
  j["email_only"] = count_and_share(a.email_only(), n);
  j["any_email"] = count_and_share(a.any_email(), n);
  j["password_change_accounts"] = count_and_share(a.password_change_accounts(), n);
  j["oauth_accounts"] = count_and_share(a.oauth_accounts(), n);
  const std::size_t with_phish = a.series().at("phish_gap").size();
  j["phish_within_day"] = count_and_share(a.phish_within_day(), with_phish);
  j["phish_over_three_days"] = count_and_share(a.phish_over_three_days(), with_phish);
  Json apps = Json::object();
  for (const auto& [app, c] : a.non_email_apps()) {
    apps[app] = Json{{"via_attacker", c.via_attacker},
                     {"attacker_only", c.attacker_only},
                     {"benign_only", c.benign_only},
                     {"via_attacker_fraction", fraction(c.via_attacker, n)}};
  }
  j["non_email_apps"] = std::move(apps);
  return j;
}

Json to_json(const BreachOverlap& b) {
  Json sectors = Json::object();
  for (const auto& [sector, count] : b.organizations_per_sector) sectors[sector] = count;
  return Json{{"breached_accounts", b.accounts}, {"organizations_per_sector", std::move(sectors)}};
}

void write_ecdf_csv(std::ostream& out, std::span<const double> values) {
  out << "value,fraction\n";
  if (values.empty()) return;
  for (const auto& [v, f] : ecdf(values)) {
    out << format_number(v) << ',' << format_number(f) << '\n';
  }
}

}  // namespace takeover
