#include "takeover/analytics.hpp"

#include <algorithm>
#include <stdexcept>

#include "takeover/csv.hpp"
#include "takeover/rng.hpp"

namespace takeover {

std::string_view to_string(AccessMode m) {
  switch (m) {
    case AccessMode::EndToEnd: return "end_to_end";
    case AccessMode::Segmented: return "segmented";
    case AccessMode::Indeterminate: return "indeterminate";
  }
  return "unknown";
}

std::string_view to_string(AppAccess a) {
  switch (a) {
    case AppAccess::AttackerOnly: return "attacker_only";
    case AppAccess::BenignOnly: return "benign_only";
    case AppAccess::Both: return "both";
  }
  return "unknown";
}

std::vector<const LabeledEvent*> attacker_events(std::span<const LabeledEvent> labeled) {
  std::vector<const LabeledEvent*> out;
  for (const auto& le : labeled) {
    if (le.label == Label::Attacker) out.push_back(&le);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
    return event_before(a->ev(), b->ev());
  });
  return out;
}

std::optional<Seconds> dwell_time(EventRefs events) {
  if (events.empty()) return std::nullopt;
  return events.back()->timestamp() - events.front()->timestamp();
}

std::optional<Gap> max_gap(EventRefs events) {
  if (events.size() < 2) return std::nullopt;
  Gap best{0, events[1]->timestamp() - events[0]->timestamp()};
  for (std::size_t i = 1; i + 1 < events.size(); ++i) {
    const Seconds g = events[i + 1]->timestamp() - events[i]->timestamp();
    if (g > best.length) best = {i, g};
  }
  return best;
}

std::optional<Seconds> max_interarrival(EventRefs events) {
  const auto g = max_gap(events);
  if (!g) return std::nullopt;
  return g->length;
}

namespace {

const std::string& location_of(const GeoInfo& g) { return g.subdivision ? *g.subdivision : g.country; }

}  // namespace

AttributeSets attribute_sets(EventRefs events) {
  AttributeSets s;
  for (const auto* le : events) {
    if (le->geo) {
      s.subdivisions.insert(location_of(*le->geo));
      if (le->geo->isp) s.isps.insert(*le->geo->isp);
    }
    s.user_agents.insert(le->ua);
  }
  return s;
}

std::optional<JaccardTriple> split_analysis(EventRefs events) {
  const auto gap = max_gap(events);
  if (!gap) return std::nullopt;
  const auto before = attribute_sets(events.subspan(0, gap->left + 1));
  const auto after = attribute_sets(events.subspan(gap->left + 1));
  return JaccardTriple{jaccard(before.subdivisions, after.subdivisions),
                       jaccard(before.user_agents, after.user_agents),
                       jaccard(before.isps, after.isps)};
}

std::optional<double> stability_ratio(EventRefs events) {
  if (events.empty()) return std::nullopt;
  std::set<std::string> locations;
  std::set<std::int64_t> hours;
  for (const auto* le : events) {
    if (le->geo) locations.insert(location_of(*le->geo));
    hours.insert(hour_bucket(le->timestamp()));
  }
  return static_cast<double>(locations.size()) / static_cast<double>(hours.size());
}

std::optional<double> access_rate(EventRefs events) {
  if (events.empty()) return std::nullopt;
  std::set<std::string> apps;
  std::set<std::int64_t> hours;
  for (const auto* le : events) {
    if (le->ev().application_id) apps.insert(*le->ev().application_id);
    hours.insert(hour_bucket(le->timestamp()));
  }
  return static_cast<double>(apps.size()) / static_cast<double>(hours.size());
}

AppUsage app_usage(std::span<const LabeledEvent> labeled,
                   const std::set<std::string, std::less<>>& email_apps) {
  AppUsage u;
  std::set<std::string> attacker_apps, benign_apps;
  for (const auto& le : labeled) {
    if (!le.ev().application_id) continue;
    (le.label == Label::Attacker ? attacker_apps : benign_apps).insert(*le.ev().application_id);
  }
  for (const auto& a : attacker_apps) {
    u.apps[a] = benign_apps.count(a) ? AppAccess::Both : AppAccess::AttackerOnly;
  }
  for (const auto& b : benign_apps) {
    if (!attacker_apps.count(b)) u.apps[b] = AppAccess::BenignOnly;
  }
  const auto is_email = [&](const std::string& a) { return email_apps.count(a) != 0; };
  u.any_email = std::any_of(attacker_apps.begin(), attacker_apps.end(), is_email);
  u.email_only =
      !attacker_apps.empty() && std::all_of(attacker_apps.begin(), attacker_apps.end(), is_email);
  return u;
}

SensitiveKind sensitive_kind(std::string_view operation) {
  std::string op = to_lower(trim(operation));
  while (!op.empty() && op.back() == '.') op.pop_back();
  if (op == "change user password") return SensitiveKind::ChangePassword;
  if (op.rfind("add oauth", 0) == 0) return SensitiveKind::AddOAuth;
  return SensitiveKind::None;
}

SensitiveOps sensitive_ops(std::span<const AuditEvent> case_events, EventRefs attackers,
                           Seconds window) {
  SensitiveOps out;
  if (attackers.empty()) return out;
  std::vector<Instant> times;
  times.reserve(attackers.size());
  for (const auto* le : attackers) times.push_back(le->timestamp());
  std::sort(times.begin(), times.end());
  for (const auto& e : case_events) {
    const auto kind = sensitive_kind(e.operation);
    if (kind == SensitiveKind::None) continue;
    const auto it = std::lower_bound(times.begin(), times.end(), e.timestamp - window);
    if (it == times.end() || *it > e.timestamp + window) continue;
    if (kind == SensitiveKind::ChangePassword) ++out.change_password;
    else ++out.add_oauth;
  }
  return out;
}

std::optional<Seconds> phish_gap(std::span<const EmailRecord> emails, EventRefs attackers,
                                 Instant from, Instant to) {
  if (attackers.empty()) return std::nullopt;
  std::optional<Instant> first_phish;
  for (const auto& m : emails) {
    if (!m.flagged_phishing || m.sent_at < from || m.sent_at > to) continue;
    if (!first_phish || m.sent_at < *first_phish) first_phish = m.sent_at;
  }
  if (!first_phish) return std::nullopt;
  return *first_phish - attackers.front()->timestamp();
}

CaseReport analyze_case(const CompromiseCase& c, const CaseClassification& cls,
                        const AnalysisConfig& cfg) {
  CaseReport r;
  r.user_id = c.user_id;
  r.organization = c.organization;
  r.login_events = cls.events.size();
  const auto attackers = attacker_events(cls.events);
  r.attacker_event_count = attackers.size();
  if (!attackers.empty()) r.first_attack = attackers.front()->timestamp();
  r.dwell_seconds = dwell_time(attackers);
  const auto gap = max_gap(attackers);
  if (gap) r.max_interarrival_seconds = gap->length;
  r.mode = segment_mode(r.max_interarrival_seconds, cfg.day);

  if (r.mode == AccessMode::Segmented) {
    const EventRefs all(attackers);
    const auto before = all.subspan(0, gap->left + 1);
    const auto after = all.subspan(gap->left + 1);
    r.jaccard = split_analysis(all);
    r.stability_ratio = stability_ratio(after);
    r.access_rate_before = access_rate(before);
    r.access_rate_after = access_rate(after);
    r.escalation = *r.access_rate_after > *r.access_rate_before;
  }

  auto usage = app_usage(cls.events, cfg.email_apps);
  r.apps_accessed = std::move(usage.apps);
  r.email_only = usage.email_only;
  r.any_email = usage.any_email;
  r.sensitive_ops = sensitive_ops(c.events, attackers, cfg.indicator_window);
  r.phish_gap_seconds = phish_gap(c.emails, attackers, c.t - kMonth, c.t + kMonth);
  r.phish_before_attack = r.phish_gap_seconds && *r.phish_gap_seconds < 0;
  return r;
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

}  // namespace

std::vector<CaseReport> dedup_sample(std::span<const CaseReport> reports, std::uint64_t seed) {
  std::map<std::pair<std::string, std::int64_t>, std::vector<const CaseReport*>> groups;
  for (const auto& r : reports) {
    if (r.attacker_event_count == 0 || !r.first_attack) continue;
    groups[{r.organization, floor_div(*r.first_attack, kMonth)}].push_back(&r);
  }
  std::vector<CaseReport> out;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(),
              [](const auto* a, const auto* b) { return a->user_id < b->user_id; });
    Rng rng = Rng::derive(seed, fnv1a(key.first + "#" + std::to_string(key.second)));
    out.push_back(*members[rng.below(members.size())]);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.user_id < b.user_id; });
  return out;
}

BreachOverlap breach_overlap(std::span<const CaseReport> reports,
                             const std::unordered_set<std::string>& breached_accounts,
                             const std::map<std::string, std::string>& org_sectors) {
  BreachOverlap out;
  std::set<std::string> accounts;
  std::map<std::string, std::set<std::string>> orgs;
  for (const auto& [org, sector] : org_sectors) out.organizations_per_sector[sector];
  for (const auto& r : reports) {
    if (!breached_accounts.count(r.user_id)) continue;
    accounts.insert(r.user_id);
    const auto it = org_sectors.find(r.organization);
    orgs[it == org_sectors.end() ? "unknown" : it->second].insert(r.organization);
  }
  for (const auto& [sector, set] : orgs) out.organizations_per_sector[sector] = set.size();
  out.accounts = accounts.size();
  return out;
}

std::vector<std::pair<double, double>> ecdf(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("ecdf of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::vector<std::pair<double, double>> out;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    out.emplace_back(v[i], i + 1 == v.size() ? 1.0 : static_cast<double>(i + 1) / n);
  }
  return out;
}

void AggregateReport::add(const CaseReport& r) {
  ++cases_;
  for (const auto& [app, access] : r.apps_accessed) {
    if (cfg_.email_apps.count(app)) continue;
    auto& counts = apps_[app];
    if (access != AppAccess::BenignOnly) ++counts.via_attacker;
    if (access == AppAccess::AttackerOnly) ++counts.attacker_only;
    if (access == AppAccess::BenignOnly) ++counts.benign_only;
  }
  if (r.attacker_event_count == 0) return;
  ++with_attacks_;
  if (r.dwell_seconds) {
    dwell_.push_back(static_cast<double>(*r.dwell_seconds));
    if (*r.dwell_seconds >= cfg_.day) ++dwell_day_;
    if (*r.dwell_seconds >= cfg_.week) ++dwell_week_;
  }
  if (r.max_interarrival_seconds) max_ia_.push_back(static_cast<double>(*r.max_interarrival_seconds));
  if (r.mode == AccessMode::EndToEnd) ++end_to_end_;
  if (r.mode == AccessMode::Segmented) {
    ++segmented_;
    if (r.jaccard && r.jaccard->geo) jaccard_geo_.push_back(*r.jaccard->geo);
    const bool low = r.jaccard && r.jaccard->geo && r.jaccard->isp &&
                     *r.jaccard->geo <= kLowSimilarity && *r.jaccard->isp <= kLowSimilarity;
    if (low) {
      ++low_similarity_;
      if (r.escalation.value_or(false)) ++escalated_;
    }
    if (r.stability_ratio) {
      stability_.push_back(*r.stability_ratio);
      if (*r.stability_ratio <= 1.0) ++stability_le1_;
      if (*r.stability_ratio < 1.0) ++stability_lt1_;
    }
  }
  if (r.email_only) ++email_only_;
  if (r.any_email) ++any_email_;
  if (r.sensitive_ops.change_password > 0) ++password_accounts_;
  if (r.sensitive_ops.add_oauth > 0) ++oauth_accounts_;
  if (r.phish_gap_seconds) {
    phish_gap_.push_back(static_cast<double>(*r.phish_gap_seconds));
    if (*r.phish_gap_seconds < cfg_.day) ++phish_lt_day_;
    if (*r.phish_gap_seconds > 3 * cfg_.day) ++phish_gt_3d_;
  }
}

void AggregateReport::merge(const AggregateReport& o) {
  cases_ += o.cases_;
  with_attacks_ += o.with_attacks_;
  dwell_day_ += o.dwell_day_;
  dwell_week_ += o.dwell_week_;
  end_to_end_ += o.end_to_end_;
  segmented_ += o.segmented_;
  low_similarity_ += o.low_similarity_;
  escalated_ += o.escalated_;
  stability_le1_ += o.stability_le1_;
  stability_lt1_ += o.stability_lt1_;
  email_only_ += o.email_only_;
  any_email_ += o.any_email_;
  password_accounts_ += o.password_accounts_;
  oauth_accounts_ += o.oauth_accounts_;
  phish_lt_day_ += o.phish_lt_day_;
  phish_gt_3d_ += o.phish_gt_3d_;
  for (const auto& [app, c] : o.apps_) {
    auto& mine = apps_[app];
    mine.via_attacker += c.via_attacker;
    mine.attacker_only += c.attacker_only;
    mine.benign_only += c.benign_only;
  }
  auto append = [](std::vector<double>& dst, const std::vector<double>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
  };
  append(dwell_, o.dwell_);
  append(max_ia_, o.max_ia_);
  append(jaccard_geo_, o.jaccard_geo_);
  append(stability_, o.stability_);
  append(phish_gap_, o.phish_gap_);
}

std::map<std::string, std::vector<double>> AggregateReport::series() const {
  std::map<std::string, std::vector<double>> out{{"dwell", dwell_},
                                                 {"max_interarrival", max_ia_},
                                                 {"jaccard_geo", jaccard_geo_},
                                                 {"stability", stability_},
                                                 {"phish_gap", phish_gap_}};
  for (auto& [name, v] : out) std::sort(v.begin(), v.end());
  return out;
}

}  // namespace takeover
