#include "takeover/profile.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <unordered_map>

namespace takeover {

std::string_view to_string(Label l) { return l == Label::Attacker ? "attacker" : "benign"; }
std::string_view to_string(Phase p) { return p == Phase::PreT ? "pre_t" : "post_t"; }

bool HistoricalProfile::has_subdivision_in(std::string_view country) const {
  const std::string prefix = std::string(country) + "-";
  const auto it = subdivisions.lower_bound(prefix);
  return it != subdivisions.end() && it->rfind(prefix, 0) == 0;
}

void HistoricalProfile::add(const GeoInfo& geo, const NormalizedUA& ua) {
  countries.insert(geo.country);
  if (geo.subdivision) subdivisions.insert(*geo.subdivision);
  user_agents.insert(ua);
}

namespace {

bool in_history(const CompromiseCase& c, Instant ts) {
  return ts >= c.t - 2 * kMonth && ts < c.t - kMonth;
}

}  // namespace

std::variant<HistoricalProfile, InsufficientHistory> build_profile(
    const CompromiseCase& c, std::span<const GeoLookup> enriched) {
  assert(enriched.size() == c.events.size());
  HistoricalProfile p;
  p.user_id = c.user_id;
  p.window_start = c.t - 2 * kMonth;
  p.window_end = c.t - kMonth;
  for (std::size_t i = 0; i < c.events.size(); ++i) {
    const auto& e = c.events[i];
    const GeoInfo* geo = resolved(enriched[i]);
    if (!e.is_login() || !geo || !in_history(c, e.timestamp)) continue;
    p.add(*geo, normalize_ua(*e.user_agent));
  }
  if (p.empty()) return InsufficientHistory{c.user_id};
  return p;
}

FeatureVector extract_features(const GeoInfo& geo, const NormalizedUA& ua,
                               const HistoricalProfile& profile) {
  FeatureVector f;
  if (!profile.countries.count(geo.country)) {
    f.geo = 2;
  } else if (geo.subdivision) {
    f.geo = profile.subdivisions.count(*geo.subdivision) ? 0 : 1;
  } else {
    // Country known but the table has no subdivision for this IP.
    f.geo = profile.has_subdivision_in(geo.country) ? 1 : 0;
  }
  f.ua = profile.user_agents.count(ua) ? 0 : 1;
  return f;
}

std::variant<CaseClassification, InsufficientHistory> classify_case(
    const CompromiseCase& c, std::span<const GeoLookup> enriched) {
  auto built = build_profile(c, enriched);
  if (auto* missing = std::get_if<InsufficientHistory>(&built)) return *missing;

  CaseClassification out;
  out.profile = std::move(std::get<HistoricalProfile>(built));
  out.augmented = out.profile;

  const Instant lo = c.t - kMonth;
  const Instant hi = c.t + kMonth;
  std::unordered_map<std::string, NormalizedUA> ua_cache;
  auto normalized = [&](const std::string& raw) -> const NormalizedUA& {
    auto it = ua_cache.find(raw);
    if (it == ua_cache.end()) it = ua_cache.emplace(raw, normalize_ua(raw)).first;
    return it->second;
  };

  // c.events is already sorted, so phase 1 events all precede phase 2 ones.
  bool augmented = false;
  for (std::size_t i = 0; i < c.events.size(); ++i) {
    const auto& e = c.events[i];
    if (!e.is_login() || e.timestamp < lo || e.timestamp > hi) continue;
    LabeledEvent le;
    le.event = &e;
    le.ua = normalized(*e.user_agent);
    le.phase = e.timestamp < c.t ? Phase::PreT : Phase::PostT;
    if (le.phase == Phase::PostT && !augmented) {
      for (const auto& prior : out.events) {
        if (prior.label == Label::Benign && prior.geo) out.augmented.add(*prior.geo, prior.ua);
      }
      augmented = true;
    }
    if (const GeoInfo* geo = resolved(enriched[i])) {
      le.geo = *geo;
      const auto& profile = le.phase == Phase::PreT ? out.profile : out.augmented;
      le.features = extract_features(*geo, le.ua, profile);
      le.label = classify(*le.features);
    } else {
      le.unclassifiable = std::get<NotFound>(enriched[i]).reason;
      le.label = Label::Benign;
      ++out.unclassifiable;
    }
    if (le.label == Label::Attacker) ++out.attacker_events;
    out.events.push_back(std::move(le));
  }
  if (!augmented) {
    for (const auto& prior : out.events) {
      if (prior.label == Label::Benign && prior.geo) out.augmented.add(*prior.geo, prior.ua);
    }
  }
  return out;
}

std::optional<std::string> home_territory(const CompromiseCase& c,
                                          std::span<const GeoLookup> enriched) {
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < c.events.size(); ++i) {
    const auto& e = c.events[i];
    const GeoInfo* geo = resolved(enriched[i]);
    if (e.is_login() && geo && geo->subdivision && in_history(c, e.timestamp)) {
      ++counts[*geo->subdivision];
    }
  }
  std::optional<std::string> best;
  std::size_t best_count = 0;
  for (const auto& [sub, n] : counts) {  // map order gives the lexicographic tie-break
    if (n > best_count) {
      best = sub;
      best_count = n;
    }
  }
  return best;
}

}  // namespace takeover
