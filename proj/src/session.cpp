#include "takeover/session.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "takeover/csv.hpp"
#include "takeover/rng.hpp"

namespace takeover {

std::string_view to_string(TruthSource s) {
  switch (s) {
    case TruthSource::Indicators: return "indicators";
    case TruthSource::Manual: return "manual";
    case TruthSource::Sidecar: return "sidecar";
  }
  return "unknown";
}

std::vector<Session> sessionize(std::span<const LabeledEvent> labeled) {
  std::map<SessionKey, std::vector<const LabeledEvent*>> groups;
  for (const auto& le : labeled) {
    groups[SessionKey{*le.ev().client_ip, le.ua}].push_back(&le);
  }

  std::vector<Session> out;
  auto emit = [&](const SessionKey& key, std::vector<const LabeledEvent*> members,
                  std::optional<Phase> phase) {
    if (members.empty()) return;
    std::sort(members.begin(), members.end(), [](const auto* a, const auto* b) {
      return event_before(a->ev(), b->ev());
    });
    Session s;
    s.user_id = members.front()->ev().user_id;
    s.key = key;
    s.phase = phase;
    s.rule_label = members.front()->label;
    if (members.front()->unclassifiable) s.flags.emplace_back("unclassifiable");
    s.events = std::move(members);
    out.push_back(std::move(s));
  };

  for (auto& [key, members] : groups) {
    const bool uniform = std::all_of(members.begin(), members.end(), [&](const auto* le) {
      return le->label == members.front()->label;
    });
    if (uniform) {
      emit(key, std::move(members), std::nullopt);
      continue;
    }
    std::vector<const LabeledEvent*> pre, post;
    for (const auto* le : members) (le->phase == Phase::PreT ? pre : post).push_back(le);
    emit(key, std::move(pre), Phase::PreT);
    emit(key, std::move(post), Phase::PostT);
  }

  std::sort(out.begin(), out.end(), [](const Session& a, const Session& b) {
    if (a.first_time() != b.first_time()) return a.first_time() < b.first_time();
    if (a.key != b.key) return a.key < b.key;
    return a.phase < b.phase;
  });
  return out;
}

namespace {

// Whether any sorted time lies within +/- window of any session login.
bool near_any(const Session& s, std::span<const Instant> sorted_times, Seconds window) {
  if (sorted_times.empty()) return false;
  for (const auto* le : s.events) {
    const Instant ts = le->timestamp();
    const auto it = std::lower_bound(sorted_times.begin(), sorted_times.end(), ts - window);
    if (it != sorted_times.end() && *it <= ts + window) return true;
  }
  return false;
}

}  // namespace

bool phishing_indicator(const Session& s, std::span<const EmailRecord> emails, Seconds window) {
  std::vector<Instant> flagged;
  for (const auto& m : emails) {
    if (m.flagged_phishing) flagged.push_back(m.sent_at);
  }
  std::sort(flagged.begin(), flagged.end());
  return near_any(s, flagged, window);
}

bool inbox_rules_indicator(const Session& s, std::span<const Instant> detections,
                           Seconds window) {
  return near_any(s, detections, window);
}

bool tor_indicator(const Session& s, const GeoTable& table) { return table.is_tor(s.key.ip); }

CentroidTable load_centroids(std::istream& in, std::string_view source) {
  CsvReader csv(in);
  csv.expect_header({"code", "latitude", "longitude"}, source);
  CentroidTable out;
  std::vector<std::string> row;
  while (csv.next(row)) {
    const std::string where = std::string(source) + ":" + std::to_string(csv.line()) + ": ";
    if (row.size() < 3) throw InputError(where + "expected 3 columns");
    Coordinates c;
    try {
      std::size_t used = 0;
      c.latitude = std::stod(std::string(trim(row[1])), &used);
      c.longitude = std::stod(std::string(trim(row[2])), &used);
    } catch (const std::exception&) {
      throw InputError(where + "bad coordinates");
    }
    if (std::abs(c.latitude) > 90 || std::abs(c.longitude) > 180) {
      throw InputError(where + "coordinates out of range");
    }
    out[std::string(trim(row[0]))] = c;
  }
  return out;
}

double great_circle_km(Coordinates a, Coordinates b) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (b.latitude - a.latitude) * rad;
  const double dlon = (b.longitude - a.longitude) * rad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.latitude * rad) * std::cos(b.latitude * rad) *
                       std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

Seconds expected_travel_time(std::string_view a, std::string_view b,
                             const CentroidTable& centroids) {
  if (a == b) return 0;
  const auto ia = centroids.find(a);
  if (ia == centroids.end()) throw MissingCentroid(std::string(a));
  const auto ib = centroids.find(b);
  if (ib == centroids.end()) throw MissingCentroid(std::string(b));
  const double hours = great_circle_km(ia->second, ib->second) / kCruiseSpeedKmh;
  return static_cast<Seconds>(std::llround(hours * kHour)) + kTravelOverhead;
}

HomeContext make_home_context(const CompromiseCase& c, std::span<const GeoLookup> enriched) {
  HomeContext home;
  home.territory = home_territory(c, enriched);
  if (!home.territory) return home;
  for (std::size_t i = 0; i < c.events.size(); ++i) {
    const GeoInfo* geo = resolved(enriched[i]);
    if (c.events[i].is_login() && geo && geo->subdivision == home.territory) {
      home.event_times.push_back(c.events[i].timestamp);
    }
  }
  std::sort(home.event_times.begin(), home.event_times.end());
  return home;
}

InterarrivalResult interarrival_indicator(const Session& s, const HomeContext& home,
                                          const CentroidTable& centroids) {
  InterarrivalResult r;
  const GeoInfo* geo = s.geo();
  if (!geo) {
    r.flag = "no_location";
    return r;
  }
  if (!home.territory || home.event_times.empty()) {
    r.flag = "no_home_territory";
    return r;
  }
  const std::string& location = geo->subdivision ? *geo->subdivision : geo->country;

  Seconds best = std::numeric_limits<Seconds>::max();
  for (const auto* le : s.events) {
    const Instant ts = le->timestamp();
    const auto it = std::lower_bound(home.event_times.begin(), home.event_times.end(), ts);
    if (it != home.event_times.end()) best = std::min(best, *it - ts);
    if (it != home.event_times.begin()) best = std::min(best, ts - *std::prev(it));
  }
  r.min_gap = best;

  Seconds travel = 0;
  try {
    travel = expected_travel_time(*home.territory, location, centroids);
  } catch (const MissingCentroid&) {
    r.flag = "missing_centroid";
    return r;
  }
  r.value = best < travel;
  return r;
}

namespace {

std::optional<Label> parse_label(std::string_view s) {
  const std::string v = to_lower(trim(s));
  if (v == "attacker" || v == "1") return Label::Attacker;
  if (v == "benign" || v == "0") return Label::Benign;
  return std::nullopt;
}

}  // namespace

std::vector<ManualOverride> load_overrides(std::istream& in, std::string_view source) {
  CsvReader csv(in);
  csv.expect_header({"user_id", "session_ip", "session_ua", "truth_label", "reason"}, source);
  std::vector<ManualOverride> out;
  std::vector<std::string> row;
  while (csv.next(row)) {
    const std::string where = std::string(source) + ":" + std::to_string(csv.line()) + ": ";
    if (row.size() < 4) throw InputError(where + "expected 5 columns");
    ManualOverride o;
    o.user_id = to_lower(trim(row[0]));
    const auto ip = IpAddress::parse(trim(row[1]));
    if (!ip) throw InputError(where + "bad session_ip '" + row[1] + "'");
    o.session_ip = ip->to_string();
    try {
      o.session_ua = normalize_ua(row[2]);
    } catch (const EmptyUserAgent&) {
      throw InputError(where + "empty session_ua");
    }
    const auto label = parse_label(row[3]);
    if (!label) throw InputError(where + "truth_label must be attacker or benign");
    o.truth = *label;
    if (row.size() > 4) o.reason = row[4];
    out.push_back(std::move(o));
  }
  return out;
}

void apply_overrides(std::span<Session> sessions, std::span<const ManualOverride> overrides) {
  for (const auto& o : overrides) {
    bool matched = false;
    for (auto& s : sessions) {
      if (s.user_id == o.user_id && s.key.ip == o.session_ip && s.key.ua == o.session_ua) {
        s.truth_label = o.truth;
        s.truth_source = TruthSource::Manual;
        matched = true;
      }
    }
    if (!matched) {
      throw UnknownSession("override for " + o.user_id + " (" + o.session_ip + ", " +
                           o.session_ua.value() + ") matches no session");
    }
  }
}

std::string_view to_string(TruthTag t) {
  switch (t) {
    case TruthTag::Benign: return "benign";
    case TruthTag::Attacker1: return "attacker-1";
    case TruthTag::Attacker2: return "attacker-2";
  }
  return "unknown";
}

std::optional<TruthTag> parse_truth_tag(std::string_view s) {
  s = trim(s);
  if (s == "benign") return TruthTag::Benign;
  if (s == "attacker-1") return TruthTag::Attacker1;
  if (s == "attacker-2") return TruthTag::Attacker2;
  return std::nullopt;
}

std::unordered_map<std::string, TruthTag> load_truth_sidecar(std::istream& in,
                                                             std::string_view source) {
  CsvReader csv(in);
  csv.expect_header({"id", "truth_tag"}, source);
  std::unordered_map<std::string, TruthTag> out;
  std::vector<std::string> row;
  while (csv.next(row)) {
    const auto tag = row.size() >= 2 ? parse_truth_tag(row[1]) : std::nullopt;
    if (!tag) {
      throw InputError(std::string(source) + ":" + std::to_string(csv.line()) +
                       ": bad truth_tag");
    }
    out[row[0]] = *tag;
  }
  return out;
}

Label sidecar_truth(const Session& s, const std::unordered_map<std::string, TruthTag>& tags) {
  for (const auto* le : s.events) {
    const auto it = tags.find(le->ev().id);
    if (it != tags.end() && it->second != TruthTag::Benign) return Label::Attacker;
  }
  return Label::Benign;
}

EvalMetrics EvalMetrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                     std::size_t tn) {
  EvalMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.fnr = ratio(fn, tp + fn);
  m.fpr = ratio(fp, fp + tn);
  return m;
}

EvalMetrics evaluate(std::span<const Session> sessions) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& s : sessions) {
    if (!s.truth_label) {
      throw std::invalid_argument("session " + s.key.ip + " of " + s.user_id +
                                  " has no truth label");
    }
    const bool rule = s.rule_label == Label::Attacker;
    const bool truth = *s.truth_label == Label::Attacker;
    if (rule && truth) ++tp;
    else if (rule) ++fp;
    else if (truth) ++fn;
    else ++tn;
  }
  return EvalMetrics::from_counts(tp, fp, fn, tn);
}

std::vector<Session> sample_sessions(std::vector<Session> sessions, std::uint64_t seed,
                                     std::size_t max_attacker, std::size_t max_benign) {
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> by_user;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    auto& slot = by_user[sessions[i].user_id];
    (sessions[i].rule_label == Label::Attacker ? slot.first : slot.second).push_back(i);
  }
  std::vector<std::size_t> keep;
  for (auto& [user, lists] : by_user) {
    Rng rng = Rng::derive(seed, fnv1a(user));
    auto take = [&](std::vector<std::size_t>& idx, std::size_t k) {
      for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
        std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      }
      idx.resize(std::min(k, idx.size()));
      keep.insert(keep.end(), idx.begin(), idx.end());
    };
    take(lists.first, max_attacker);
    take(lists.second, max_benign);
  }
  std::sort(keep.begin(), keep.end());
  std::vector<Session> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(std::move(sessions[i]));
  return out;
}

}  // namespace takeover
