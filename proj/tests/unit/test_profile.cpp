#include <doctest.h>

#include "support/fixtures.hpp"
#include "support/oracle.hpp"
#include "takeover/profile.hpp"
#include "takeover/rng.hpp"

using namespace takeover;
using fixtures::kT;
using fixtures::login;

namespace {

GeoInfo geo(std::string country, std::optional<std::string> sub = std::nullopt) {
  GeoInfo g;
  g.country = std::move(country);
  g.subdivision = std::move(sub);
  return g;
}

HistoricalProfile home_profile() {
  HistoricalProfile p;
  p.add(geo("US", "US-IL"), normalize_ua("iPhone9C4/1706.56"));
  return p;
}

CompromiseCase make_case(std::vector<AuditEvent> events) {
  CompromiseCase c;
  c.user_id = "alice@corp.example";
  c.organization = "corp.example";
  c.t = kT;
  std::sort(events.begin(), events.end(), event_before);
  c.events = std::move(events);
  return c;
}

}  // namespace

TEST_CASE("feature extraction follows the profile") {
  const auto p = home_profile();
  const auto known = normalize_ua("iPhone9C4/1708.57");
  const auto fresh = normalize_ua("python-requests/2.0");
  CHECK(extract_features(geo("US", "US-IL"), known, p) == FeatureVector{0, 0});
  CHECK(extract_features(geo("US", "US-MO"), known, p) == FeatureVector{1, 0});
  CHECK(extract_features(geo("US", "US-MO"), fresh, p) == FeatureVector{1, 1});
  CHECK(extract_features(geo("JP", "JP-27"), known, p) == FeatureVector{2, 0});
  // Country known, IP without subdivision: new only if the profile has
  // subdivisions under that country.
  CHECK(extract_features(geo("US"), fresh, p).geo == 1);
  HistoricalProfile country_only;
  country_only.add(geo("CA"), known);
  CHECK(extract_features(geo("CA"), known, country_only).geo == 0);
  CHECK(extract_features(geo("CA", "CA-ON"), known, country_only).geo == 1);
}

TEST_CASE("rule set truth table: exactly three attacker cells") {
  int attackers = 0;
  for (std::uint8_t g = 0; g <= 2; ++g) {
    for (std::uint8_t u = 0; u <= 1; ++u) {
      const Label l = classify({g, u});
      attackers += l == Label::Attacker;
      CHECK((l == Label::Attacker) == (g == 2 || (g == 1 && u == 1)));
    }
  }
  CHECK(attackers == 3);
  static_assert(classify({2, 0}) == Label::Attacker);
  static_assert(classify({1, 0}) == Label::Benign);
}

TEST_CASE("property: growing the profile never creates attacker labels") {
  Rng rng(5);
  const char* subs[] = {"US-IL", "US-MO", "US-CA", "JP-27", "DE-BE"};
  const char* uas[] = {"A", "B", "C"};
  for (int i = 0; i < 500; ++i) {
    HistoricalProfile small, big;
    for (int k = 0; k < 3; ++k) {
      const std::string s = subs[rng.below(5)];
      const auto g = geo(s.substr(0, 2), s);
      const auto ua = normalize_ua(uas[rng.below(3)]);
      small.add(g, ua);
      big.add(g, ua);
    }
    const std::string extra = subs[rng.below(5)];
    big.add(geo(extra.substr(0, 2), extra), normalize_ua(uas[rng.below(3)]));
    const std::string s = subs[rng.below(5)];
    const auto g = rng.chance(0.2) ? geo(s.substr(0, 2)) : geo(s.substr(0, 2), s);
    const auto ua = normalize_ua(uas[rng.below(3)]);
    const auto fs = extract_features(g, ua, small);
    const auto fb = extract_features(g, ua, big);
    CHECK(fb.ua <= fs.ua);
    if (g.subdivision) {
      CHECK(fb.geo <= fs.geo);
      if (classify(fs) == Label::Benign) CHECK(classify(fb) == Label::Benign);
    }
  }
}

TEST_CASE("two-phase classification and augmentation") {
  const auto table = fixtures::standard_table();
  auto c = make_case({
      login("h1", kT - 50 * kDay, "20.0.0.1", "iPhone9C4/1706.56"),
      // Phase 1: new state, known UA -> benign, and it teaches US-MO.
      login("p1", kT - 10 * kDay, "20.1.0.1", "iPhone9C4/1706.56"),
      // Phase 1: new state and new UA -> attacker; must not augment.
      login("p2", kT - 9 * kDay, "20.1.0.2", "python-requests/2.0"),
      // Phase 2: US-MO now known, so benign even with an unknown UA.
      login("q1", kT, "20.1.0.3", "okhttp/3.0"),
      // Phase 2: the attacker UA from p2 was never learned.
      login("q2", kT + kDay, "20.4.0.1", "python-requests/2.2"),
      login("q3", kT + 2 * kDay, "20.2.0.1", "iPhone9C4/1706.56"),
      // Outside the classification window.
      login("late", kT + 31 * kDay, "20.2.0.1", "iPhone9C4/1706.56"),
  });
  const auto enriched = enrich(c.events, table);
  auto result = classify_case(c, enriched);
  REQUIRE(std::holds_alternative<CaseClassification>(result));
  const auto& cls = std::get<CaseClassification>(result);
  REQUIRE(cls.events.size() == 5);
  std::map<std::string, Label> labels;
  for (const auto& le : cls.events) labels[le.ev().id] = le.label;
  CHECK(labels["p1"] == Label::Benign);
  CHECK(labels["p2"] == Label::Attacker);
  CHECK(labels["q1"] == Label::Benign);
  CHECK(labels["q2"] == Label::Attacker);  // US without subdivision, profile has US-*
  CHECK(labels["q3"] == Label::Attacker);  // JP never seen
  CHECK(cls.attacker_events == 3);
  CHECK(cls.augmented.subdivisions.count("US-MO"));
  CHECK_FALSE(cls.profile.subdivisions.count("US-MO"));
  CHECK_FALSE(cls.augmented.user_agents.count(normalize_ua("python-requests/2.0")));
  CHECK(cls.events.front().phase == Phase::PreT);
  CHECK(cls.events.back().phase == Phase::PostT);
}

TEST_CASE("unresolvable events are benign and flagged") {
  const auto table = fixtures::standard_table();
  auto c = make_case({login("h1", kT - 50 * kDay, "20.0.0.1", "A"),
                      login("u1", kT + kHour, "192.168.0.4", "B"),
                      login("u2", kT + 2 * kHour, "99.0.0.1", "B")});
  const auto cls = std::get<CaseClassification>(classify_case(c, enrich(c.events, table)));
  REQUIRE(cls.events.size() == 2);
  CHECK(cls.unclassifiable == 2);
  CHECK(cls.events[0].label == Label::Benign);
  CHECK(cls.events[0].unclassifiable == NotFoundReason::Private);
  CHECK(cls.events[1].unclassifiable == NotFoundReason::Unmapped);
  CHECK_FALSE(cls.events[0].features);
}

TEST_CASE("insufficient history") {
  const auto table = fixtures::standard_table();
  auto c = make_case({login("p1", kT - kDay, "20.0.0.1", "A"),
                      login("h-unmapped", kT - 40 * kDay, "99.0.0.1", "A")});
  CHECK(std::holds_alternative<InsufficientHistory>(classify_case(c, enrich(c.events, table))));
}

TEST_CASE("home territory: most frequent, ties lexicographic") {
  const auto table = fixtures::standard_table();
  auto c = make_case({login("a", kT - 50 * kDay, "20.1.0.1", "A"),
                      login("b", kT - 49 * kDay, "20.0.0.1", "A"),
                      login("z", kT - kDay, "20.1.0.1", "A")});
  CHECK(home_territory(c, enrich(c.events, table)) == "US-IL");
  c.events.push_back(login("c", kT - 48 * kDay, "20.1.0.2", "A"));
  std::sort(c.events.begin(), c.events.end(), event_before);
  CHECK(home_territory(c, enrich(c.events, table)) == "US-MO");
}

TEST_CASE("property: classify_case agrees with the straight-line oracle") {
  const auto table = fixtures::standard_table();
  const char* ips[] = {"20.0.0.1", "20.1.0.1", "20.2.0.1", "20.3.0.1", "20.4.0.1", "99.0.0.1"};
  const char* uas[] = {"iPhone9C4/1706.56", "iPhone9C4/1708.57", "python-requests/2.0",
                       "Mozilla/5.0 (X11) Firefox/70.0"};
  Rng rng(77);
  for (int round = 0; round < 100; ++round) {
    std::vector<AuditEvent> events;
    const auto n = rng.between(1, 60);
    for (std::int64_t i = 0; i < n; ++i) {
      events.push_back(login("e" + std::to_string(i), kT + rng.between(-62 * kDay, 32 * kDay),
                             ips[rng.below(6)], uas[rng.below(4)]));
    }
    auto c = make_case(events);
    const auto enriched = enrich(c.events, table);
    std::vector<oracle::Event> oe;
    for (std::size_t i = 0; i < c.events.size(); ++i) {
      oracle::Event e{c.events[i].timestamp, std::nullopt, std::nullopt,
                      oracle::normalize_ua(*c.events[i].user_agent)};
      if (const auto* g = resolved(enriched[i])) {
        e.country = g->country;
        e.subdivision = g->subdivision;
      }
      oe.push_back(e);
    }
    const auto expected = oracle::label(oe, kT);
    const auto got = classify_case(c, enriched);
    REQUIRE(expected.has_value() == std::holds_alternative<CaseClassification>(got));
    if (!expected) continue;
    const auto& cls = std::get<CaseClassification>(got);
    REQUIRE(cls.events.size() == expected->size());
    for (std::size_t i = 0; i < expected->size(); ++i) {
      CHECK((cls.events[i].label == Label::Attacker) ==
            ((*expected)[i] == oracle::Verdict::Attacker));
    }
  }
}
