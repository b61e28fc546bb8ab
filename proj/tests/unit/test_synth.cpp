#include <doctest.h>

#include <sstream>

#include "support/fixtures.hpp"
#include "takeover/synth.hpp"

using namespace takeover;
using namespace takeover::synth;

namespace {

std::string field_of(const ScenarioSpec& s) {
  try {
    validate(s);
  } catch (const SpecError& e) {
    return e.field();
  }
  return "";
}

std::string parse_field_of(const nlohmann::json& j) {
  try {
    parse_spec(j);
  } catch (const SpecError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("paper mix produces all four archetypes and both actor tags") {
  const auto corpus = generate(paper_mix());
  std::map<Archetype, int> counts;
  for (const auto& u : corpus.users) ++counts[u.archetype];
  CHECK(counts.size() == 4);
  std::set<TruthTag> tags;
  for (const auto& [id, tag] : corpus.truth) tags.insert(tag);
  CHECK(tags.size() == 3);
  CHECK(corpus.truth.size() == corpus.events.size());
  CHECK(std::is_sorted(corpus.events.begin(), corpus.events.end(), event_before));
}

TEST_CASE("generation is deterministic, down to the written bytes") {
  auto spec = paper_mix();
  spec.users = 12;
  const auto a = generate(spec);
  const auto b = generate(spec);
  CHECK(a.events == b.events);
  const auto da = fixtures::scratch("synth-a"), db = fixtures::scratch("synth-b");
  write_corpus(a, da);
  write_corpus(b, db);
  for (const auto& entry : std::filesystem::directory_iterator(da)) {
    const auto name = entry.path().filename();
    CHECK(fixtures::read_file(da / name) == fixtures::read_file(db / name));
  }
  spec.seed = 2;
  CHECK_FALSE(generate(spec).events == a.events);
}

TEST_CASE("a user's events do not depend on how many users there are") {
  auto small = paper_mix();
  small.users = 5;
  auto big = small;
  big.users = 9;
  const auto a = generate(small), b = generate(big);
  auto of_user = [](const Corpus& c, const std::string& u) {
    std::vector<AuditEvent> out;
    for (const auto& e : c.events) {
      if (e.user_id == u) out.push_back(e);
    }
    return out;
  };
  for (const auto& u : a.users) CHECK(of_user(a, u.user_id) == of_user(b, u.user_id));
}

TEST_CASE("every user has login history before the classification window") {
  auto spec = paper_mix();
  spec.users = 20;
  const auto c = generate(spec);
  for (const auto& u : c.users) {
    const Instant t = c.compromise_times.at(u.user_id);
    const bool history = std::any_of(c.events.begin(), c.events.end(), [&](const AuditEvent& e) {
      return e.user_id == u.user_id && e.is_login() && e.timestamp >= t - 2 * kMonth &&
             e.timestamp < t - kMonth;
    });
    CHECK(history);
  }
}

TEST_CASE("truth tags never appear in event records") {
  const auto c = generate(paper_mix());
  for (const auto& e : c.events) {
    const auto line = serialize_event(e);
    CHECK(line.find("attacker") == std::string::npos);
  }
}

TEST_CASE("users=0 gives an empty corpus") {
  auto spec = paper_mix();
  spec.users = 0;
  const auto c = generate(spec);
  CHECK(c.events.empty());
  CHECK(c.users.empty());
  const auto dir = fixtures::scratch("synth-empty");
  write_corpus(c, dir);
  CHECK(fixtures::read_file(dir / "events.jsonl").empty());
  CHECK(fixtures::read_file(dir / "truth.csv") == "id,truth_tag\n");
}

TEST_CASE("validation names the offending field") {
  auto s = paper_mix();
  s.gap_days = 0;
  CHECK(field_of(s) == "gap_days");
  s = paper_mix();
  s.attacker2_pool.push_back(s.attacker1_pool.front());
  CHECK(field_of(s) == "attacker2_pool");
  s = paper_mix();
  s.attacker1_pool.push_back({"US-WA", "X", 47.0, -120.0});
  CHECK(field_of(s) == "attacker1_pool");
  s = paper_mix();
  s.home_pool.clear();
  CHECK(field_of(s) == "home_pool");
  s = paper_mix();
  s.rotating_proxy_events = 100;
  CHECK(field_of(s) == "rotating_proxy_events");
  s = paper_mix();
  s.attacker_events_max = 1;
  CHECK(field_of(s) == "attacker_events_max");
  s = paper_mix();
  s.home_pool[0].subdivision = "Illinois";
  CHECK(field_of(s) == "home_pool[0].subdivision");
  CHECK(field_of(paper_mix()).empty());
}

TEST_CASE("spec parsing: overrides, unknown keys, bad values") {
  const auto s = parse_spec(nlohmann::json{{"users", 3}, {"seed", 9}, {"gap_days", 4},
                                           {"start", "2020-01-01T00:00:00Z"},
                                           {"archetypes", {"BenignOnly", "EvasiveAttacker"}}});
  CHECK(s.users == 3);
  CHECK(s.seed == 9);
  CHECK(s.gap_days == 4);
  CHECK(s.start == 1577836800);
  CHECK(s.archetypes.size() == 2);
  CHECK(parse_field_of({{"userz", 3}}) == "userz");
  CHECK(parse_field_of({{"phishing_rate", 1.5}}) == "phishing_rate");
  CHECK(parse_field_of({{"users", "many"}}) == "users");
  CHECK(parse_field_of({{"archetypes", {"Ninja"}}}) == "archetypes");
  CHECK(parse_field_of({{"home_pool", {{{"subdivision", "US-IL"}, {"isp", "x"}, {"lat", 1}}}}}) ==
        "home_pool[0].lat");
  CHECK(parse_field_of(nlohmann::json::array()) == "<root>");
}

TEST_CASE("spec json round-trip") {
  auto s = paper_mix();
  s.users = 17;
  s.tor_rate = 0.25;
  const auto back = parse_spec(spec_to_json(s));
  CHECK(spec_to_json(back) == spec_to_json(s));
}

TEST_CASE("written corpus parses back and geo rows cover every location") {
  auto spec = paper_mix();
  spec.users = 8;
  const auto c = generate(spec);
  const auto dir = fixtures::scratch("synth-files");
  write_corpus(c, dir);
  std::ifstream in(dir / "events.jsonl");
  const auto parsed = parse_corpus(in);
  CHECK(parsed.rejects.empty());
  CHECK(parsed.events == c.events);
  std::ifstream geo(dir / "geo.csv");
  const auto table = load_geo_table(geo, "geo.csv");
  CHECK(table.entries().size() == c.geo_rows.size());
  for (const auto& e : c.events) {
    if (!e.client_ip || e.client_ip->rfind("198.51.100.", 0) == 0) continue;
    CHECK(resolved(table.resolve(std::string_view(*e.client_ip))));
  }
}
