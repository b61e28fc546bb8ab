#include <doctest.h>

#include <sstream>

#include "support/fixtures.hpp"
#include "takeover/audit.hpp"
#include "takeover/csv.hpp"
#include "takeover/rng.hpp"

using namespace takeover;
using fixtures::kT;

namespace {

RejectRecord reject_of(CorpusParser::Result r) {
  REQUIRE(std::holds_alternative<RejectRecord>(r));
  return std::get<RejectRecord>(r);
}

AuditEvent event_of(CorpusParser::Result r) {
  REQUIRE(std::holds_alternative<AuditEvent>(r));
  return std::get<AuditEvent>(r);
}

}  // namespace

TEST_CASE("a full login record parses") {
  CorpusParser p;
  const auto e = event_of(p.parse_line(
      R"({"Id":"e1","UserId":"Alice@Corp.Example","UserAgent":"iPhone9C4/1706.56",)"
      R"("ClientIp":"203.0.113.7","Operation":"UserLoggedIn","ApplicationId":"app-owa",)"
      R"("CreationTime":"2019-09-01T00:00:00Z"})"));
  CHECK(e.id == "e1");
  CHECK(e.user_id == "alice@corp.example");
  CHECK(e.timestamp == kT);
  CHECK(e.user_agent == "iPhone9C4/1706.56");
  CHECK(e.client_ip == "203.0.113.7");
  CHECK(e.application_id == "app-owa");
  CHECK(e.is_login());
}

TEST_CASE("non-login operations keep absent fields absent") {
  CorpusParser p;
  const auto e = event_of(p.parse_line(
      R"({"Id":"e2","UserId":"bob@x.example","UserAgent":null,"ClientIp":"",)"
      R"("Operation":"Change user password","CreationTime":"2019-09-01T00:00:00+00:00"})"));
  CHECK_FALSE(e.user_agent);
  CHECK_FALSE(e.client_ip);
  CHECK_FALSE(e.application_id);
  CHECK_FALSE(e.is_login());
}

TEST_CASE("client ip with port and ipv6 forms are canonicalized") {
  CorpusParser p;
  auto parse_ip = [&](const std::string& ip) {
    static int n = 0;
    return event_of(p.parse_line(R"({"Id":"ip)" + std::to_string(++n) +
                                 R"(","UserId":"u@x","Operation":"o","UserAgent":"a",)"
                                 R"("CreationTime":"2019-09-01T00:00:00Z","ClientIp":")" +
                                 ip + "\"}"))
        .client_ip;
  };
  CHECK(parse_ip("198.51.100.4:443") == "198.51.100.4");
  CHECK(parse_ip("2001:DB8:0:0::1") == "2001:db8::1");
  CHECK(parse_ip("[2001:db8::1]:8080") == "2001:db8::1");
  CHECK(parse_ip("::ffff:192.0.2.1") == "192.0.2.1");
}

TEST_CASE("malformed records are rejected with a reason and line number") {
  CorpusParser p;
  CHECK(reject_of(p.parse_line("")).reason == RejectReason::Empty);
  CHECK(reject_of(p.parse_line("{not json")).reason == RejectReason::Syntax);
  CHECK(reject_of(p.parse_line("[1,2]")).reason == RejectReason::NotObject);
  CHECK(reject_of(p.parse_line(R"({"Id":"a","UserId":"u","Operation":"o"})")).reason ==
        RejectReason::MissingField);
  CHECK(reject_of(p.parse_line(
                      R"({"Id":7,"UserId":"u","Operation":"o","CreationTime":"2019-09-01T00:00:00Z"})"))
            .reason == RejectReason::BadType);
  CHECK(reject_of(p.parse_line(
                      R"({"Id":"a","UserId":"u","Operation":"o","CreationTime":"2019-09-01T00:00:00"})"))
            .reason == RejectReason::BadTimestamp);
  CHECK(reject_of(p.parse_line(R"({"Id":"a","UserId":"u","Operation":"o","ClientIp":"300.1.1.1",)"
                               R"("CreationTime":"2019-09-01T00:00:00Z"})"))
            .reason == RejectReason::BadIp);
  const auto r = reject_of(p.parse_line(R"({"Id":"a","UserId":"","Operation":"o"})"));
  CHECK(r.line == 8);
}

TEST_CASE("duplicate ids: first occurrence wins") {
  std::istringstream in(
      R"({"Id":"d","UserId":"u@x","Operation":"first","CreationTime":"2019-09-01T00:00:00Z"})"
      "\n"
      R"({"Id":"d","UserId":"u@x","Operation":"second","CreationTime":"2019-09-01T00:00:01Z"})"
      "\n");
  const auto parsed = parse_corpus(in);
  REQUIRE(parsed.events.size() == 1);
  CHECK(parsed.events[0].operation == "first");
  REQUIRE(parsed.rejects.size() == 1);
  CHECK(parsed.rejects[0].reason == RejectReason::DuplicateId);
  CHECK(parsed.rejects[0].line == 2);
}

TEST_CASE("property: serialize then parse is the identity and counts are conserved") {
  Rng rng(99);
  std::ostringstream corpus;
  std::vector<AuditEvent> originals;
  std::size_t garbage = 0;
  for (int i = 0; i < 500; ++i) {
    if (rng.chance(0.1)) {
      corpus << (rng.chance(0.5) ? "{broken" : "") << '\n';
      ++garbage;
      continue;
    }
    AuditEvent e;
    e.id = "id-" + std::to_string(i);
    e.user_id = "user" + std::to_string(rng.below(5)) + "@org.example";
    e.timestamp = rng.between(1'500'000'000, 1'600'000'000);
    e.operation = rng.chance(0.8) ? "UserLoggedIn" : "Set \"Mailbox\", quoted";
    if (rng.chance(0.8)) e.user_agent = "Agent/" + std::to_string(rng.below(100));
    if (rng.chance(0.8)) e.client_ip = "198.51.100." + std::to_string(rng.below(256));
    if (rng.chance(0.5)) e.application_id = "app-" + std::to_string(rng.below(4));
    corpus << serialize_event(e) << '\n';
    originals.push_back(e);
  }
  std::istringstream in(corpus.str());
  const auto parsed = parse_corpus(in);
  CHECK(parsed.events.size() + parsed.rejects.size() == 500);
  CHECK(parsed.rejects.size() == garbage);
  CHECK(parsed.events == originals);
}

TEST_CASE("loaders validate headers and values") {
  {
    std::istringstream in("user_id,confirmed_at\nA@x,2019-09-02T00:00:00Z\na@x,2019-09-01T00:00:00Z\n");
    const auto times = load_compromise_times(in, "t.csv");
    REQUIRE(times.size() == 1);
    CHECK(times.at("a@x") == kT);
  }
  {
    std::istringstream in("sender,sent_at,flagged_phishing\na@x,2019-09-01T00:00:00Z,2\n");
    CHECK_THROWS_AS(load_emails(in, "e.csv"), InputError);
  }
  {
    std::istringstream in("sender,sent_at,flagged_phishing\nA@x,2019-09-01T00:00:00Z,1\n");
    const auto m = load_emails(in, "e.csv");
    REQUIRE(m.size() == 1);
    CHECK(m[0].sender == "a@x");
    CHECK(m[0].flagged_phishing);
  }
  {
    std::istringstream in("user_id,detected_at\na@x,not-a-time\n");
    CHECK_THROWS_AS(load_inbox_rules(in, "r.csv"), InputError);
  }
}

TEST_CASE("build_cases groups by user and marks history") {
  using fixtures::login;
  std::vector<AuditEvent> events{
      login("h1", kT - 45 * kDay, "20.0.0.1", "A"),
      login("x1", kT - 45 * kDay, "20.0.0.1", "A", "app", "stranger@else.example"),
      login("p1", kT + kDay, "20.2.0.1", "B"),
      login("b1", kT - kDay, "20.0.0.1", "A", "app", "bob@corp.example"),
  };
  CompromiseTimes times{{"alice@corp.example", kT}, {"bob@corp.example", kT}};
  std::vector<EmailRecord> emails{{"alice@corp.example", kT, true}, {"zed@x", kT, true}};
  RuleDetections rules{{"bob@corp.example", {kT + 5, kT - 5}}};
  const auto cases = build_cases(events, times, emails, rules);
  REQUIRE(cases.size() == 2);
  CHECK(cases[0].user_id == "alice@corp.example");
  CHECK(cases[0].organization == "corp.example");
  CHECK(cases[0].events.size() == 2);
  CHECK(cases[0].emails.size() == 1);
  CHECK_FALSE(cases[0].insufficient_history);
  CHECK(cases[1].insufficient_history);
  CHECK(cases[1].inbox_rule_detections == std::vector<Instant>{kT - 5, kT + 5});
}

TEST_CASE("history window is half-open") {
  CompromiseCase c;
  c.t = kT;
  c.events = {fixtures::login("a", kT - kMonth, "20.0.0.1", "A")};
  mark_history(c);
  CHECK(c.insufficient_history);
  c.events = {fixtures::login("a", kT - 2 * kMonth, "20.0.0.1", "A")};
  mark_history(c);
  CHECK_FALSE(c.insufficient_history);
}
