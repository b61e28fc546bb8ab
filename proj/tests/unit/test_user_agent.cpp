#include <doctest.h>

#include "support/oracle.hpp"
#include "takeover/rng.hpp"
#include "takeover/user_agent.hpp"

using namespace takeover;

namespace {
std::string norm(std::string_view s) { return normalize_ua(s).value(); }
}  // namespace

TEST_CASE("device strings drop the version after the slash") {
  CHECK(norm("iPhone9C4/1706.56") == "iPhone9C4");
  CHECK(norm("iPhone9C4/1708.57") == "iPhone9C4");
  CHECK(normalize_ua("iPhone9C4/1706.56") == normalize_ua("iPhone9C4/1708.57"));
  CHECK(norm("python-requests/2.22.0") == "python-requests");
  CHECK(norm("BAV2ROPC") == "BAV2ROPC");
  CHECK(norm("/leading") == "/leading");
}

TEST_CASE("browser strings lose version tokens") {
  CHECK(norm("Mozilla/5.0 (Windows NT 10.0; Win64; x64) Gecko/20100101 Firefox/70.0") ==
        "Mozilla (Windows NT; Win64; x64) Gecko Firefox");
  CHECK(norm("Mozilla/5.0 (Windows NT 10.0; Win64; x64) Gecko/20100101 Firefox/71.0") ==
        "Mozilla (Windows NT; Win64; x64) Gecko Firefox");
  CHECK(norm("Mozilla/5.0 (Macintosh; Intel Mac OS X 10_15_7) AppleWebKit/605.1.15 (KHTML, "
             "like Gecko) Version/13.0.3 Safari/605.1.15") ==
        "Mozilla (Macintosh; Intel Mac OS X) AppleWebKit (KHTML, like Gecko) Version Safari");
  CHECK(norm("  Outlook   Mobile\t2.0 ") == "Outlook Mobile");
}

TEST_CASE("empty input is an error, and all-version input is kept") {
  CHECK_THROWS_AS(normalize_ua(""), EmptyUserAgent);
  CHECK_THROWS_AS(normalize_ua(" \t "), EmptyUserAgent);
  CHECK(norm("1.0 2.0") == "1.0 2.0");
}

TEST_CASE("version token grammar") {
  CHECK(is_version_token("70.0"));
  CHECK(is_version_token("20100101"));
  CHECK(is_version_token("10_15_7"));
  CHECK(is_version_token("16.0.12026b"));
  CHECK_FALSE(is_version_token("x64"));
  CHECK_FALSE(is_version_token("5."));
  CHECK_FALSE(is_version_token(""));
  CHECK_FALSE(is_version_token("NT"));
}

TEST_CASE("matches the regex oracle on realistic agents") {
  const char* agents[] = {
      "iPhone9C4/1706.56",
      "Outlook-iOS/2.0",
      "Mozilla/5.0 (Windows NT 10.0; Win64; x64) Gecko/20100101 Firefox/70.0",
      "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/78.0.3904.97 "
      "Safari/537.36",
      "Mozilla/5.0 (Windows NT 6.1; WOW64; Trident/7.0; rv:11.0) like Gecko",
      "Microsoft Office/16.0 (Windows NT 10.0; Microsoft Outlook 16.0.12026; Pro)",
      "okhttp/3.12.1",
      "Mozilla/5.0 (iPhone; CPU iPhone OS 13_1_3 like Mac OS X) AppleWebKit/605.1.15 (KHTML, like "
      "Gecko) Mobile/15E148",
      "BAV2ROPC",
  };
  for (const char* a : agents) {
    CAPTURE(a);
    CHECK(norm(a) == oracle::normalize_ua(a));
  }
}

TEST_CASE("property: normalization is idempotent on fuzzed strings") {
  Rng rng(31337);
  const std::string alphabet = "aZ9./_;(), \t-0123456789xX";
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    const auto len = 1 + rng.below(40);
    for (std::uint64_t k = 0; k < len; ++k) s += alphabet[rng.below(alphabet.size())];
    NormalizedUA once;
    try {
      once = normalize_ua(s);
    } catch (const EmptyUserAgent&) {
      continue;
    }
    CAPTURE(s);
    CHECK(normalize_ua(once.value()) == once);
    CHECK_FALSE(once.value().empty());
  }
}

TEST_CASE("property: versions never separate equal templates") {
  Rng rng(8);
  const char* templates[] = {"iPhone9C4/%", "Mozilla/% (Windows NT %; Win64) Firefox/%",
                             "Outlook-iOS/%", "App % build"};
  for (int i = 0; i < 200; ++i) {
    auto fill = [&](std::string t) {
      std::string out;
      for (char c : t) {
        if (c != '%') {
          out += c;
          continue;
        }
        out += std::to_string(rng.below(100));
        if (rng.chance(0.7)) out += "." + std::to_string(rng.below(1000));
        if (rng.chance(0.3)) out += "_" + std::to_string(rng.below(10));
      }
      return out;
    };
    const std::string t = templates[rng.below(4)];
    CHECK(normalize_ua(fill(t)) == normalize_ua(fill(t)));
  }
}
