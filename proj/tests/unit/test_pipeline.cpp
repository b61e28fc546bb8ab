#include <doctest.h>

#include <sstream>

#include "support/fixtures.hpp"
#include "takeover/csv.hpp"
#include "takeover/pipeline.hpp"
#include "takeover/synth.hpp"

using namespace takeover;
namespace fs = std::filesystem;

namespace {

fs::path make_corpus(const std::string& name, std::size_t users) {
  auto spec = synth::paper_mix();
  spec.users = users;
  const auto dir = fixtures::scratch(name);
  synth::write_corpus(synth::generate(spec), dir / "corpus");
  return dir;
}

RunConfig config_for(const fs::path& dir) {
  RunConfig cfg;
  apply_corpus_dir(cfg, dir / "corpus");
  cfg.out = dir / "out";
  return cfg;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  CsvReader csv(in);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  while (csv.next(row)) rows.push_back(row);
  return rows;
}

}  // namespace

TEST_CASE("all stages write every output") {
  const auto dir = make_corpus("pipe-all", 8);
  const auto cfg = config_for(dir);
  const auto r = run_pipeline(cfg, {true, true, true});
  for (const char* f : {"labeled_events.csv", "diagnostics.json", "metrics.json", "sessions.csv",
                        "cases.jsonl", "aggregate.json", "ecdf_dwell.csv",
                        "ecdf_max_interarrival.csv", "ecdf_jaccard_geo.csv", "ecdf_stability.csv",
                        "ecdf_phish_gap.csv"}) {
    CHECK(fs::exists(cfg.out / f));
  }
  CHECK(r.diagnostics.cases == 8);
  CHECK(r.metrics);
  CHECK(r.reports.size() == 8);
  const auto labeled = read_csv(cfg.out / "labeled_events.csv");
  CHECK(labeled.front()[0] == "id");
  CHECK(labeled.size() == r.diagnostics.labeled_events + 1);
}

TEST_CASE("labels match the generator truth for non-evasive archetypes") {
  const auto dir = make_corpus("pipe-truth", 16);
  const auto cfg = config_for(dir);
  run_pipeline(cfg, {true, false, false});
  std::map<std::string, std::string> archetype, tag;
  for (const auto& row : read_csv(dir / "corpus" / "users.csv")) archetype[row[0]] = row[2];
  for (const auto& row : read_csv(dir / "corpus" / "truth.csv")) tag[row[0]] = row[1];
  std::size_t checked = 0;
  for (const auto& row : read_csv(cfg.out / "labeled_events.csv")) {
    if (row[0] == "id") continue;
    const auto& kind = archetype.at(row[1]);
    if (kind == "EvasiveAttacker") {
      CHECK(row[9] == "benign");
      continue;
    }
    if (!row[11].empty()) continue;  // unclassifiable
    const std::string expected = tag.at(row[0]) == "benign" ? "benign" : "attacker";
    CAPTURE(row[0]);
    CHECK(row[9] == expected);
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("per-case dwell agrees with a recount from the labeled events") {
  const auto dir = make_corpus("pipe-dwell", 12);
  const auto cfg = config_for(dir);
  run_pipeline(cfg, {true, false, true});
  std::map<std::string, std::pair<Instant, Instant>> span;
  for (const auto& row : read_csv(cfg.out / "labeled_events.csv")) {
    if (row[9] != "attacker") continue;
    const Instant t = *parse_iso8601(row[2]);
    auto [it, fresh] = span.emplace(row[1], std::make_pair(t, t));
    it->second.first = std::min(it->second.first, t);
    it->second.second = std::max(it->second.second, t);
  }
  std::ifstream in(cfg.out / "cases.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const auto it = span.find(j["user_id"]);
    if (it == span.end()) {
      CHECK(j["dwell_seconds"].is_null());
    } else {
      CHECK(j["dwell_seconds"].get<Instant>() == it->second.second - it->second.first);
    }
    ++n;
  }
  CHECK(n == 12);
}

TEST_CASE("outputs are byte-identical across runs") {
  const auto dir = make_corpus("pipe-determinism", 8);
  auto a = config_for(dir), b = config_for(dir);
  a.out = dir / "out-a";
  b.out = dir / "out-b";
  a.dedup = b.dedup = true;
  run_pipeline(a, {true, true, true});
  run_pipeline(b, {true, true, true});
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a.out)) {
    const auto name = entry.path().filename();
    CHECK(fixtures::read_file(a.out / name) == fixtures::read_file(b.out / name));
    ++files;
  }
  CHECK(files == 11);
}

TEST_CASE("config file paths resolve against the config directory") {
  const auto dir = make_corpus("pipe-config", 4);
  fixtures::write_file(dir / "run.json",
                       R"({"corpus": "corpus", "out": "result", "seed": 3, "dedup": true,
                           "day_threshold": 86400, "indicator_window": 18000})");
  const auto cfg = load_config(dir / "run.json");
  CHECK(cfg.events == dir / "corpus" / "events.jsonl");
  CHECK(cfg.out == dir / "result");
  CHECK(cfg.seed == 3);
  CHECK(cfg.dedup);
  fixtures::write_file(dir / "bad.json", R"({"event": "x"})");
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  fixtures::write_file(dir / "bad2.json", R"({"seed": "x"})");
  CHECK_THROWS_AS(load_config(dir / "bad2.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("missing inputs and bad thresholds are config errors naming the path") {
  const auto dir = make_corpus("pipe-missing", 2);
  auto cfg = config_for(dir);
  cfg.geo = dir / "nope.csv";
  try {
    run_pipeline(cfg, {true, false, false});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("nope.csv") != std::string::npos);
  }
  cfg = config_for(dir);
  cfg.day = 0;
  CHECK_THROWS_AS(run_pipeline(cfg, {true, false, false}), ConfigError);
  RunConfig empty;
  CHECK_THROWS_AS(check_config(empty, true), ConfigError);
}

TEST_CASE("empty corpus: empty outputs, and evaluate reports no sessions") {
  const auto dir = fixtures::scratch("pipe-empty");
  fixtures::write_file(dir / "events.jsonl", "");
  fixtures::write_file(dir / "geo.csv", "cidr,country,subdivision,isp\n");
  fixtures::write_file(dir / "compromise_times.csv", "user_id,confirmed_at\n");
  RunConfig cfg;
  cfg.events = dir / "events.jsonl";
  cfg.geo = dir / "geo.csv";
  cfg.compromise_times = dir / "compromise_times.csv";
  cfg.out = dir / "out";
  const auto r = run_pipeline(cfg, {true, false, true});
  CHECK(r.diagnostics.cases == 0);
  CHECK(read_csv(cfg.out / "labeled_events.csv").size() == 1);
  CHECK(fixtures::read_file(cfg.out / "ecdf_dwell.csv") == "value,fraction\n");
  // No truth source at all.
  CHECK_THROWS_AS(run_pipeline(cfg, {false, true, false}), ConfigError);
  // A truth source but nothing to score.
  fixtures::write_file(dir / "truth.csv", "id,truth_tag\n");
  cfg.truth = dir / "truth.csv";
  CHECK_THROWS_AS(run_pipeline(cfg, {false, true, false}), PipelineError);
}

TEST_CASE("an override for an unknown session fails the run") {
  const auto dir = make_corpus("pipe-override", 4);
  auto cfg = config_for(dir);
  fixtures::write_file(dir / "overrides.csv",
                       "user_id,session_ip,session_ua,truth_label,reason\n"
                       "nobody@org000.example.com,1.2.3.4,x,attacker,test\n");
  cfg.overrides = dir / "overrides.csv";
  CHECK_THROWS_AS(run_pipeline(cfg, {false, true, false}), UnknownSession);
}

TEST_CASE("diagnostics count rejects and insufficient history") {
  const auto dir = make_corpus("pipe-diag", 4);
  auto cfg = config_for(dir);
  {
    std::ofstream f(cfg.events, std::ios::app);
    f << "{broken\n";
  }
  {
    std::ofstream f(cfg.compromise_times, std::ios::app);
    f << "ghost@org000.example.com,2019-10-01T00:00:00Z\n";
  }
  const auto r = run_pipeline(cfg, {true, false, false});
  CHECK(r.diagnostics.rejects.at("syntax") == 1);
  CHECK(r.diagnostics.insufficient_history == 1);
  CHECK(r.diagnostics.insufficient_history_users == std::vector<std::string>{"ghost@org000.example.com"});
  const auto j = nlohmann::json::parse(fixtures::read_file(cfg.out / "diagnostics.json"));
  CHECK(j["insufficient_history"] == 1);
  CHECK(j.contains("unclassifiable"));
}
