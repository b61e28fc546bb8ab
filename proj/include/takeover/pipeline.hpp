#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "takeover/analytics.hpp"
#include "takeover/audit.hpp"
#include "takeover/geo.hpp"
#include "takeover/report.hpp"
#include "takeover/session.hpp"

namespace takeover {

/// Bad configuration or unreadable input; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while running the pipeline on valid inputs; exit code 1.
class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  using path = std::filesystem::path;
  path events, geo, tor, compromise_times, emails, inbox_rules, overrides, centroids, email_apps,
      breach_list, org_sectors, truth;
  Seconds day = kDay;
  Seconds week = kWeek;
  Seconds indicator_window = kIndicatorWindow;
  std::uint64_t seed = 1;
  bool dedup = false;
  bool sample_sessions = false;  // up to 2 attacker + 1 benign sessions per user
  path out = "out";
};

/// Reads a JSON config. Relative paths resolve against the config's
/// directory. A "corpus" key names a directory laid out like the synthetic
/// generator's output and fills every path left unset.
RunConfig load_config(const std::filesystem::path& file);

/// Fills unset paths from a generator-style corpus directory.
void apply_corpus_dir(RunConfig& cfg, const std::filesystem::path& dir);

/// Thresholds positive, required inputs named and present.
void check_config(const RunConfig& cfg, bool need_events);

struct Diagnostics {
  std::size_t lines = 0;
  std::size_t accepted = 0;
  std::size_t retained = 0;  // accepted events of listed users inside [t-60d, t+30d]
  std::map<std::string, std::size_t> rejects;
  std::size_t cases = 0;
  std::size_t insufficient_history = 0;
  std::vector<std::string> insufficient_history_users;
  std::size_t t_outside_span = 0;
  std::size_t labeled_events = 0;
  std::size_t unclassifiable = 0;
  std::map<std::string, std::size_t> unclassifiable_reasons;
  std::size_t attacker_events = 0;
  std::size_t sessions = 0;
  std::size_t evaluated_sessions = 0;
  std::map<std::string, std::size_t> indicator_flags;
  std::vector<std::string> warnings;

  Json to_json() const;
};

/// Reference tables shared by every case.
struct Inputs {
  GeoTable geo;
  CentroidTable centroids;
  std::map<std::string, std::vector<ManualOverride>> overrides;  // by user
  std::optional<std::unordered_map<std::string, TruthTag>> truth;
  AnalysisConfig analysis;
  std::unordered_set<std::string> breached;
  std::map<std::string, std::string> sectors;
  bool has_truth_source = false;
};

Inputs load_inputs(const RunConfig& cfg);

/// Streams the corpus, keeping only events of users with a compromise time
/// that fall inside their case window.
std::vector<CompromiseCase> ingest(const RunConfig& cfg, Diagnostics& diag);

/// Sessions of one classified case with indicators, truth and overrides
/// applied (truth from the sidecar when loaded, else from indicators).
std::vector<Session> build_sessions(const CompromiseCase& c, std::span<const GeoLookup> enriched,
                                    const CaseClassification& cls, const Inputs& in,
                                    const RunConfig& cfg, Diagnostics& diag);

struct Stages {
  bool classify = false;
  bool evaluate = false;
  bool analyze = false;
};

struct RunResult {
  Diagnostics diagnostics;
  std::optional<EvalMetrics> metrics;
  std::vector<CaseReport> reports;  // after dedup when requested
};

/// Runs the requested stages case by case and writes their outputs under
/// cfg.out. Every output is a pure function of config and inputs.
RunResult run_pipeline(const RunConfig& cfg, Stages stages);

}  // namespace takeover
