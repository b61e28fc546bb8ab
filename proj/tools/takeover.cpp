// takeover: classify logins in compromised accounts and analyze attacker
// behavior.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "takeover/csv.hpp"
#include "takeover/pipeline.hpp"
#include "takeover/synth.hpp"

namespace fs = std::filesystem;
using namespace takeover;

namespace {

constexpr int kExitPipeline = 1;
constexpr int kExitConfig = 2;

struct PipelineFlags {
  std::string config, corpus;
  RunConfig cli;
  std::optional<Seconds> day, week, window;
  std::optional<std::uint64_t> seed;
  bool dedup = false;
  bool sample = false;
  std::optional<std::string> out;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--corpus", f.corpus, "directory laid out like `generate` output");
  cmd->add_option("--events", f.cli.events, "audit events (JSONL)");
  cmd->add_option("--geo", f.cli.geo, "geolocation table (CSV)");
  cmd->add_option("--tor", f.cli.tor, "Tor exit list");
  cmd->add_option("--compromise", f.cli.compromise_times, "confirmed compromise times (CSV)");
  cmd->add_option("--emails", f.cli.emails, "sent-email records (CSV)");
  cmd->add_option("--inbox-rules", f.cli.inbox_rules, "inbox-rule detections (CSV)");
  cmd->add_option("--overrides", f.cli.overrides, "manual session truth overrides (CSV)");
  cmd->add_option("--centroids", f.cli.centroids, "subdivision centroids (CSV)");
  cmd->add_option("--email-apps", f.cli.email_apps, "email application ids, one per line");
  cmd->add_option("--breach-list", f.cli.breach_list, "breached accounts, one per line");
  cmd->add_option("--org-sectors", f.cli.org_sectors, "organization sectors (CSV)");
  cmd->add_option("--truth", f.cli.truth, "per-event truth sidecar (CSV)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "seed for all sampling");
  cmd->add_flag("--dedup", f.dedup, "keep one case per organization and month");
  cmd->add_flag("--sample-sessions", f.sample,
                "evaluate up to 2 attacker and 1 benign sessions per user");
  cmd->add_option("--day-threshold", f.day, "seconds in a day");
  cmd->add_option("--week-threshold", f.week, "seconds in a week");
  cmd->add_option("--indicator-window", f.window, "indicator window in seconds");
}

RunConfig resolve(const PipelineFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  auto take = [](fs::path& dst, const fs::path& src) {
    if (!src.empty()) dst = src;
  };
  if (!f.corpus.empty()) apply_corpus_dir(cfg, f.corpus);
  take(cfg.events, f.cli.events);
  take(cfg.geo, f.cli.geo);
  take(cfg.tor, f.cli.tor);
  take(cfg.compromise_times, f.cli.compromise_times);
  take(cfg.emails, f.cli.emails);
  take(cfg.inbox_rules, f.cli.inbox_rules);
  take(cfg.overrides, f.cli.overrides);
  take(cfg.centroids, f.cli.centroids);
  take(cfg.email_apps, f.cli.email_apps);
  take(cfg.breach_list, f.cli.breach_list);
  take(cfg.org_sectors, f.cli.org_sectors);
  take(cfg.truth, f.cli.truth);
  if (f.out) cfg.out = *f.out;
  if (f.seed) cfg.seed = *f.seed;
  if (f.day) cfg.day = *f.day;
  if (f.week) cfg.week = *f.week;
  if (f.window) cfg.indicator_window = *f.window;
  cfg.dedup = cfg.dedup || f.dedup;
  cfg.sample_sessions = cfg.sample_sessions || f.sample;
  return cfg;
}

void print_summary(const RunResult& r, const Stages& stages) {
  const auto& d = r.diagnostics;
  std::cout << "cases: " << d.cases << " (insufficient history: " << d.insufficient_history
            << ")\n";
  std::cout << "labeled events: " << d.labeled_events << ", attacker: " << d.attacker_events
            << ", unclassifiable: " << d.unclassifiable << '\n';
  if (stages.evaluate && r.metrics) {
    const auto& m = *r.metrics;
    std::cout << "sessions: " << d.evaluated_sessions << " tp=" << m.tp << " fp=" << m.fp
              << " fn=" << m.fn << " tn=" << m.tn << '\n';
  }
  if (stages.analyze) std::cout << "case reports: " << r.reports.size() << '\n';
  for (const auto& w : d.warnings) std::cerr << "warning: " << w << '\n';
}

int run_generate(const std::string& spec_path, const std::string& out,
                 std::optional<std::uint64_t> seed, std::optional<std::size_t> users) {
  synth::ScenarioSpec spec = synth::paper_mix();
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw ConfigError("cannot open spec file: " + spec_path);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(spec_path + ": not valid JSON");
    spec = synth::parse_spec(j);
  }
  if (seed) spec.seed = *seed;
  if (users) spec.users = *users;
  synth::validate(spec);
  const auto corpus = synth::generate(spec);
  synth::write_corpus(corpus, out);
  std::map<std::string_view, std::size_t> counts;
  for (const auto& u : corpus.users) ++counts[synth::to_string(u.archetype)];
  std::cout << "users: " << corpus.users.size() << ", events: " << corpus.events.size() << '\n';
  for (const auto& [name, n] : counts) std::cout << "  " << name << ": " << n << '\n';
  if (spec.users == 0) std::cerr << "warning: users=0, wrote an empty corpus\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classify logins in compromised accounts and analyze attacker behavior"};
  app.require_subcommand(1);

  std::string spec_path, gen_out = "corpus";
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::size_t> gen_users;
  auto* gen = app.add_subcommand("generate", "write a synthetic corpus");
  gen->add_option("--spec", spec_path, "scenario spec (JSON); defaults to the paper mix");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--seed", gen_seed, "override the spec seed");
  gen->add_option("--users", gen_users, "override the spec user count");

  PipelineFlags flags;
  const std::map<std::string, Stages> commands = {
      {"classify", {true, false, false}},
      {"evaluate", {false, true, false}},
      {"analyze", {false, false, true}},
      {"all", {true, true, true}},
  };
  const std::map<std::string, std::string> help = {
      {"classify", "label login events attacker or benign"},
      {"evaluate", "score session labels against truth"},
      {"analyze", "per-case and aggregate attacker analytics"},
      {"all", "classify, evaluate and analyze"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, stages] : commands) {
    subs[name] = app.add_subcommand(name, help.at(name));
    add_pipeline_flags(subs[name], flags);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) return run_generate(spec_path, gen_out, gen_seed, gen_users);
    for (const auto& [name, stages] : commands) {
      if (!subs[name]->parsed()) continue;
      const RunConfig cfg = resolve(flags);
      const auto result = run_pipeline(cfg, stages);
      print_summary(result, stages);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const synth::SpecError& e) {
    std::cerr << "error: invalid spec: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPipeline;
  }
  return kExitConfig;
}
