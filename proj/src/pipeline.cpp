#include "takeover/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include "takeover/csv.hpp"
#include "takeover/profile.hpp"

namespace takeover {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& p, std::string_view what) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + std::string(what) + " file: " + p.string());
  return f;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  return f;
}

void write_json(const fs::path& p, const Json& j) {
  auto f = open_out(p);
  f << j.dump(2) << '\n';
}

}  // namespace

void apply_corpus_dir(RunConfig& cfg, const fs::path& dir) {
  auto fill = [&](fs::path& field, const char* name, bool required) {
    if (!field.empty()) return;
    const fs::path p = dir / name;
    if (required || fs::exists(p)) field = p;
  };
  fill(cfg.events, "events.jsonl", true);
  fill(cfg.geo, "geo.csv", true);
  fill(cfg.compromise_times, "compromise_times.csv", true);
  fill(cfg.tor, "tor.txt", false);
  fill(cfg.emails, "emails.csv", false);
  fill(cfg.inbox_rules, "inbox_rules.csv", false);
  fill(cfg.overrides, "overrides.csv", false);
  fill(cfg.centroids, "centroids.csv", false);
  fill(cfg.email_apps, "email_apps.txt", false);
  fill(cfg.breach_list, "breach_list.txt", false);
  fill(cfg.org_sectors, "org_sectors.csv", false);
  fill(cfg.truth, "truth.csv", false);
}

RunConfig load_config(const fs::path& file) {
  auto in = open_in(file, "config");
  const Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ConfigError(file.string() + ": not a JSON object");
  }
  const fs::path base = file.parent_path();
  auto resolve = [&](const std::string& s) {
    const fs::path p(s);
    return p.is_absolute() || base.empty() ? p : base / p;
  };
  RunConfig cfg;
  const std::map<std::string, fs::path*> paths = {
      {"events", &cfg.events},
      {"geo", &cfg.geo},
      {"tor", &cfg.tor},
      {"compromise_times", &cfg.compromise_times},
      {"emails", &cfg.emails},
      {"inbox_rules", &cfg.inbox_rules},
      {"overrides", &cfg.overrides},
      {"centroids", &cfg.centroids},
      {"email_apps", &cfg.email_apps},
      {"breach_list", &cfg.breach_list},
      {"org_sectors", &cfg.org_sectors},
      {"truth", &cfg.truth},
      {"out", &cfg.out},
  };
  std::optional<fs::path> corpus;
  for (const auto& [key, value] : j.items()) {
    const std::string where = file.string() + ": " + key;
    try {
      if (auto it = paths.find(key); it != paths.end()) {
        *it->second = resolve(value.get<std::string>());
      } else if (key == "corpus") {
        corpus = resolve(value.get<std::string>());
      } else if (key == "day_threshold") {
        cfg.day = value.get<Seconds>();
      } else if (key == "week_threshold") {
        cfg.week = value.get<Seconds>();
      } else if (key == "indicator_window") {
        cfg.indicator_window = value.get<Seconds>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "dedup") {
        cfg.dedup = value.get<bool>();
      } else if (key == "sample_sessions") {
        cfg.sample_sessions = value.get<bool>();
      } else {
        throw ConfigError(where + ": unknown key");
      }
    } catch (const Json::exception&) {
      throw ConfigError(where + ": wrong type");
    }
  }
  if (corpus) apply_corpus_dir(cfg, *corpus);
  return cfg;
}

void check_config(const RunConfig& cfg, bool need_events) {
  if (cfg.day <= 0) throw ConfigError("day threshold must be > 0");
  if (cfg.week <= 0) throw ConfigError("week threshold must be > 0");
  if (cfg.indicator_window <= 0) throw ConfigError("indicator window must be > 0");
  if (cfg.out.empty()) throw ConfigError("no output directory given");
  if (!need_events) return;
  const std::pair<const fs::path*, const char*> required[] = {
      {&cfg.events, "--events"}, {&cfg.geo, "--geo"}, {&cfg.compromise_times, "--compromise"}};
  for (const auto& [p, flag] : required) {
    if (p->empty()) throw ConfigError(std::string("missing required input ") + flag);
  }
  for (const fs::path* p :
       {&cfg.events, &cfg.geo, &cfg.tor, &cfg.compromise_times, &cfg.emails, &cfg.inbox_rules,
        &cfg.overrides, &cfg.centroids, &cfg.email_apps, &cfg.breach_list, &cfg.org_sectors,
        &cfg.truth}) {
    if (!p->empty() && !fs::is_regular_file(*p)) {
      throw ConfigError("input file not found: " + p->string());
    }
  }
}

Json Diagnostics::to_json() const {
  Json j;
  j["lines"] = lines;
  j["accepted_events"] = accepted;
  j["retained_events"] = retained;
  j["rejected"] = rejects;
  j["cases"] = cases;
  j["insufficient_history"] = insufficient_history;
  j["insufficient_history_users"] = insufficient_history_users;
  j["t_outside_span"] = t_outside_span;
  j["labeled_events"] = labeled_events;
  j["attacker_events"] = attacker_events;
  j["unclassifiable"] = unclassifiable;
  j["unclassifiable_reasons"] = unclassifiable_reasons;
  j["sessions"] = sessions;
  j["evaluated_sessions"] = evaluated_sessions;
  j["indicator_flags"] = indicator_flags;
  j["warnings"] = warnings;
  return j;
}

namespace {

std::vector<std::string> read_lines(const fs::path& p, std::string_view what) {
  auto in = open_in(p, what);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    const auto v = trim(std::string_view(line).substr(0, hash));
    if (!v.empty()) out.emplace_back(v);
  }
  return out;
}

}  // namespace

Inputs load_inputs(const RunConfig& cfg) {
  Inputs in;
  {
    auto f = open_in(cfg.geo, "geo table");
    in.geo = load_geo_table(f, cfg.geo.string());
  }
  if (!cfg.tor.empty()) {
    auto f = open_in(cfg.tor, "tor list");
    load_tor_list(f, in.geo, cfg.tor.string());
  }
  if (!cfg.centroids.empty()) {
    auto f = open_in(cfg.centroids, "centroids");
    in.centroids = load_centroids(f, cfg.centroids.string());
  }
  if (!cfg.overrides.empty()) {
    auto f = open_in(cfg.overrides, "overrides");
    for (auto& o : load_overrides(f, cfg.overrides.string())) {
      in.overrides[o.user_id].push_back(std::move(o));
    }
  }
  if (!cfg.truth.empty()) {
    auto f = open_in(cfg.truth, "truth sidecar");
    in.truth = load_truth_sidecar(f, cfg.truth.string());
  }
  in.analysis.day = cfg.day;
  in.analysis.week = cfg.week;
  in.analysis.indicator_window = cfg.indicator_window;
  if (!cfg.email_apps.empty()) {
    for (auto& a : read_lines(cfg.email_apps, "email apps")) in.analysis.email_apps.insert(a);
  }
  if (!cfg.breach_list.empty()) {
    for (auto& a : read_lines(cfg.breach_list, "breach list")) in.breached.insert(to_lower(a));
  }
  if (!cfg.org_sectors.empty()) {
    auto f = open_in(cfg.org_sectors, "org sectors");
    CsvReader csv(f);
    csv.expect_header({"organization", "sector"}, cfg.org_sectors.string());
    std::vector<std::string> row;
    while (csv.next(row)) {
      if (row.size() < 2) {
        throw InputError(cfg.org_sectors.string() + ":" + std::to_string(csv.line()) +
                         ": expected 2 columns");
      }
      in.sectors[to_lower(trim(row[0]))] = std::string(trim(row[1]));
    }
  }
  in.has_truth_source = in.truth || !cfg.emails.empty() || !cfg.inbox_rules.empty() ||
                        !cfg.tor.empty() || !cfg.centroids.empty() || !in.overrides.empty();
  return in;
}

std::vector<CompromiseCase> ingest(const RunConfig& cfg, Diagnostics& diag) {
  CompromiseTimes times;
  {
    auto f = open_in(cfg.compromise_times, "compromise times");
    times = load_compromise_times(f, cfg.compromise_times.string());
  }
  std::vector<EmailRecord> emails;
  if (!cfg.emails.empty()) {
    auto f = open_in(cfg.emails, "emails");
    emails = load_emails(f, cfg.emails.string());
  }
  RuleDetections rules;
  if (!cfg.inbox_rules.empty()) {
    auto f = open_in(cfg.inbox_rules, "inbox rules");
    rules = load_inbox_rules(f, cfg.inbox_rules.string());
  }

  std::vector<AuditEvent> kept;
  {
    auto f = open_in(cfg.events, "events");
    parse_corpus(
        f,
        [&](AuditEvent&& e) {
          ++diag.accepted;
          const auto it = times.find(e.user_id);
          if (it == times.end()) return;
          if (e.timestamp < it->second - 2 * kMonth || e.timestamp > it->second + kMonth) return;
          kept.push_back(std::move(e));
        },
        [&](RejectRecord&& r) { ++diag.rejects[std::string(to_string(r.reason))]; });
  }
  std::size_t rejected = 0;
  for (const auto& [reason, n] : diag.rejects) rejected += n;
  diag.lines = diag.accepted + rejected;
  diag.retained = kept.size();
  if (diag.accepted == 0) diag.warnings.emplace_back("corpus contains no events");
  return build_cases(std::move(kept), times, emails, rules);
}

std::vector<Session> build_sessions(const CompromiseCase& c, std::span<const GeoLookup> enriched,
                                    const CaseClassification& cls, const Inputs& in,
                                    const RunConfig& cfg, Diagnostics& diag) {
  auto sessions = sessionize(cls.events);
  const HomeContext home = make_home_context(c, enriched);
  for (auto& s : sessions) {
    s.indicators.phishing = phishing_indicator(s, c.emails, cfg.indicator_window);
    s.indicators.inbox_rules = inbox_rules_indicator(s, c.inbox_rule_detections, cfg.indicator_window);
    s.indicators.tor = tor_indicator(s, in.geo);
    const auto ia = interarrival_indicator(s, home, in.centroids);
    s.indicators.interarrival = ia.value;
    if (ia.flag) {
      s.flags.push_back(*ia.flag);
      ++diag.indicator_flags[*ia.flag];
    }
    if (in.truth) {
      s.truth_label = sidecar_truth(s, *in.truth);
      s.truth_source = TruthSource::Sidecar;
    } else {
      s.truth_label = ground_truth(s.indicators);
      s.truth_source = TruthSource::Indicators;
    }
  }
  if (const auto it = in.overrides.find(c.user_id); it != in.overrides.end()) {
    apply_overrides(sessions, it->second);
  }
  if (cfg.sample_sessions) sessions = sample_sessions(std::move(sessions), cfg.seed);
  return sessions;
}

namespace {

std::string flag_text(const Session& s) {
  std::string out;
  for (const auto& f : s.flags) {
    if (!out.empty()) out += ';';
    out += f;
  }
  return out;
}

void write_labeled(std::ostream& out, const CaseClassification& cls) {
  for (const auto& le : cls.events) {
    const auto& e = le.ev();
    std::vector<std::string> row{e.id, e.user_id, format_iso8601(e.timestamp)};
    if (le.geo) {
      row.push_back(le.geo->country);
      row.push_back(le.geo->subdivision.value_or(""));
      row.push_back(le.geo->isp.value_or(""));
    } else {
      row.insert(row.end(), 3, "");
    }
    row.push_back(le.ua.value());
    if (le.features) {
      row.push_back(std::to_string(le.features->geo));
      row.push_back(std::to_string(le.features->ua));
    } else {
      row.insert(row.end(), 2, "");
    }
    row.emplace_back(to_string(le.label));
    row.emplace_back(to_string(le.phase));
    std::string flags;
    if (le.unclassifiable) flags = "unclassifiable:" + std::string(to_string(*le.unclassifiable));
    if (le.geo && le.geo->is_tor) flags += flags.empty() ? "tor" : ";tor";
    row.push_back(std::move(flags));
    out << csv_join(row) << '\n';
  }
}

void write_session_row(std::ostream& out, const Session& s) {
  auto b = [](bool v) { return std::string(v ? "1" : "0"); };
  std::vector<std::string> row{s.user_id,
                               s.key.ip,
                               s.key.ua.value(),
                               s.phase ? std::string(to_string(*s.phase)) : std::string(),
                               format_iso8601(s.first_time()),
                               format_iso8601(s.events.back()->timestamp()),
                               std::to_string(s.events.size()),
                               std::string(to_string(s.rule_label)),
                               s.truth_label ? std::string(to_string(*s.truth_label)) : "",
                               std::string(to_string(s.truth_source)),
                               b(s.indicators.phishing),
                               b(s.indicators.inbox_rules),
                               b(s.indicators.interarrival),
                               b(s.indicators.tor),
                               flag_text(s)};
  out << csv_join(row) << '\n';
}

}  // namespace

RunResult run_pipeline(const RunConfig& cfg, Stages stages) {
  check_config(cfg, true);
  RunResult result;
  Diagnostics& diag = result.diagnostics;
  const Inputs in = load_inputs(cfg);
  if (stages.evaluate && !in.has_truth_source) {
    throw ConfigError(
        "evaluate needs truth: give a truth sidecar or at least one indicator source "
        "(emails, inbox rules, tor list, centroids, overrides)");
  }
  auto cases = ingest(cfg, diag);
  diag.cases = cases.size();

  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) throw ConfigError("cannot create output directory " + cfg.out.string());

  std::optional<std::ofstream> labeled_out, sessions_out;
  if (stages.classify) {
    labeled_out = open_out(cfg.out / "labeled_events.csv");
    *labeled_out << "id,user_id,timestamp,country,subdivision,isp,normalized_ua,geo_feature,"
                    "ua_feature,label,phase,flags\n";
  }
  if (stages.evaluate) {
    sessions_out = open_out(cfg.out / "sessions.csv");
    *sessions_out << "user_id,ip,normalized_ua,phase,first_seen,last_seen,events,rule_label,"
                     "truth_label,truth_source,phishing,inbox_rules,interarrival,tor,flags\n";
  }

  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::set<std::string> override_users_seen;
  std::vector<CaseReport> reports;

  for (auto& c : cases) {
    if (c.t_outside_span) ++diag.t_outside_span;
    const auto enriched = enrich(c.events, in.geo);
    auto classified = classify_case(c, enriched);
    if (std::holds_alternative<InsufficientHistory>(classified)) {
      ++diag.insufficient_history;
      diag.insufficient_history_users.push_back(c.user_id);
      c.events.clear();
      c.events.shrink_to_fit();
      continue;
    }
    const auto& cls = std::get<CaseClassification>(classified);
    diag.labeled_events += cls.events.size();
    diag.unclassifiable += cls.unclassifiable;
    diag.attacker_events += cls.attacker_events;
    for (const auto& le : cls.events) {
      if (le.unclassifiable) ++diag.unclassifiable_reasons[std::string(to_string(*le.unclassifiable))];
    }
    if (labeled_out) write_labeled(*labeled_out, cls);

    if (stages.evaluate) {
      if (in.overrides.count(c.user_id)) override_users_seen.insert(c.user_id);
      const auto sessions = build_sessions(c, enriched, cls, in, cfg, diag);
      diag.sessions += sessions.size();
      for (const auto& s : sessions) {
        write_session_row(*sessions_out, s);
        // Sessions without a location carry no rule decision, so they are
        // reported but not scored.
        if (!s.geo()) continue;
        ++diag.evaluated_sessions;
        const bool rule = s.rule_label == Label::Attacker;
        const bool truth = *s.truth_label == Label::Attacker;
        (rule ? (truth ? tp : fp) : (truth ? fn : tn)) += 1;
      }
    }
    if (stages.analyze) reports.push_back(analyze_case(c, cls, in.analysis));
    c.events.clear();
    c.events.shrink_to_fit();
  }

  if (stages.evaluate) {
    for (const auto& [user, list] : in.overrides) {
      if (!override_users_seen.count(user)) {
        throw UnknownSession("override for " + user + " matches no classified case");
      }
    }
    if (diag.evaluated_sessions == 0) {
      throw PipelineError("no sessions to evaluate");
    }
    result.metrics = EvalMetrics::from_counts(tp, fp, fn, tn);
    write_json(cfg.out / "metrics.json", to_json(*result.metrics));
  }

  if (stages.analyze) {
    if (cfg.dedup) reports = dedup_sample(reports, cfg.seed);
    {
      auto f = open_out(cfg.out / "cases.jsonl");
      for (const auto& r : reports) f << to_json(r).dump() << '\n';
    }
    AggregateReport agg(in.analysis);
    for (const auto& r : reports) agg.add(r);
    Json j = to_json(agg);
    j["dedup"] = cfg.dedup;
    j["breach_overlap"] = to_json(breach_overlap(reports, in.breached, in.sectors));
    write_json(cfg.out / "aggregate.json", j);
    for (const auto& [name, values] : agg.series()) {
      auto f = open_out(cfg.out / ("ecdf_" + name + ".csv"));
      write_ecdf_csv(f, values);
    }
    result.reports = std::move(reports);
  }

  write_json(cfg.out / "diagnostics.json", diag.to_json());
  return result;
}

}  // namespace takeover
