#include "commands.hpp"

#include <yaml-cpp/yaml.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include "tacc/trace_io.hpp"

namespace tacc::cli {

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<Tick> overlap_window;
  std::optional<Tick> duplicate_window;
  std::optional<Tick> epsilon;

  void add_to(CLI::App& app) {
    app.add_option("--overlap-window", overlap_window, "Overlap window W in ticks");
    app.add_option("--dup-window", duplicate_window, "Duplicate-event window D in ticks");
    app.add_option("--epsilon", epsilon, "Same-tick tolerance in ticks");
  }

  void apply(DetectorConfig& cfg) const {
    if (overlap_window) cfg.overlap_window = *overlap_window;
    if (duplicate_window) cfg.duplicate_window = *duplicate_window;
    if (epsilon) cfg.same_tick_epsilon = *epsilon;
    cfg.validate();
  }
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  return f;
}

void print_counts(std::ostream& out, const std::array<std::size_t, 7>& counts) {
  std::size_t total = 0;
  for (auto k : kAllConflictKinds) {
    out << to_string(k) << ": " << counts[kind_slot(k)] << '\n';
    total += counts[kind_slot(k)];
  }
  out << "total: " << total << '\n';
}

std::array<std::size_t, 7> count_kinds(const std::vector<Conflict>& cs) {
  std::array<std::size_t, 7> counts{};
  for (const auto& c : cs) ++counts[kind_slot(c.kind)];
  return counts;
}

// ---------------------------------------------------------------------------

int cmd_check(const fs::path& ruleset, const Overrides& ov, std::ostream& out) {
  Document doc = load_document(ruleset);
  ov.apply(doc.detector);
  const RuleSet& rs = doc.ruleset;
  const auto found = static_check(rs, doc.detector);
  auto controller = [&](const RuleId& id) { return rs.rule(*rs.rule_index(id)).controller.str(); };
  for (auto k : kAllConflictKinds) {
    std::vector<const PotentialConflict*> of_kind;
    for (const auto& p : found) {
      if (p.kind == k) of_kind.push_back(&p);
    }
    if (of_kind.empty()) continue;
    out << to_string(k) << " (" << of_kind.size() << ")\n";
    for (const auto* p : of_kind) {
      out << "  " << p->rule_a << " [" << controller(p->rule_a) << "] vs " << p->rule_b << " ["
          << controller(p->rule_b) << "]: " << p->note << '\n';
    }
  }
  out << found.size() << " potential conflict" << (found.size() == 1 ? "" : "s") << '\n';
  return found.empty() ? kClean : kConflicts;
}

int cmd_monitor(const fs::path& ruleset, const fs::path& trace, const std::optional<fs::path>& log,
                const Overrides& ov, std::ostream& out) {
  Document doc = load_document(ruleset);
  ov.apply(doc.detector);
  auto rs = std::make_shared<const RuleSet>(doc.ruleset);
  const auto events = load_trace(trace, *rs);
  const auto conflicts = detect_trace(events, rs, doc.detector);
  if (log) {
    auto f = open_out(*log);
    write_conflict_log(f, conflicts);
  } else {
    write_conflict_log(out, conflicts);
  }
  print_counts(out, count_kinds(conflicts));
  return conflicts.empty() ? kClean : kConflicts;
}

int cmd_report(const fs::path& ruleset, const fs::path& trace, const std::optional<fs::path>& dir,
               sim::Suppression suppression,
               const Overrides& ov, std::ostream& out) {
  Document doc = load_document(ruleset);
  ov.apply(doc.detector);
  const auto events = load_trace(trace, doc.ruleset);
  const auto report = sim::replay_trace(doc, events, suppression, sim::default_house(doc.ruleset));
  if (dir) {
    fs::create_directories(*dir);
    auto series = open_out(*dir / "series.csv");
    sim::write_series_csv(series, report);
    auto log = open_out(*dir / "conflicts.csv");
    write_conflict_log(log, report.conflicts);
  }
  print_counts(out, report.conflict_counts);
  out << "suppressed_events: " << report.suppressed_events << '\n';
  out << "suppressed_actions: " << report.suppressed_actions << '\n';
  for (const auto& a : report.actuations) out << "actuations " << a.actuator << ": " << a.count << '\n';
  return report.total_conflicts() == 0 ? kClean : kConflicts;
}

struct SimulateOptions {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::size_t seeds = 1;
  fs::path out_dir;
  std::optional<Tick> horizon;
  std::optional<std::string> suppression;
  std::vector<std::string> probabilities;  // source=p
  unsigned threads = 0;
};

std::pair<sim::Scenario, Document> resolve_scenario(const std::string& name) {
  for (auto& s : sim::builtin_scenarios()) {
    if (s.id == name) return {s, sim::load_bundled(s.fixture)};
  }
  if (fs::is_regular_file(name)) return load_scenario_file(name);
  throw sim::UnknownScenarioError("unknown scenario '" + name + "' (expected S1..S8 or a scenario file)");
}

int cmd_simulate(const SimulateOptions& o, const Overrides& ov, std::ostream& out) {
  auto [base, doc] = resolve_scenario(o.scenario);
  ov.apply(doc.detector);
  if (o.horizon) base.horizon = *o.horizon;
  if (o.suppression) base.suppression = sim::parse_suppression(*o.suppression);
  for (const auto& kv : o.probabilities) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidValueError("--set expects source=p, got '" + kv + "'");
    base.set_probability(kv.substr(0, eq), std::stod(kv.substr(eq + 1)));
  }
  base.validate();
  const std::uint64_t first = o.seed.value_or(base.seed);

  std::vector<sim::TraceReport> reports(o.seeds);
  std::vector<std::exception_ptr> failures(o.seeds);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < o.seeds; i = next++) {
      try {
        sim::Scenario s = base;
        s.seed = first + i;
        reports[i] = sim::run_scenario(s, doc);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(o.threads ? o.threads : std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(o.seeds)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  fs::create_directories(o.out_dir);
  {
    auto f = open_out(o.out_dir / "ruleset.yaml");
    f << serialize_document(doc);
  }
  for (const auto& r : reports) {
    const std::string seed = std::to_string(r.seed);
    auto series = open_out(o.out_dir / ("trace_" + seed + ".csv"));
    sim::write_series_csv(series, r);
    auto log = open_out(o.out_dir / ("conflicts_" + seed + ".csv"));
    write_conflict_log(log, r.conflicts);
    auto events = open_out(o.out_dir / ("events_" + seed + ".csv"));
    write_trace(events, r.events);
    if (r.baseline) {
      auto b = open_out(o.out_dir / ("baseline_trace_" + seed + ".csv"));
      sim::write_series_csv(b, *r.baseline);
    }
  }
  {
    auto f = open_out(o.out_dir / "summary.csv");
    sim::write_summary_csv(f, reports);
  }

  std::size_t total = 0;
  out << base.id << ": " << o.seeds << " seed" << (o.seeds == 1 ? "" : "s") << " from " << first << ", horizon "
      << base.horizon << (base.suppression != sim::Suppression::Off ? ", suppression " + std::string(to_string(base.suppression)) : "") << '\n';
  for (auto k : kAllConflictKinds) {
    double sum = 0;
    for (const auto& r : reports) sum += static_cast<double>(r.count(k));
    out << "mean " << to_string(k) << ": " << std::fixed << std::setprecision(3) << sum / static_cast<double>(o.seeds)
        << '\n';
  }
  for (const auto& r : reports) total += r.total_conflicts();
  out << "wrote " << o.out_dir.string() << '\n';
  return total == 0 ? kClean : kConflicts;
}

}  // namespace

std::pair<sim::Scenario, Document> load_scenario_file(const fs::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
  } catch (const YAML::BadFile&) {
    throw Error("cannot open scenario '" + path.string() + "'");
  }
  if (!root.IsMap()) throw ParseError("scenario file must be a mapping", 1, 1);
  auto field = [&](const char* key) -> YAML::Node { return root[key]; };
  try {
    for (const auto& kv : root) {
      static const std::set<std::string> known = {"base", "ruleset", "horizon", "start_tick", "seed", "suppression",
                                                  "probabilities"};
      const auto key = kv.first.as<std::string>();
      if (!known.count(key)) {
        throw ParseError("unknown scenario field '" + key + "'", kv.first.Mark().line + 1, kv.first.Mark().column + 1);
      }
    }
    if (!field("base")) throw ParseError("scenario file needs 'base: S1..S8'", 1, 1);
    sim::Scenario s = sim::builtin_scenario(field("base").as<std::string>());
    Document doc = field("ruleset") ? load_document(path.parent_path() / field("ruleset").as<std::string>())
                                    : sim::load_bundled(s.fixture);
    if (field("horizon")) s.horizon = field("horizon").as<Tick>();
    if (field("start_tick")) s.start_tick = field("start_tick").as<Tick>();
    if (field("seed")) s.seed = field("seed").as<std::uint64_t>();
    if (field("suppression")) s.suppression = sim::parse_suppression(field("suppression").as<std::string>());
    if (auto p = field("probabilities")) {
      for (const auto& kv : p) s.set_probability(kv.first.as<std::string>(), kv.second.as<double>());
    }
    s.id = path.stem().string();
    s.validate();
    return {s, doc};
  } catch (const YAML::Exception& e) {
    throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trigger-action conflict checker, monitor and smart-home simulator", "tacc"};
  app.require_subcommand(1);
  Overrides ov;

  fs::path ruleset, trace;
  std::optional<fs::path> log, report_dir;
  std::string report_suppression = "off";
  SimulateOptions sim_opts;

  auto* check = app.add_subcommand("check", "Statically check a ruleset for potential conflicts");
  check->add_option("--ruleset", ruleset, "Ruleset document (YAML)")->required();
  ov.add_to(*check);

  auto* monitor = app.add_subcommand("monitor", "Stream an event trace through the conflict detector");
  monitor->add_option("--ruleset", ruleset, "Ruleset document (YAML)")->required();
  monitor->add_option("--trace", trace, "Event trace (CSV)")->required();
  monitor->add_option("--out", log, "Write the conflict log here instead of stdout");
  ov.add_to(*monitor);

  auto* simulate = app.add_subcommand("simulate", "Run a smart-home scenario over one or more seeds");
  simulate->add_option("--scenario", sim_opts.scenario, "S1..S8 or a scenario file")->required();
  simulate->add_option("--seed", sim_opts.seed, "First seed");
  simulate->add_option("--seeds", sim_opts.seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim_opts.out_dir, "Output directory")->required();
  simulate->add_option("--horizon", sim_opts.horizon, "Override the horizon in ticks");
  simulate->add_option("--suppress", sim_opts.suppression, "Suppression: off, duplicates or all")
      ->check(CLI::IsMember({"off", "duplicates", "all"}));
  simulate->add_option("--set", sim_opts.probabilities, "Source probability, source=p (repeatable)");
  simulate->add_option("--threads", sim_opts.threads, "Worker threads (default: all cores)");
  ov.add_to(*simulate);

  auto* report = app.add_subcommand("report", "Replay a trace through the house model; per-kind counts and series");
  report->add_option("--ruleset", ruleset, "Ruleset document (YAML)")->required();
  report->add_option("--trace", trace, "Event trace (CSV)")->required();
  report->add_option("--out", report_dir, "Directory for series.csv and conflicts.csv");
  report->add_option("--suppress", report_suppression, "Suppression: off, duplicates or all")
      ->check(CLI::IsMember({"off", "duplicates", "all"}));
  ov.add_to(*report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }

  try {
    if (check->parsed()) return cmd_check(ruleset, ov, out);
    if (monitor->parsed()) return cmd_monitor(ruleset, trace, log, ov, out);
    if (simulate->parsed()) return cmd_simulate(sim_opts, ov, out);
    return cmd_report(ruleset, trace, report_dir, sim::parse_suppression(report_suppression), ov, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kInputError;
}

}  // namespace tacc::cli
