#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "commands.hpp"
#include "doctest.h"
#include "tacc/simulator.hpp"
#include "tacc/trace_io.hpp"

namespace fs = std::filesystem;
using namespace tacc;

namespace {

struct Result {
  int status = 0;
  std::string out;
  std::string err;
};

Result tacc_run(std::vector<std::string> args) {
  args.insert(args.begin(), "tacc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.status = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// A fresh scratch directory removed at scope exit.
struct Scratch {
  fs::path dir;
  Scratch() {
    static int counter = 0;
    dir = fs::temp_directory_path() / ("tacc_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string write(const std::string& name, std::string_view text) const {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::map<std::string, int> kinds_in_log(const std::string& log) {
  std::map<std::string, int> out;
  auto ls = lines(log);
  for (std::size_t i = 1; i < ls.size(); ++i) ++out[ls[i].substr(ls[i].find(',') + 1, 2)];
  return out;
}

const char* kDuplicateTrace =
    "tick,sensor,kind,predicate,value,location\n"
    "0,ts1,temperature,less-than,60,room1\n"
    "20,ts1,temperature,less-than,60,room1\n";

}  // namespace

TEST_CASE("check") {
  Scratch s;
  auto clean = s.write("clean.yaml", sim::bundled_fixture("conflict_free"));
  auto r = tacc_run({"check", "--ruleset", clean});
  CHECK(r.status == cli::kClean);
  CHECK(r.out.find("0 potential conflicts") != std::string::npos);

  auto seeded = s.write("seeded.yaml", sim::bundled_fixture("seeded_50"));
  r = tacc_run({"check", "--ruleset", seeded});
  CHECK(r.status == cli::kConflicts);
  CHECK(r.out.find("p5_flash_on_co") != std::string::npos);
  CHECK(r.out.find("p5_sound_on_smoke") != std::string::npos);
  CHECK(r.out.find("C1 (") != std::string::npos);

  auto broken = s.write("broken.yaml", "registry:\n  locations: [room1\n");
  r = tacc_run({"check", "--ruleset", broken});
  CHECK(r.status == cli::kInputError);
  CHECK(r.err.find("line ") != std::string::npos);

  r = tacc_run({"check", "--ruleset", (s.dir / "missing.yaml").string()});
  CHECK(r.status == cli::kInputError);
}

TEST_CASE("usage errors exit 2") {
  CHECK(tacc_run({}).status == cli::kInputError);
  CHECK(tacc_run({"frobnicate"}).status == cli::kInputError);
  CHECK(tacc_run({"monitor", "--ruleset", "x.yaml"}).status == cli::kInputError);
  CHECK(tacc_run({"simulate", "--scenario", "S1", "--out", "/tmp/x", "--seeds", "0"}).status == cli::kInputError);
  CHECK(tacc_run({"simulate", "--scenario", "S1", "--out", "/tmp/x", "--suppress", "maybe"}).status ==
        cli::kInputError);
  CHECK(tacc_run({"--help"}).status == cli::kClean);
}

TEST_CASE("monitor") {
  Scratch s;
  auto rules = s.write("c7.yaml", sim::bundled_fixture("c7_duplicate"));

  auto empty = s.write("empty.csv", std::string(kTraceHeader) + "\n");
  auto r = tacc_run({"monitor", "--ruleset", rules, "--trace", empty});
  CHECK(r.status == cli::kClean);
  CHECK(r.out.find("C1: 0") != std::string::npos);
  CHECK(r.out.find("total: 0") != std::string::npos);

  auto dup = s.write("dup.csv", kDuplicateTrace);
  r = tacc_run({"monitor", "--ruleset", rules, "--trace", dup});
  CHECK(r.status == cli::kConflicts);
  auto ls = lines(r.out);
  REQUIRE(ls.size() >= 2);
  CHECK(ls[0] == kConflictHeader);
  CHECK(ls[1].rfind("20,C7,,,0,1,ts1,", 0) == 0);
  CHECK(r.out.find("C7: 1") != std::string::npos);
  CHECK(r.out.find("total: 1") != std::string::npos);

  // A wider duplicate window than the gap is still one conflict; a narrower
  // one finds none.
  CHECK(tacc_run({"monitor", "--ruleset", rules, "--trace", dup, "--dup-window", "19"}).status == cli::kClean);
  CHECK(tacc_run({"monitor", "--ruleset", rules, "--trace", dup, "--dup-window", "0"}).status == cli::kInputError);

  auto log = (s.dir / "log.csv").string();
  r = tacc_run({"monitor", "--ruleset", rules, "--trace", dup, "--out", log});
  CHECK(lines(slurp(log)).size() == 2);
  CHECK(r.out.find("C7: 1") != std::string::npos);

  auto backwards = s.write("back.csv", "tick,sensor,kind,predicate,value,location\n"
                                       "5,ts1,temperature,less-than,60,room1\n"
                                       "3,ts1,temperature,less-than,61,room1\n");
  r = tacc_run({"monitor", "--ruleset", rules, "--trace", backwards});
  CHECK(r.status == cli::kInputError);
  CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("report replays a trace through the house") {
  Scratch s;
  // raise_when_cold adds one 10 F step per reading; duplicate suppression
  // drops the second.
  auto rules = s.write("c7.yaml", sim::bundled_fixture("c7_duplicate"));
  auto dup = s.write("dup.csv", kDuplicateTrace);
  auto r = tacc_run({"report", "--ruleset", rules, "--trace", dup, "--out", (s.dir / "plain").string()});
  CHECK(r.status == cli::kConflicts);
  CHECK(r.out.find("actuations thermo1: 2") != std::string::npos);
  CHECK(fs::exists(s.dir / "plain" / "series.csv"));
  CHECK(fs::exists(s.dir / "plain" / "conflicts.csv"));

  r = tacc_run({"report", "--ruleset", rules, "--trace", dup, "--suppress", "duplicates"});
  CHECK(r.out.find("actuations thermo1: 1") != std::string::npos);
  CHECK(r.out.find("suppressed_events: 1") != std::string::npos);
}

TEST_CASE("simulate writes traces and a summary") {
  Scratch s;
  auto out = (s.dir / "s1").string();
  auto r = tacc_run({"simulate", "--scenario", "S1", "--seed", "4", "--out", out});
  CHECK((r.status == cli::kClean || r.status == cli::kConflicts));
  auto series = lines(slurp(fs::path(out) / "trace_4.csv"));
  REQUIRE(!series.empty());
  std::map<std::string, int> rows_per_room;
  for (std::size_t i = 1; i < series.size(); ++i) {
    auto first = series[i].find(',');
    ++rows_per_room[series[i].substr(first + 1, series[i].find(',', first + 1) - first - 1)];
  }
  CHECK(rows_per_room.size() == 4);
  for (const auto& [room, n] : rows_per_room) CHECK(n == 500);
  CHECK(fs::exists(fs::path(out) / "conflicts_4.csv"));
  CHECK(fs::exists(fs::path(out) / "summary.csv"));

  CHECK(tacc_run({"simulate", "--scenario", "S42", "--out", out}).status == cli::kInputError);
}

TEST_CASE("simulate output is byte-stable") {
  Scratch s;
  auto a = (s.dir / "a").string(), b = (s.dir / "b").string();
  tacc_run({"simulate", "--scenario", "S3", "--seeds", "3", "--horizon", "200", "--out", a});
  tacc_run({"simulate", "--scenario", "S3", "--seeds", "3", "--horizon", "200", "--out", b, "--threads", "1"});
  for (const char* f : {"summary.csv", "trace_2.csv", "conflicts_3.csv", "events_1.csv"}) {
    CAPTURE(f);
    CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));
  }
}

TEST_CASE("monitor reproduces what simulate reported") {
  Scratch s;
  auto out = fs::path(s.dir / "s5");
  auto r = tacc_run({"simulate", "--scenario", "S5", "--seeds", "2", "--out", out.string()});
  CHECK(r.status == cli::kConflicts);
  for (const char* seed : {"1", "2"}) {
    const auto reported = slurp(out / (std::string("conflicts_") + seed + ".csv"));
    auto m = tacc_run({"monitor", "--ruleset", (out / "ruleset.yaml").string(), "--trace",
                       (out / (std::string("events_") + seed + ".csv")).string()});
    CHECK(m.status == cli::kConflicts);
    CHECK(m.out.substr(0, reported.size()) == reported);
    CHECK(kinds_in_log(reported)["C1"] > 0);
  }
}

TEST_CASE("paired scenarios report extra actuations") {
  Scratch s;
  auto out = fs::path(s.dir / "s7");
  tacc_run({"simulate", "--scenario", "S7", "--seeds", "2", "--out", out.string()});
  auto summary = lines(slurp(out / "summary.csv"));
  REQUIRE(summary.size() == 4);
  CHECK(summary[0].find("extra_actuations_thermostat") != std::string::npos);
  CHECK(fs::exists(out / "baseline_trace_1.csv"));
}

TEST_CASE("scenario files") {
  Scratch s;
  auto file = s.write("quiet_alarm.yaml", "base: S5\nhorizon: 100\nseed: 7\nprobabilities: {smoke: 0, leak: 0}\n");
  auto r = tacc_run({"simulate", "--scenario", file, "--out", (s.dir / "q").string()});
  CHECK(r.status == cli::kClean);
  CHECK(fs::exists(s.dir / "q" / "trace_7.csv"));

  auto [scenario, doc] = cli::load_scenario_file(file);
  CHECK(scenario.id == "quiet_alarm");
  CHECK(scenario.horizon == 100);
  CHECK(scenario.probability("smoke") == 0);

  auto bad = s.write("bad.yaml", "base: S5\ncolour: blue\n");
  r = tacc_run({"simulate", "--scenario", bad, "--out", (s.dir / "b").string()});
  CHECK(r.status == cli::kInputError);
  CHECK(r.err.find("colour") != std::string::npos);

  auto bad_p = s.write("bad_p.yaml", "base: S5\nprobabilities: {smoke: 2}\n");
  CHECK(tacc_run({"simulate", "--scenario", bad_p, "--out", (s.dir / "b").string()}).status == cli::kInputError);
}

TEST_CASE("the installed binary uses the same exit statuses") {
  Scratch s;
  auto clean = s.write("clean.yaml", sim::bundled_fixture("conflict_free"));
  auto seeded = s.write("seeded.yaml", sim::bundled_fixture("seeded_50"));
  auto status = [](const std::string& args) {
    const int raw = std::system((std::string(TACC_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("check --ruleset " + clean) == 0);
  CHECK(status("check --ruleset " + seeded) == 1);
  CHECK(status("check --ruleset " + (s.dir / "none.yaml").string()) == 2);
  CHECK(status("bogus") == 2);
}
