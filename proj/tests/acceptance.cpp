// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "support.hpp"
#include "tacc/oracle.hpp"
#include "tacc/simulator.hpp"

using namespace tacc;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned k = std::max(1u, std::thread::hardware_concurrency());
  for (unsigned i = 1; i < k; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<sim::TraceReport> run_seeds(const sim::Scenario& base, const Document& doc, std::size_t seeds) {
  return parallel_map<sim::TraceReport>(seeds, [&](std::size_t i) {
    sim::Scenario s = base;
    s.seed = i + 1;
    return sim::run_scenario(s, doc);
  });
}

double mean_of(const std::vector<sim::TraceReport>& rs, const std::function<double(const sim::TraceReport&)>& f) {
  double sum = 0;
  for (const auto& r : rs) sum += f(r);
  return sum / static_cast<double>(rs.size());
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------

Verdict oracle_equivalence() {
  const auto t0 = Clock::now();
  constexpr std::size_t kCases = 1500;
  auto results = parallel_map<std::pair<bool, std::size_t>>(kCases, [](std::size_t i) {
    testing::CaseGenerator g(0xACCE55 + i);
    auto c = g.full_case(10, 200);
    auto d = detect_trace(c.trace, c.rules, c.cfg);
    auto o = oracle::detect(c.trace, *c.rules, c.cfg);
    return std::pair{testing::same_conflicts(d, o), o.size()};
  });
  std::size_t mismatches = 0, conflicts = 0;
  for (auto [same, n] : results) {
    mismatches += !same;
    conflicts += n;
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << kCases << " random cases, " << conflicts << " oracle conflicts, " << mismatches << " mismatches, "
     << std::fixed << std::setprecision(1) << secs << " s";
  return {mismatches == 0 && secs < 120.0, os.str()};
}

Verdict duplicate_example() {
  const Document doc = sim::load_bundled("c7_duplicate");
  std::vector<Event> trace;
  for (Tick t : {Tick{0}, Tick{20}}) {
    trace.push_back(Event{trace.size(), SensorId("ts1"), t, 60.0,
                          EventSignature{"temperature", PredicateClass::LessThan, LocationId("room1")}});
  }
  sim::HouseModel house = sim::default_house(doc.ruleset);
  house.initial_setpoint = 60;
  house.setpoint_step = 10;
  const auto off = sim::replay_trace(doc, trace, sim::Suppression::Off, house);
  const auto on = sim::replay_trace(doc, trace, sim::Suppression::Duplicates, house);
  const double sp_off = off.device(ActuatorId("thermo1"))->setpoint;
  const double sp_on = on.device(ActuatorId("thermo1"))->setpoint;
  std::ostringstream os;
  os << "setpoint without suppression " << sp_off << " F, with " << sp_on << " F; C7 logged " << on.count(ConflictKind::C7)
     << ", other conflicts " << on.total_conflicts() - on.count(ConflictKind::C7);
  return {sp_off == 80.0 && sp_on == 70.0 && on.count(ConflictKind::C7) == 1 && on.total_conflicts() == 1, os.str()};
}

Verdict alarm_expectation() {
  const auto t0 = Clock::now();
  sim::Scenario s = sim::builtin_scenario("S5");
  const Document doc = sim::load_bundled(s.fixture);
  auto c1 = [](const sim::TraceReport& r) { return static_cast<double>(r.count(ConflictKind::C1)); };
  const double base = mean_of(run_seeds(s, doc, 100), c1);
  s.set_probability("smoke", 0.10);
  s.set_probability("leak", 0.10);
  const double doubled = mean_of(run_seeds(s, doc, 100), c1);
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << "mean C1 " << base << " (expected 7) at p=0.05/0.07, " << doubled
     << " at p=0.10/0.10, " << std::setprecision(1) << secs << " s";
  return {base >= 6.0 && base <= 8.0 && doubled > base && secs < 30.0, os.str()};
}

Verdict luminance_violation() {
  const sim::Scenario s = sim::builtin_scenario("S1");
  const Document doc = sim::load_bundled(s.fixture);
  constexpr std::size_t kSeeds = 20;
  const LocationId room1("room1");
  const RuleId blind("blind_on_request"), light("light_on_motion");
  std::size_t cofire = 0, bad_cofire = 0, unlogged = 0, suppressed_out_of_range = 0;
  auto in_range = [](double l) { return l >= 200.0 && l <= 450.0; };
  for (std::size_t seed = 1; seed <= kSeeds; ++seed) {
    sim::Scenario run = s;
    run.seed = seed;
    const auto off = sim::run_scenario(run, doc);
    const auto ri = static_cast<std::size_t>(std::find(off.rooms.begin(), off.rooms.end(), room1) - off.rooms.begin());
    std::map<Tick, std::set<std::string>> fired;
    for (const auto& e : off.events) fired[e.time].insert(e.sensor.str());
    for (const auto& sample : off.series) {
      const auto& f = fired[sample.tick];
      if (!(f.count("app1") && f.count("motion1") && sample.rooms[ri].occupied)) continue;
      ++cofire;
      if (in_range(sample.rooms[ri].luminance)) ++bad_cofire;
      const bool logged = std::any_of(off.conflicts.begin(), off.conflicts.end(), [&](const Conflict& c) {
        std::set<RuleId> rules{c.participants[0].rule, c.participants[1].rule};
        return c.tick == sample.tick && rules == std::set<RuleId>{blind, light};
      });
      if (!logged) ++unlogged;
    }
    run.suppression = sim::Suppression::All;
    const auto on = sim::run_scenario(run, doc);
    for (const auto& sample : on.series) {
      if (!in_range(sample.rooms[ri].luminance)) ++suppressed_out_of_range;
    }
  }
  std::ostringstream os;
  os << kSeeds << " seeds: " << cofire << " co-fire ticks, " << bad_cofire << " of them in range, " << unlogged
     << " without a conflict; " << suppressed_out_of_range << " out-of-range ticks with suppression";
  return {cofire > 0 && bad_cofire == 0 && unlogged == 0 && suppressed_out_of_range == 0, os.str()};
}

Verdict conflict_trend() {
  sim::Scenario s = sim::builtin_scenario("S1");
  const Document doc = sim::load_bundled(s.fixture);
  s.set_probability("light", 0.10);
  std::vector<double> ps = {0.02, 0.04, 0.06, 0.08, 0.10}, means;
  for (double p : ps) {
    s.set_probability("blind", p);
    means.push_back(mean_of(run_seeds(s, doc, 50),
                            [](const sim::TraceReport& r) { return static_cast<double>(r.total_conflicts()); }));
  }
  const double rho = spearman(ps, means);
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << "mean conflicts";
  for (double m : means) os << ' ' << m;
  os << " over p_blind 0.02..0.10; Spearman rho " << rho;
  return {rho > 0.0, os.str()};
}

Verdict management_deltas() {
  std::ostringstream os;
  bool pass = true;
  for (auto [id, kind] : {std::pair{"S7", "thermostat"}, std::pair{"S8", "humidifier"}}) {
    sim::Scenario s = sim::builtin_scenario(id);
    const Document doc = sim::load_bundled(s.fixture);
    std::array<double, 2> means{};
    long long worst = std::numeric_limits<long long>::max();
    std::size_t i = 0;
    for (Tick h : {Tick{500}, Tick{2000}}) {
      s.horizon = h;
      const auto reports = run_seeds(s, doc, 50);
      for (const auto& r : reports) worst = std::min(worst, r.extra_actuations_of_kind(kind));
      means[i++] = mean_of(reports, [&](const sim::TraceReport& r) {
        return static_cast<double>(r.extra_actuations_of_kind(kind));
      });
    }
    pass = pass && worst >= 0 && means[1] > means[0];
    if (os.tellp() > 0) os << "; ";
    os << std::fixed << std::setprecision(2) << id << " extra " << kind << " actuations: mean " << means[0]
       << " at 500, " << means[1] << " at 2000, min " << worst;
  }
  return {pass, os.str()};
}

Verdict seeded_recovery() {
  const Document doc = sim::load_bundled("seeded_50");
  const auto found = static_check(doc.ruleset, doc.detector);
  const auto oracle = oracle::static_pairs(doc.ruleset, doc.detector);
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& p : found) pairs.insert({p.rule_a.str(), p.rule_b.str()});
  const std::set<std::pair<std::string, std::string>> seeded = {
      {"p1_heat_room1", "p1_warm_on_motion"},  {"p2_cool_room2", "p2_open_window"},
      {"p3_corridor_down", "p3_corridor_up"},  {"p4_blind_when_dim", "p4_light_off_when_empty"},
      {"p5_flash_on_co", "p5_sound_on_smoke"}};
  std::size_t missed = 0, spurious = 0;
  for (const auto& p : seeded) missed += !pairs.count(p);
  for (const auto& p : pairs) spurious += !seeded.count(p);
  std::ostringstream os;
  os << doc.ruleset.size() << " rules: " << pairs.size() << " pairs reported (" << found.size() << " pair/kind records), "
     << missed << " missed, " << spurious << " spurious; oracle " << (found == oracle ? "agrees" : "DISAGREES");
  return {missed == 0 && spurious == 0 && found == oracle && doc.ruleset.size() == 50, os.str()};
}

Verdict scalability() {
  // 10,000 rules over 1,000 sensors in 200 rooms, every sensor reporting every
  // tick. Each room has one sensor per kind, ten actuators and 50 rules.
  std::mt19937_64 rng(2024);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  Registry reg;
  constexpr std::size_t kLocations = 200, kPerKind = 1, kActuatorsPerLocation = 10, kRules = 10000;
  reg.sensor_kinds = {{"temperature", "F", 0, 120},
                      {"humidity", "pct", 0, 100},
                      {"luminance", "lux", 0, 2000},
                      {"motion", "level", 0, 1},
                      {"smoke", "level", 0, 1}};
  reg.actuator_kinds = {{"thermostat", {"increase", "decrease", "off"}},
                        {"light", {"on", "off"}},
                        {"humidifier", {"on", "off"}},
                        {"alarm", {"sound", "silence"}}};
  for (std::size_t l = 0; l < kLocations; ++l) {
    const LocationId loc("loc" + std::to_string(l));
    reg.locations.push_back(loc);
    for (const auto& k : reg.sensor_kinds) {
      for (std::size_t i = 0; i < kPerKind; ++i) {
        reg.sensors.push_back({SensorId(k.name + "_" + std::to_string(l) + "_" + std::to_string(i)), k.name, loc, 0.0});
      }
    }
    for (std::size_t i = 0; i < kActuatorsPerLocation; ++i) {
      const auto& kind = reg.actuator_kinds[i % reg.actuator_kinds.size()];
      reg.actuators.push_back({ActuatorId("act_" + std::to_string(l) + "_" + std::to_string(i)), kind.name, loc});
      reg.features.push_back({FeatureId("feat_" + std::to_string(l) + "_" + std::to_string(i)), loc, "device"});
    }
  }
  for (std::size_t c = 0; c < 50; ++c) reg.controllers.emplace_back("ctl" + std::to_string(c));

  std::vector<Rule> rules;
  for (std::size_t i = 0; i < kRules; ++i) {
    Rule r;
    r.id = RuleId("rule" + std::to_string(i));
    r.controller = reg.controllers[pick(reg.controllers.size())];
    const auto& kind = reg.sensor_kinds[pick(reg.sensor_kinds.size())];
    r.trigger.sensor_kind = kind.name;
    r.trigger.unit = kind.unit;
    r.trigger.comparator = static_cast<Comparator>(pick(2) == 0 ? 0 : 1);  // no equality: readings are continuous
    r.trigger.threshold = kind.min + (kind.max - kind.min) * std::uniform_real_distribution<double>(0.2, 0.8)(rng);
    const std::size_t l = pick(kLocations);
    r.trigger.location_filter = reg.locations[l];
    const std::size_t a = l * kActuatorsPerLocation + pick(kActuatorsPerLocation);
    const auto& act = reg.actuators[a];
    r.action.actuator = act.id;
    r.action.location = act.location;
    const auto& vocab = std::find_if(reg.actuator_kinds.begin(), reg.actuator_kinds.end(),
                                     [&](const auto& k) { return k.name == act.kind; })
                            ->actions;
    r.action.action = vocab[pick(vocab.size())];
    r.action.affected_features = {reg.features[a].id};
    rules.push_back(std::move(r));
  }
  DetectorConfig cfg;
  std::vector<FeatureId> nodes;
  for (const auto& f : reg.features) nodes.push_back(f.id);
  cfg.dependency_graph = FeatureDependencyGraph(nodes, {});
  cfg.action_relations = ActionRelationTable(reg.actuator_kinds, {{"thermostat", "increase", "thermostat", "decrease",
                                                                   ActionRelation::Opposite},
                                                                  {"light", "on", "light", "off", ActionRelation::Opposite}});
  const std::size_t n_sensors = reg.sensors.size();
  auto rs = std::make_shared<const RuleSet>(std::move(reg), std::move(rules));
  Monitor monitor(rs, cfg);

  constexpr Tick kTicks = 30;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0, total = 0.0;
  std::size_t conflicts = 0;
  EventId next = 0;
  for (Tick t = 0; t < kTicks; ++t) {
    std::vector<Event> events;
    events.reserve(n_sensors);
    for (std::size_t i = 0; i < n_sensors; ++i) {
      const Sensor& s = rs->sensor(i);
      const SensorKind& k = rs->sensor_kind(*rs->sensor_kind_index(s.kind));
      const double v = k.min + (k.max - k.min) * unit(rng);
      const auto pred = v > (k.min + k.max) / 2 ? PredicateClass::GreaterThan : PredicateClass::LessThan;
      events.push_back(Event{next++, s.id, t, v, EventSignature{s.kind, pred, s.location}});
    }
    const auto t0 = Clock::now();
    conflicts += monitor.step(t, events).size();
    const double secs = seconds_since(t0);
    if (std::getenv("TACC_VERBOSE")) std::cerr << "tick " << t << ": " << secs << " s, " << conflicts << " conflicts\n";
    worst = std::max(worst, secs);
    total += secs;
  }
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << kRules << " rules, " << n_sensors << " events/tick over " << kTicks
     << " ticks: mean " << total / kTicks * 1000 << " ms/tick, worst " << worst * 1000 << " ms/tick, "
     << std::setprecision(0) << static_cast<double>(n_sensors) * kTicks / total << " events/s, " << conflicts
     << " conflicts";
  return {worst < 1.0, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number.
  std::set<std::string> only(argv + 1, argv + argc);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"1 oracle equivalence", oracle_equivalence},
      {"2 duplicate-event example", duplicate_example},
      {"3 alarm co-trigger expectation", alarm_expectation},
      {"4 luminance range violation", luminance_violation},
      {"5 monotonic conflict trend", conflict_trend},
      {"6 management-rule deltas", management_deltas},
      {"7 seeded misconfiguration recovery", seeded_recovery},
      {"8 scalability", scalability},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && !only.count(name.substr(0, name.find(' ')))) continue;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
