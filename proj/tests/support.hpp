#pragma once

// Shared test helpers: a hand-rolled random generator for small rulesets and
// traces, plus conflict-set comparison.

#include <algorithm>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tacc/detector.hpp"
#include "tacc/document.hpp"

namespace tacc::testing {

struct RandomCase {
  std::shared_ptr<const RuleSet> rules;
  DetectorConfig cfg;
  std::vector<Event> trace;
};

class CaseGenerator {
 public:
  explicit CaseGenerator(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
  }

  /// A valid ruleset with at most `max_rules` rules plus a matching config.
  /// Values live on a coarse grid so equality comparators and duplicate
  /// readings actually occur.
  RandomCase ruleset(int max_rules = 10) {
    Registry reg;
    reg.day_length = static_cast<Tick>(uniform(20, 80));
    const int n_loc = uniform(1, 3);
    for (int i = 0; i < n_loc; ++i) reg.locations.emplace_back("l" + std::to_string(i));
    reg.sensor_kinds = {{"temperature", "F", 60, 70}, {"humidity", "pct", 0, 10}, {"motion", "bool", 0, 1}};
    reg.actuator_kinds = {{"thermostat", {"increase", "decrease", "off"}},
                          {"light", {"on", "off"}},
                          {"alarm", {"beep", "flash"}}};
    const int n_feat = uniform(1, 4);
    for (int i = 0; i < n_feat; ++i) {
      reg.features.push_back({FeatureId("f" + std::to_string(i)), pick(reg.locations), "k"});
    }
    const int n_sensors = uniform(1, 4);
    for (int i = 0; i < n_sensors; ++i) {
      const auto& kind = pick(reg.sensor_kinds);
      reg.sensors.push_back({SensorId("s" + std::to_string(i)), kind.name, pick(reg.locations),
                             coin(0.3) ? 1.0 : 0.0});
    }
    const int n_act = uniform(1, 3);
    for (int i = 0; i < n_act; ++i) {
      reg.actuators.push_back({ActuatorId("a" + std::to_string(i)), pick(reg.actuator_kinds).name, pick(reg.locations)});
    }
    const int n_ctl = uniform(1, 3);
    for (int i = 0; i < n_ctl; ++i) reg.controllers.emplace_back("c" + std::to_string(i));

    std::vector<Rule> rules;
    const int n_rules = uniform(1, max_rules);
    for (int i = 0; i < n_rules; ++i) {
      Rule r;
      r.id = RuleId("r" + std::to_string(i));
      r.controller = pick(reg.controllers);
      const auto& kind = reg.sensor_kinds[static_cast<std::size_t>(uniform(0, 2))];
      r.trigger.sensor_kind = kind.name;
      r.trigger.unit = kind.unit;
      r.trigger.comparator = static_cast<Comparator>(uniform(0, 2));
      r.trigger.threshold = grid_value(kind) + (coin(0.2) ? 0.5 : 0.0);
      if (coin(0.3)) r.trigger.location_filter = pick(reg.locations);
      if (coin(0.3)) {
        Tick s = static_cast<Tick>(uniform(0, static_cast<int>(reg.day_length) - 1));
        Tick e = static_cast<Tick>(uniform(0, static_cast<int>(reg.day_length) - 1));
        if (s == e) e = (e + 1) % reg.day_length;
        r.trigger.schedule = DailyWindow{s, e};
      }
      const auto& act = pick(reg.actuators);
      r.action.actuator = act.id;
      const auto& vocab = std::find_if(reg.actuator_kinds.begin(), reg.actuator_kinds.end(),
                                       [&](const auto& k) { return k.name == act.kind; })
                              ->actions;
      r.action.action = pick(vocab);
      r.action.location = act.location;
      std::set<FeatureId> fs{pick(reg.features).id};
      if (coin(0.3)) fs.insert(pick(reg.features).id);
      r.action.affected_features.assign(fs.begin(), fs.end());
      rules.push_back(std::move(r));
    }

    RandomCase out;
    DetectorConfig& cfg = out.cfg;
    cfg.overlap_window = static_cast<Tick>(uniform(1, 6));
    cfg.duplicate_window = static_cast<Tick>(uniform(1, 30));
    cfg.same_tick_epsilon = static_cast<Tick>(coin(0.7) ? 0 : uniform(1, 2));

    std::vector<FeatureId> nodes;
    for (const auto& f : reg.features) nodes.push_back(f.id);
    std::vector<std::pair<FeatureId, FeatureId>> edges;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        if (i != j && coin(0.2)) edges.emplace_back(nodes[i], nodes[j]);
      }
    }
    cfg.dependency_graph = FeatureDependencyGraph(nodes, edges);

    std::vector<ActionRelationTable::Entry> entries;
    std::vector<std::pair<std::string, std::string>> qualified;
    for (const auto& k : reg.actuator_kinds)
      for (const auto& a : k.actions) qualified.emplace_back(k.name, a);
    for (std::size_t i = 0; i < qualified.size(); ++i) {
      for (std::size_t j = i + 1; j < qualified.size(); ++j) {
        const bool same_kind = qualified[i].first == qualified[j].first;
        if (!coin(same_kind ? 0.6 : 0.1)) continue;
        const auto rel = static_cast<ActionRelation>(uniform(1, 3));
        entries.push_back({qualified[i].first, qualified[i].second, qualified[j].first, qualified[j].second, rel});
      }
    }
    cfg.action_relations = ActionRelationTable(reg.actuator_kinds, entries);

    if (coin(0.4)) {
      std::set<EventSignature> group;
      const int n = uniform(2, 3);
      for (int i = 0; i < n; ++i) {
        const auto& s = pick(reg.sensors);
        group.insert({s.kind, static_cast<PredicateClass>(uniform(0, 2)), s.location});
      }
      if (group.size() >= 2) cfg.signature_classes.groups.emplace_back(group.begin(), group.end());
    }

    out.rules = std::make_shared<const RuleSet>(std::move(reg), std::move(rules));
    return out;
  }

  /// A tick-sorted trace over the ruleset's sensors, at most one event per
  /// sensor per tick.
  std::vector<Event> trace(const RuleSet& rs, int max_ticks = 200, double density = -1) {
    const Registry& reg = rs.registry();
    const int ticks = uniform(0, max_ticks);
    const double p = density >= 0 ? density : std::uniform_real_distribution<double>(0.02, 0.4)(rng_);
    const Tick start = static_cast<Tick>(uniform(0, 3));
    std::vector<Event> out;
    for (int t = 0; t < ticks; ++t) {
      for (const auto& s : reg.sensors) {
        if (!coin(p)) continue;
        const auto& kind = rs.sensor_kind(*rs.sensor_kind_index(s.kind));
        Event e;
        e.id = out.size();
        e.sensor = s.id;
        e.time = start + static_cast<Tick>(t);
        e.value = grid_value(kind);
        e.signature = {s.kind, static_cast<PredicateClass>(uniform(0, 2)), s.location};
        out.push_back(std::move(e));
      }
    }
    return out;
  }

  RandomCase full_case(int max_rules = 10, int max_ticks = 200) {
    RandomCase c = ruleset(max_rules);
    c.trace = trace(*c.rules, max_ticks);
    return c;
  }

 private:
  double grid_value(const SensorKind& kind) {
    const int steps = static_cast<int>(kind.max - kind.min);
    return kind.min + uniform(0, steps);
  }

  std::mt19937_64 rng_;
};

inline Event make_event(EventId id, const char* sensor, Tick time, double value, const char* kind,
                        PredicateClass predicate, const char* location) {
  Event e;
  e.id = id;
  e.sensor = SensorId(sensor);
  e.time = time;
  e.value = value;
  e.signature = {kind, predicate, LocationId(location)};
  return e;
}

inline std::vector<std::string> keys_of(const std::vector<Conflict>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) {
    std::ostringstream os;
    os << c.tick << ' ' << to_string(c.kind) << ' ' << c.participants[0].event << '/' << c.participants[0].rule << ' '
       << c.participants[1].event << '/' << c.participants[1].rule;
    out.push_back(os.str());
  }
  return out;
}

inline bool same_conflicts(const std::vector<Conflict>& a, const std::vector<Conflict>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].key() != b[i].key() || a[i].suppressible != b[i].suppressible ||
        a[i].participants != b[i].participants) {
      return false;
    }
  }
  return true;
}

}  // namespace tacc::testing
