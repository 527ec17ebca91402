#include "tacc/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace tacc::oracle {

namespace {

bool fires(const TriggerCondition& t, const std::string& kind, const LocationId& location, double value,
           Tick time, Tick day) {
  if (t.sensor_kind != kind) return false;
  if (t.location_filter.has_value() && !(t.location_filter.value() == location)) return false;
  if (t.schedule.has_value()) {
    const Tick tod = time % day;
    const Tick s = t.schedule->start % day;
    const Tick e = t.schedule->end % day;
    const bool inside = s < e ? (s <= tod && tod < e) : (tod >= s || tod < e);
    if (!inside) return false;
  }
  if (t.comparator == Comparator::Greater) return value > t.threshold;
  if (t.comparator == Comparator::Less) return value < t.threshold;
  return value == t.threshold;
}

/// Plain reachability matrix from the edge list, Floyd-Warshall style.
class Closure {
 public:
  explicit Closure(const FeatureDependencyGraph& g) {
    for (const auto& n : g.nodes()) names_.push_back(n.str());
    const std::size_t n = names_.size();
    reach_.assign(n, std::vector<bool>(n, false));
    for (const auto& [a, b] : g.edges()) reach_[find(a.str())][find(b.str())] = true;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (reach_[i][k] && reach_[k][j]) reach_[i][j] = true;
  }

  bool related(const FeatureId& a, const FeatureId& b) const {
    if (a == b) return true;
    const std::size_t i = find(a.str());
    const std::size_t j = find(b.str());
    return reach_[i][j] || reach_[j][i];
  }

  bool any_related(const std::vector<FeatureId>& xs, const std::vector<FeatureId>& ys) const {
    for (const auto& x : xs)
      for (const auto& y : ys)
        if (related(x, y)) return true;
    return false;
  }

 private:
  std::size_t find(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw ReferenceError(name, "oracle dependency graph");
    return static_cast<std::size_t>(it - names_.begin());
  }

  std::vector<std::string> names_;
  std::vector<std::vector<bool>> reach_;
};

ActionRelation relation_of(const ActionRelationTable& table, const std::string& ka, const std::string& a,
                           const std::string& kb, const std::string& b) {
  if (ka == kb && a == b) return ActionRelation::Same;
  for (const auto& e : table.entries()) {
    if (e.kind_a == ka && e.action_a == a && e.kind_b == kb && e.action_b == b) return e.relation;
    if (e.kind_a == kb && e.action_a == b && e.kind_b == ka && e.action_b == a) return e.relation;
  }
  return ActionRelation::Different;
}

bool similar(const EventSignature& a, const EventSignature& b, const SignatureClasses& classes) {
  if (a == b) return true;
  for (const auto& group : classes.groups) {
    const bool has_a = std::find(group.begin(), group.end(), a) != group.end();
    const bool has_b = std::find(group.begin(), group.end(), b) != group.end();
    if (has_a && has_b) return true;
  }
  return false;
}

/// What the policies need to know about one side of a pair.
struct Side {
  EventId event;
  Tick time;
  const EventSignature* signature;
  const Rule* rule;
  std::string actuator_kind;
};

/// Policy predicates of C1..C6 (slots 0..5) for one pair of triggered
/// actions, straight from the definitions.
std::array<bool, 6> policies(const Side& x, const Side& y, const Closure& closure, const DetectorConfig& cfg) {
  const Tick dt = x.time > y.time ? x.time - y.time : y.time - x.time;
  const bool distinct = x.event != y.event;
  const bool overlap = distinct && similar(*x.signature, *y.signature, cfg.signature_classes) &&
                       dt <= cfg.overlap_window;
  const bool disjoint = !overlap;
  const bool same_time = dt <= cfg.same_tick_epsilon;
  const bool same_actuator = x.rule->action.actuator == y.rule->action.actuator;
  const bool other_controller = !(x.rule->controller == y.rule->controller);
  const bool features =
      closure.any_related(x.rule->action.affected_features, y.rule->action.affected_features);
  const ActionRelation rel = relation_of(cfg.action_relations, x.actuator_kind, x.rule->action.action,
                                         y.actuator_kind, y.rule->action.action);
  const bool clash = rel == ActionRelation::Different || rel == ActionRelation::Opposite ||
                     rel == ActionRelation::Dependent ||
                     (rel == ActionRelation::Same && dt > 0 && dt <= cfg.overlap_window);
  const bool opposite = rel == ActionRelation::Opposite;

  return {
      same_actuator && other_controller && same_time,
      !same_actuator && other_controller && same_time && features,
      distinct && overlap && same_actuator && clash,
      distinct && overlap && opposite && features,
      distinct && disjoint && same_time && same_actuator && clash,
      distinct && disjoint && same_time && opposite && features,
  };
}

std::string actuator_kind_of(const RuleSet& rs, const ActuatorId& id) {
  for (const auto& a : rs.registry().actuators)
    if (a.id == id) return a.kind;
  throw ReferenceError(id.str(), "oracle actuator lookup");
}

Participant as_participant(const Event& e, const Rule* r) {
  Participant p;
  p.event = e.id;
  p.sensor = e.sensor;
  p.time = e.time;
  p.value = e.value;
  if (r != nullptr) {
    p.rule = r->id;
    p.controller = r->controller;
    p.actuator = r->action.actuator;
    p.action = r->action.action;
  }
  return p;
}

}  // namespace

std::vector<Conflict> detect(std::span<const Event> trace, const RuleSet& rs, const DetectorConfig& cfg) {
  const Tick day = rs.registry().day_length;
  const Closure closure(cfg.dependency_graph);

  struct Fired {
    const Event* event;
    const Rule* rule;
    std::string actuator_kind;
  };
  std::vector<Fired> fired;
  for (const Event& e : trace) {
    for (const Rule& r : rs.rules()) {
      if (fires(r.trigger, e.signature.sensor_kind, e.signature.location, e.value, e.time, day)) {
        fired.push_back({&e, &r, actuator_kind_of(rs, r.action.actuator)});
      }
    }
  }

  std::vector<Conflict> out;
  for (std::size_t i = 0; i < fired.size(); ++i) {
    for (std::size_t j = i + 1; j < fired.size(); ++j) {
      const Fired& a = fired[i];
      const Fired& b = fired[j];
      const Side x{a.event->id, a.event->time, &a.event->signature, a.rule, a.actuator_kind};
      const Side y{b.event->id, b.event->time, &b.event->signature, b.rule, b.actuator_kind};
      const auto hit = policies(x, y, closure, cfg);
      for (std::size_t k = 0; k < hit.size(); ++k) {
        if (!hit[k]) continue;
        Conflict c;
        c.kind = static_cast<ConflictKind>(k + 1);
        c.tick = std::max(a.event->time, b.event->time);
        Participant p = as_participant(*a.event, a.rule);
        Participant q = as_participant(*b.event, b.rule);
        if (q.event < p.event || (q.event == p.event && q.rule < p.rule)) std::swap(p, q);
        c.participants = {p, q};
        c.note = "oracle";
        out.push_back(std::move(c));
      }
    }
  }

  for (std::size_t i = 0; i < trace.size(); ++i) {
    for (std::size_t j = 0; j < trace.size(); ++j) {
      const Event& early = trace[i];
      const Event& late = trace[j];
      if (!(early.sensor == late.sensor) || late.time <= early.time) continue;
      if (late.time - early.time > cfg.duplicate_window) continue;
      if (!(early.signature == late.signature)) continue;
      double tolerance = 0.0;
      for (const auto& s : rs.registry().sensors)
        if (s.id == early.sensor) tolerance = s.tolerance;
      if (std::fabs(early.value - late.value) > tolerance) continue;
      Conflict c;
      c.kind = ConflictKind::C7;
      c.tick = late.time;
      c.participants = {as_participant(early, nullptr), as_participant(late, nullptr)};
      c.note = "oracle";
      c.suppressible = late.id;
      out.push_back(std::move(c));
    }
  }
  canonicalize(out);
  return out;
}

namespace {

std::vector<double> value_grid(const SensorKind& kind, const RuleSet& rs) {
  std::set<double> points{kind.min, kind.max};
  std::vector<double> thresholds;
  for (const Rule& r : rs.rules()) {
    if (r.trigger.sensor_kind != kind.name) continue;
    thresholds.push_back(r.trigger.threshold);
    for (double v : {r.trigger.threshold - 1, r.trigger.threshold, r.trigger.threshold + 1}) points.insert(v);
  }
  std::sort(thresholds.begin(), thresholds.end());
  for (std::size_t i = 0; i + 1 < thresholds.size(); ++i) points.insert((thresholds[i] + thresholds[i + 1]) / 2);
  // Midpoints between a threshold and the range ends cover open intervals
  // narrower than one unit.
  for (double t : thresholds) {
    points.insert((kind.min + t) / 2);
    points.insert((t + kind.max) / 2);
  }
  std::vector<double> out;
  for (double v : points)
    if (v >= kind.min && v <= kind.max) out.push_back(v);
  return out;
}

}  // namespace

std::vector<PotentialConflict> static_pairs(const RuleSet& rs, const DetectorConfig& cfg) {
  const Registry& reg = rs.registry();
  const Tick day = reg.day_length;
  const Closure closure(cfg.dependency_graph);
  const long long reach = static_cast<long long>(std::max(cfg.overlap_window, cfg.same_tick_epsilon));
  constexpr std::array<PredicateClass, 3> predicates = {PredicateClass::GreaterThan, PredicateClass::LessThan,
                                                        PredicateClass::EqualTo};

  std::vector<std::vector<double>> grids;
  for (const auto& k : reg.sensor_kinds) grids.push_back(value_grid(k, rs));
  auto grid_of = [&](const std::string& kind) -> const std::vector<double>& {
    for (std::size_t i = 0; i < reg.sensor_kinds.size(); ++i)
      if (reg.sensor_kinds[i].name == kind) return grids[i];
    throw ReferenceError(kind, "oracle sensor kinds");
  };

  std::set<std::tuple<std::string, std::string, int>> found;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    for (std::size_t j = i + 1; j < rs.size(); ++j) {
      const Rule& ri = rs.rule(i);
      const Rule& rj = rs.rule(j);
      const std::string ki = actuator_kind_of(rs, ri.action.actuator);
      const std::string kj = actuator_kind_of(rs, rj.action.actuator);
      auto can_drive = [](const Rule& r, const Sensor& s) {
        return r.trigger.sensor_kind == s.kind && (!r.trigger.location_filter || *r.trigger.location_filter == s.location);
      };
      for (const Sensor& si : reg.sensors) {
        if (!can_drive(ri, si)) continue;
        for (const Sensor& sj : reg.sensors) {
          if (!can_drive(rj, sj)) continue;
          const auto& gi = grid_of(si.kind);
          const auto& gj = grid_of(sj.kind);
          for (long long delta = -reach; delta <= reach; ++delta) {
            const bool same_event = si.id == sj.id && delta == 0;
            // Some tick t (with t + delta >= 0) where both fire on some values.
            bool feasible = false;
            for (Tick t = day; t < 2 * day && !feasible; ++t) {
              const Tick u = static_cast<Tick>(static_cast<long long>(t) + delta);
              if (same_event) {
                for (double v : gi) {
                  if (fires(ri.trigger, si.kind, si.location, v, t, day) &&
                      fires(rj.trigger, sj.kind, sj.location, v, u, day)) {
                    feasible = true;
                    break;
                  }
                }
              } else {
                bool a = false, b = false;
                for (double v : gi) a = a || fires(ri.trigger, si.kind, si.location, v, t, day);
                for (double v : gj) b = b || fires(rj.trigger, sj.kind, sj.location, v, u, day);
                feasible = a && b;
              }
            }
            if (!feasible) continue;
            for (auto pa : predicates) {
              for (auto pb : predicates) {
                if (same_event && pa != pb) continue;
                const EventSignature sa{si.kind, pa, si.location};
                const EventSignature sb{sj.kind, pb, sj.location};
                const Side x{0, static_cast<Tick>(reach), &sa, &ri, ki};
                const Side y{same_event ? EventId{0} : EventId{1}, static_cast<Tick>(reach + delta), &sb, &rj, kj};
                const auto hit = policies(x, y, closure, cfg);
                for (std::size_t k = 0; k < hit.size(); ++k) {
                  if (!hit[k]) continue;
                  auto a = ri.id.str();
                  auto b = rj.id.str();
                  if (b < a) std::swap(a, b);
                  found.emplace(a, b, static_cast<int>(k + 1));
                }
              }
            }
          }
        }
      }
    }
  }

  std::vector<PotentialConflict> out;
  for (const auto& [a, b, k] : found) {
    out.push_back(PotentialConflict{static_cast<ConflictKind>(k), RuleId(a), RuleId(b), "oracle"});
  }
  return out;
}

}  // namespace tacc::oracle
