// Static pairwise analysis: which rule pairs could ever be driven into a
// C1..C6 violation by some admissible pair of events.
//
// Events are admissible when their sensor is declared, their value lies in the
// sensor kind's range, and no sensor reports twice in a tick. The predicate
// class is free, so similarity is decided per sensor pair over all predicate
// combinations. Reasoning here is interval arithmetic over values and daily
// schedules; the brute-force counterpart lives in the oracle module.

#include <algorithm>
#include <array>

#include "tacc/detector.hpp"

namespace tacc {

namespace {

struct Interval {
  double lo;
  bool lo_open;
  double hi;
  bool hi_open;

  bool empty() const { return lo > hi || (lo == hi && (lo_open || hi_open)); }
};

Interval intersect(const Interval& a, const Interval& b) {
  Interval r = a;
  if (b.lo > r.lo || (b.lo == r.lo && b.lo_open)) {
    r.lo = b.lo;
    r.lo_open = b.lo_open;
  }
  if (b.hi < r.hi || (b.hi == r.hi && b.hi_open)) {
    r.hi = b.hi;
    r.hi_open = b.hi_open;
  }
  return r;
}

Interval firing_values(const TriggerCondition& t, const SensorKind& kind) {
  const Interval range{kind.min, false, kind.max, false};
  switch (t.comparator) {
    case Comparator::Greater: return intersect(range, {t.threshold, true, kind.max, false});
    case Comparator::Less: return intersect(range, {kind.min, false, t.threshold, true});
    case Comparator::Equal: return intersect(range, {t.threshold, false, t.threshold, false});
  }
  return range;
}

/// Half-open tick-of-day spans covered by a schedule.
using Spans = std::vector<std::pair<Tick, Tick>>;

Spans active_spans(const std::optional<DailyWindow>& s, Tick day) {
  if (!s) return {{0, day}};
  const Tick start = s->start % day;
  const Tick end = s->end % day;
  if (start < end) return {{start, end}};
  Spans out{{start, day}};
  if (end > 0) out.emplace_back(0, end);
  return out;
}

/// Whether some t with t in a and t + delta in b exists (mod day).
bool shifted_overlap(const Spans& a, const Spans& b, long long delta, Tick day) {
  const long long d = static_cast<long long>(day);
  const Tick shift = static_cast<Tick>(((delta % d) + d) % d);
  for (const auto& [s, e] : a) {
    // [s + shift, e + shift) possibly wrapping past day.
    Spans moved;
    const Tick ms = s + shift;
    const Tick me = e + shift;
    if (me - ms >= day) {
      moved.emplace_back(0, day);
    } else if (me <= day) {
      moved.emplace_back(ms, me);
    } else if (ms >= day) {
      moved.emplace_back(ms - day, me - day);
    } else {
      moved.emplace_back(ms, day);
      moved.emplace_back(0, me - day);
    }
    for (const auto& [ms2, me2] : moved) {
      for (const auto& [bs, be] : b) {
        if (std::max(ms2, bs) < std::min(me2, be)) return true;
      }
    }
  }
  return false;
}

struct RuleFacts {
  bool can_fire = false;
  std::vector<std::size_t> sensors;
  Interval values{};
  Spans spans;
};

}  // namespace

std::vector<PotentialConflict> static_check(const RuleSet& rs, const DetectorConfig& cfg) {
  cfg.validate();
  const Registry& reg = rs.registry();
  const Tick day = reg.day_length;
  const Tick eps = cfg.same_tick_epsilon;
  const Tick overlap = cfg.overlap_window;
  const auto reach = static_cast<long long>(std::max(eps, overlap));
  const auto& graph = cfg.dependency_graph;
  const auto& table = cfg.action_relations;

  std::vector<RuleFacts> facts(rs.size());
  std::vector<std::uint32_t> qualified(rs.size());
  std::vector<std::vector<std::size_t>> graph_features(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const Rule& r = rs.rule(i);
    const auto& res = rs.resolved(i);
    RuleFacts& f = facts[i];
    for (std::size_t s = 0; s < reg.sensors.size(); ++s) {
      const Sensor& sensor = reg.sensors[s];
      if (sensor.kind != r.trigger.sensor_kind) continue;
      if (r.trigger.location_filter && *r.trigger.location_filter != sensor.location) continue;
      f.sensors.push_back(s);
    }
    f.values = firing_values(r.trigger, rs.sensor_kind(res.sensor_kind));
    f.spans = active_spans(r.trigger.schedule, day);
    f.can_fire = !f.sensors.empty() && !f.values.empty();

    const auto q = table.qualified(rs.actuator(res.actuator).kind, r.action.action);
    if (!q) throw ReferenceError(r.action.action, "static_check action relations");
    qualified[i] = *q;
    for (const auto& feat : r.action.affected_features) {
      auto gi = graph.index(feat);
      if (!gi) throw ReferenceError(feat.str(), "static_check dependency graph");
      graph_features[i].push_back(*gi);
    }
  }

  // Per sensor pair: can the two events be similar / dissimilar for some
  // choice of predicate classes?
  constexpr std::array<PredicateClass, 3> predicates = {PredicateClass::GreaterThan, PredicateClass::LessThan,
                                                        PredicateClass::EqualTo};
  const std::size_t ns = reg.sensors.size();
  std::vector<std::uint8_t> similarity(ns * ns, 0);  // bit0: similar possible, bit1: dissimilar possible
  auto similarity_of = [&](std::size_t a, std::size_t b) {
    std::uint8_t& cell = similarity[a * ns + b];
    if (cell != 0) return cell;
    const Sensor& sa = reg.sensors[a];
    const Sensor& sb = reg.sensors[b];
    for (auto pa : predicates) {
      for (auto pb : predicates) {
        const bool sim = cfg.signature_classes.similar({sa.kind, pa, sa.location}, {sb.kind, pb, sb.location});
        cell |= sim ? 1 : 2;
      }
    }
    return cell;
  };

  std::vector<PotentialConflict> out;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (!facts[i].can_fire) continue;
    for (std::size_t j = i + 1; j < rs.size(); ++j) {
      if (!facts[j].can_fire) continue;
      const auto& ri = rs.resolved(i);
      const auto& rj = rs.resolved(j);
      const bool same_actuator = ri.actuator == rj.actuator;
      bool features_related = false;
      for (auto a : graph_features[i]) {
        for (auto b : graph_features[j]) features_related = features_related || graph.related(a, b);
      }
      if (!same_actuator && !features_related) continue;
      const bool controllers_differ = ri.controller != rj.controller;
      const ActionRelation rel = table.relation(qualified[i], qualified[j]);
      const bool opposite = rel == ActionRelation::Opposite;
      const bool shared_values = !intersect(facts[i].values, facts[j].values).empty() &&
                                 rs.rule(i).trigger.sensor_kind == rs.rule(j).trigger.sensor_kind;

      std::array<bool, 6> hit{};
      for (long long delta = -reach; delta <= reach; ++delta) {
        if (!shifted_overlap(facts[i].spans, facts[j].spans, delta, day)) continue;
        const Tick dt = static_cast<Tick>(delta < 0 ? -delta : delta);
        const bool simultaneous = dt <= eps;
        const bool same_ok = rel != ActionRelation::Same || (dt > 0 && dt <= overlap);
        for (auto si : facts[i].sensors) {
          for (auto sj : facts[j].sensors) {
            if (si == sj && dt == 0) {
              // One event firing both rules.
              if (shared_values && controllers_differ) {
                hit[0] = hit[0] || same_actuator;
                hit[1] = hit[1] || (!same_actuator && features_related);
              }
              continue;
            }
            const auto sim = similarity_of(si, sj);
            const bool can_overlap = (sim & 1) && dt <= overlap;
            const bool can_be_disjoint = (sim & 2) || dt > overlap;
            if (simultaneous && controllers_differ) {
              hit[0] = hit[0] || same_actuator;
              hit[1] = hit[1] || (!same_actuator && features_related);
            }
            hit[2] = hit[2] || (same_actuator && can_overlap && same_ok);
            hit[3] = hit[3] || (opposite && features_related && can_overlap);
            hit[4] = hit[4] || (same_actuator && simultaneous && can_be_disjoint && same_ok);
            hit[5] = hit[5] || (opposite && features_related && simultaneous && can_be_disjoint);
          }
        }
      }

      RuleId a = rs.rule(i).id;
      RuleId b = rs.rule(j).id;
      if (b < a) std::swap(a, b);
      for (std::size_t k = 0; k < hit.size(); ++k) {
        if (!hit[k]) continue;
        const auto kind = static_cast<ConflictKind>(k + 1);
        out.push_back(PotentialConflict{kind, a, b,
                                        std::string(to_string(kind)) + " if " + a.str() + " and " + b.str() +
                                            " fire together"});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.key() < y.key(); });
  return out;
}

}  // namespace tacc
