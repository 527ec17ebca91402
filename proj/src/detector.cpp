#include "tacc/detector.hpp"

#include <algorithm>
#include <cmath>

namespace tacc {

std::string_view to_string(ConflictKind k) {
  static constexpr std::array<std::string_view, 7> names = {"C1", "C2", "C3", "C4", "C5", "C6", "C7"};
  return names[kind_slot(k)];
}

std::optional<ConflictKind> parse_conflict_kind(std::string_view text) {
  for (auto k : kAllConflictKinds) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

namespace {

auto key_ref(const Conflict& c) {
  return std::tie(c.tick, c.kind, c.participants[0].event, c.participants[0].rule, c.participants[1].event,
                  c.participants[1].rule);
}

}  // namespace

void canonicalize(std::vector<Conflict>& conflicts) {
  std::sort(conflicts.begin(), conflicts.end(),
            [](const Conflict& a, const Conflict& b) { return key_ref(a) < key_ref(b); });
  conflicts.erase(std::unique(conflicts.begin(), conflicts.end(),
                              [](const Conflict& a, const Conflict& b) { return key_ref(a) == key_ref(b); }),
                  conflicts.end());
}

// ---------------------------------------------------------------------------

std::vector<TriggeredAction> match_rules(std::shared_ptr<const Event> e, const RuleSet& rs) {
  const auto kind = rs.sensor_kind_index(e->signature.sensor_kind);
  if (!kind) throw ReferenceError(e->signature.sensor_kind, "event " + std::to_string(e->id));
  const Tick day = rs.registry().day_length;
  std::vector<TriggeredAction> out;
  for (std::size_t i : rs.rules_for_kind(*kind)) {
    const TriggerCondition& t = rs.rule(i).trigger;
    if (t.location_filter && *t.location_filter != e->signature.location) continue;
    if (t.schedule && !t.schedule->active_at(e->time, day)) continue;
    if (!compare(t.comparator, e->value, t.threshold)) continue;
    out.push_back(TriggeredAction{e, i, e->time});
  }
  return out;
}

std::vector<TriggeredAction> match_rules(const Event& e, const RuleSet& rs) {
  return match_rules(std::make_shared<const Event>(e), rs);
}

// ---------------------------------------------------------------------------

DetectionWindow::DetectionWindow(std::shared_ptr<const RuleSet> rules, const DetectorConfig& cfg)
    : rules_(std::move(rules)), cfg_(&cfg) {
  cfg.validate();
  const RuleSet& rs = *rules_;
  qualified_.reserve(rs.size());
  graph_features_.reserve(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const Rule& r = rs.rule(i);
    const std::string& kind = rs.actuator(rs.resolved(i).actuator).kind;
    auto q = cfg.action_relations.qualified(kind, r.action.action);
    if (!q) throw ReferenceError(kind + "." + r.action.action, "detector action relations");
    qualified_.push_back(*q);
    std::vector<std::uint32_t> fs;
    for (const auto& f : r.action.affected_features) {
      auto gi = cfg.dependency_graph.index(f);
      if (!gi) throw ReferenceError(f.str(), "detector dependency graph");
      fs.push_back(static_cast<std::uint32_t>(*gi));
    }
    std::sort(fs.begin(), fs.end());
    fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
    graph_features_.push_back(std::move(fs));
  }
  next_signature_id_ = static_cast<std::uint32_t>(cfg.signature_classes.groups.size());
}

std::uint32_t DetectionWindow::intern_signature(const EventSignature& s) {
  auto it = signature_ids_.find(s);
  if (it != signature_ids_.end()) return it->second;
  std::uint32_t id;
  if (auto g = cfg_->signature_classes.class_of(s)) {
    id = static_cast<std::uint32_t>(*g);
  } else {
    id = next_signature_id_++;
  }
  signature_ids_.emplace(s, id);
  return id;
}

void DetectionWindow::admit(Tick now, std::span<const Event> events) {
  if (started_ && now < now_) {
    throw StreamOrderError("tick " + std::to_string(now) + " arrives after tick " + std::to_string(now_));
  }
  const RuleSet& rs = *rules_;
  std::vector<std::uint32_t> sensors;
  sensors.reserve(events.size());
  std::vector<bool> reported(rs.registry().sensors.size(), false);
  for (const Event& ev : events) {
    if (ev.time != now) {
      throw StreamOrderError("event " + std::to_string(ev.id) + " has tick " + std::to_string(ev.time) +
                             " but was admitted at tick " + std::to_string(now));
    }
    auto s = rs.sensor_index(ev.sensor);
    if (!s) throw ReferenceError(ev.sensor.str(), "event " + std::to_string(ev.id));
    const auto kind = rs.sensor_kind_index(ev.signature.sensor_kind);
    if (!kind) throw ReferenceError(ev.signature.sensor_kind, "event " + std::to_string(ev.id));
    const Sensor& declared = rs.sensor(*s);
    if (declared.kind != ev.signature.sensor_kind || declared.location != ev.signature.location) {
      throw InvalidValueError("event " + std::to_string(ev.id) + " signature disagrees with sensor '" +
                              ev.sensor.str() + "'");
    }
    const SensorKind& range = rs.sensor_kind(*kind);
    if (!(ev.value >= range.min && ev.value <= range.max)) {
      throw InvalidValueError("event " + std::to_string(ev.id) + " value outside the declared range of " +
                              range.name);
    }
    const auto sensor = static_cast<std::uint32_t>(*s);
    const auto* same_sensor = events_of_sensor(sensor);
    const bool repeated = (same_sensor != nullptr && event_at(same_sensor->back()).event->time == now) ||
                          reported[sensor];
    if (repeated) {
      throw StreamOrderError("sensor '" + ev.sensor.str() + "' reports twice at tick " + std::to_string(now));
    }
    sensors.push_back(sensor);
    reported[sensor] = true;
  }

  now_ = now;
  started_ = true;
  fresh_event_seq_ = event_base_ + events_.size();
  fresh_action_seq_ = action_base_ + actions_.size();

  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& ev = events[i];
    auto shared = std::make_shared<const Event>(ev);
    const std::uint64_t eseq = event_base_ + events_.size();
    events_.push_back(EventEntry{shared, eseq, sensors[i], intern_signature(ev.signature)});
    by_sensor_[sensors[i]].push_back(eseq);

    for (auto& ta : match_rules(shared, rs)) {
      const std::uint64_t aseq = action_base_ + actions_.size();
      by_actuator_[rs.resolved(ta.rule).actuator].push_back(aseq);
      for (auto f : graph_features_[ta.rule]) by_feature_[f].push_back(aseq);
      actions_.push_back(ActionEntry{std::move(ta), aseq, eseq});
    }
  }

  list_a_.clear();
  list_e_.clear();
  std::vector<bool> ctl(rs.registry().controllers.size(), false);
  for (const auto& a : actions_) {
    list_a_.push_back(&a.action);
    ctl[rs.resolved(a.action.rule).controller] = true;
  }
  list_c_.clear();
  for (std::size_t i = 0; i < ctl.size(); ++i) {
    if (ctl[i]) list_c_.push_back(rs.registry().controllers[i]);
  }
  for (const auto& e : events_) list_e_.push_back(e.event.get());
}

void DetectionWindow::evict() {
  const Tick horizon = cfg_->horizon();
  auto expired = [&](Tick t) { return now_ > t && now_ - t > horizon; };
  auto pop = [](auto& index, std::uint32_t key) {
    auto it = index.find(key);
    it->second.pop_front();
    if (it->second.empty()) index.erase(it);
  };
  const RuleSet& rs = *rules_;
  while (!actions_.empty() && expired(actions_.front().action.time)) {
    const auto& front = actions_.front();
    pop(by_actuator_, rs.resolved(front.action.rule).actuator);
    for (auto f : graph_features_[front.action.rule]) pop(by_feature_, f);
    actions_.pop_front();
    ++action_base_;
  }
  while (!events_.empty() && expired(events_.front().event->time)) {
    pop(by_sensor_, events_.front().sensor);
    events_.pop_front();
    ++event_base_;
  }
  fresh_action_seq_ = std::max(fresh_action_seq_, action_base_);
  fresh_event_seq_ = std::max(fresh_event_seq_, event_base_);

  list_a_.clear();
  for (const auto& a : actions_) list_a_.push_back(&a.action);
  list_e_.clear();
  for (const auto& e : events_) list_e_.push_back(e.event.get());
}

std::vector<TriggeredAction> DetectionWindow::fresh_actions() const {
  std::vector<TriggeredAction> out;
  for (std::uint64_t s = fresh_action_seq_; s < action_base_ + actions_.size(); ++s) {
    out.push_back(action_at(s).action);
  }
  return out;
}

namespace {

template <class Map>
const std::deque<std::uint64_t>* find_list(const Map& m, std::uint32_t key) {
  auto it = m.find(key);
  return it == m.end() ? nullptr : &it->second;
}

}  // namespace

const std::deque<std::uint64_t>* DetectionWindow::actions_on_actuator(std::uint32_t actuator) const {
  return find_list(by_actuator_, actuator);
}
const std::deque<std::uint64_t>* DetectionWindow::actions_on_feature(std::uint32_t feature) const {
  return find_list(by_feature_, feature);
}
const std::deque<std::uint64_t>* DetectionWindow::events_of_sensor(std::uint32_t sensor) const {
  return find_list(by_sensor_, sensor);
}

// ---------------------------------------------------------------------------
// Checks

namespace {

Participant participant_of(const TriggeredAction& ta, const RuleSet& rs) {
  const Rule& r = rs.rule(ta.rule);
  return Participant{ta.event->id, ta.event->sensor, ta.time,       ta.event->value,
                     r.id,         r.controller,      r.action.actuator, r.action.action};
}

Participant participant_of(const Event& e) {
  Participant p;
  p.event = e.id;
  p.sensor = e.sensor;
  p.time = e.time;
  p.value = e.value;
  return p;
}

Conflict make_action_conflict(ConflictKind kind, const TriggeredAction& x, const TriggeredAction& y,
                              const RuleSet& rs, std::string note) {
  Conflict c;
  c.kind = kind;
  c.tick = std::max(x.time, y.time);
  Participant a = participant_of(x, rs);
  Participant b = participant_of(y, rs);
  if (std::tie(b.event, b.rule) < std::tie(a.event, a.rule)) std::swap(a, b);
  c.participants = {std::move(a), std::move(b)};
  c.note = std::move(note);
  return c;
}

struct PairView {
  const DetectionWindow::ActionEntry& x;
  const DetectionWindow::ActionEntry& y;
  const DetectionWindow::EventEntry& ex;
  const DetectionWindow::EventEntry& ey;
  Tick dt;
};

/// Calls fn(PairView) for each pair (x fresh, y earlier in sequence) where y
/// is found through the index lists returned by lists(x) and is at most
/// `bound` ticks older than x. Each y is visited once per x.
template <class ListsFn, class Fn>
void for_each_pair(const DetectionWindow& w, Tick bound, ListsFn lists, Fn fn) {
  const std::uint64_t end = w.actions().empty() ? 0 : w.actions().back().seq + 1;
  std::vector<std::uint64_t> seen;
  for (std::uint64_t xs = w.first_fresh_action(); xs < end; ++xs) {
    const auto& x = w.action_at(xs);
    const auto& ex = w.event_at(x.event_seq);
    seen.clear();
    lists(x, [&](const std::deque<std::uint64_t>* list) {
      if (list == nullptr) return;
      auto it = std::lower_bound(list->begin(), list->end(), xs);
      while (it != list->begin()) {
        --it;
        const std::uint64_t ys = *it;
        const auto& y = w.action_at(ys);
        const Tick dt = x.action.time - y.action.time;
        if (dt > bound) break;
        if (std::find(seen.begin(), seen.end(), ys) != seen.end()) continue;
        seen.push_back(ys);
        const auto& ey = w.event_at(y.event_seq);
        fn(PairView{x, y, ex, ey, dt});
      }
    });
  }
}

auto by_actuator(const DetectionWindow& w) {
  return [&w](const DetectionWindow::ActionEntry& x, auto&& visit) {
    visit(w.actions_on_actuator(w.ruleset().resolved(x.action.rule).actuator));
  };
}

auto by_related_feature(const DetectionWindow& w) {
  return [&w](const DetectionWindow::ActionEntry& x, auto&& visit) {
    const auto& g = w.config().dependency_graph;
    for (auto f : w.graph_features(x.action.rule)) {
      for (auto r : g.related_to(f)) visit(w.actions_on_feature(r));
    }
  };
}

bool overlapping(const PairView& p, const DetectorConfig& cfg) {
  return p.ex.event->id != p.ey.event->id && p.ex.signature_class == p.ey.signature_class &&
         p.dt <= cfg.overlap_window;
}

bool distinct_events(const PairView& p) { return p.ex.event->id != p.ey.event->id; }

bool conflicting_actions(ActionRelation rel, Tick dt, const DetectorConfig& cfg) {
  return rel != ActionRelation::Same || (dt > 0 && dt <= cfg.overlap_window);
}

const std::string& controller_of(const DetectionWindow& w, const DetectionWindow::ActionEntry& a) {
  return w.ruleset().rule(a.action.rule).controller.str();
}

const std::string& actuator_of(const DetectionWindow& w, const DetectionWindow::ActionEntry& a) {
  return w.ruleset().rule(a.action.rule).action.actuator.str();
}

}  // namespace

std::vector<Conflict> check_c1(const DetectionWindow& w, const DetectorConfig& cfg) {
  std::vector<Conflict> out;
  const RuleSet& rs = w.ruleset();
  for_each_pair(w, cfg.same_tick_epsilon, by_actuator(w), [&](const PairView& p) {
    if (rs.resolved(p.x.action.rule).controller == rs.resolved(p.y.action.rule).controller) return;
    out.push_back(make_action_conflict(ConflictKind::C1, p.x.action, p.y.action, rs,
                                       actuator_of(w, p.x) + " commanded by " + controller_of(w, p.y) +
                                           " and " + controller_of(w, p.x) + " at the same time"));
  });
  return out;
}

std::vector<Conflict> check_c2(const DetectionWindow& w, const DetectorConfig& cfg) {
  std::vector<Conflict> out;
  const RuleSet& rs = w.ruleset();
  for_each_pair(w, cfg.same_tick_epsilon, by_related_feature(w), [&](const PairView& p) {
    const auto& rx = rs.resolved(p.x.action.rule);
    const auto& ry = rs.resolved(p.y.action.rule);
    if (rx.actuator == ry.actuator || rx.controller == ry.controller) return;
    out.push_back(make_action_conflict(ConflictKind::C2, p.x.action, p.y.action, rs,
                                       actuator_of(w, p.y) + " and " + actuator_of(w, p.x) +
                                           " from different controllers affect related features"));
  });
  return out;
}

std::vector<Conflict> check_c3(const DetectionWindow& w, const DetectorConfig& cfg) {
  std::vector<Conflict> out;
  const RuleSet& rs = w.ruleset();
  const auto& table = cfg.action_relations;
  for_each_pair(w, cfg.overlap_window, by_actuator(w), [&](const PairView& p) {
    if (!distinct_events(p) || !overlapping(p, cfg)) return;
    const auto rel = table.relation(w.qualified_action(p.x.action.rule), w.qualified_action(p.y.action.rule));
    if (!conflicting_actions(rel, p.dt, cfg)) return;
    out.push_back(make_action_conflict(ConflictKind::C3, p.x.action, p.y.action, rs,
                                       "overlapping events drive " + actuator_of(w, p.x) + " with " +
                                           std::string(to_string(rel)) + " actions"));
  });
  return out;
}

std::vector<Conflict> check_c4(const DetectionWindow& w, const DetectorConfig& cfg) {
  std::vector<Conflict> out;
  const RuleSet& rs = w.ruleset();
  const auto& table = cfg.action_relations;
  for_each_pair(w, cfg.overlap_window, by_related_feature(w), [&](const PairView& p) {
    if (!distinct_events(p) || !overlapping(p, cfg)) return;
    if (table.relation(w.qualified_action(p.x.action.rule), w.qualified_action(p.y.action.rule)) !=
        ActionRelation::Opposite) {
      return;
    }
    out.push_back(make_action_conflict(ConflictKind::C4, p.x.action, p.y.action, rs,
                                       "overlapping events issue opposite actions on related features"));
  });
  return out;
}

std::vector<Conflict> check_c5(const DetectionWindow& w, const DetectorConfig& cfg) {
  std::vector<Conflict> out;
  const RuleSet& rs = w.ruleset();
  const auto& table = cfg.action_relations;
  for_each_pair(w, cfg.same_tick_epsilon, by_actuator(w), [&](const PairView& p) {
    if (!distinct_events(p) || overlapping(p, cfg)) return;
    const auto rel = table.relation(w.qualified_action(p.x.action.rule), w.qualified_action(p.y.action.rule));
    if (!conflicting_actions(rel, p.dt, cfg)) return;
    out.push_back(make_action_conflict(ConflictKind::C5, p.x.action, p.y.action, rs,
                                       "disjoint events drive " + actuator_of(w, p.x) + " with " +
                                           std::string(to_string(rel)) + " actions"));
  });
  return out;
}

std::vector<Conflict> check_c6(const DetectionWindow& w, const DetectorConfig& cfg) {
  std::vector<Conflict> out;
  const RuleSet& rs = w.ruleset();
  const auto& table = cfg.action_relations;
  for_each_pair(w, cfg.same_tick_epsilon, by_related_feature(w), [&](const PairView& p) {
    if (!distinct_events(p) || overlapping(p, cfg)) return;
    if (table.relation(w.qualified_action(p.x.action.rule), w.qualified_action(p.y.action.rule)) !=
        ActionRelation::Opposite) {
      return;
    }
    out.push_back(make_action_conflict(ConflictKind::C6, p.x.action, p.y.action, rs,
                                       "disjoint events issue opposite actions on related features"));
  });
  return out;
}

std::vector<Conflict> check_c7(const DetectionWindow& w, const DetectorConfig& cfg) {
  std::vector<Conflict> out;
  const RuleSet& rs = w.ruleset();
  if (w.events().empty()) return out;
  const std::uint64_t end = w.events().back().seq + 1;
  for (std::uint64_t xs = w.first_fresh_event(); xs < end; ++xs) {
    const auto& x = w.event_at(xs);
    const auto* list = w.events_of_sensor(x.sensor);
    const double tolerance = rs.sensor(x.sensor).tolerance;
    for (auto it = list->rbegin(); it != list->rend(); ++it) {
      if (*it >= xs) continue;
      const auto& y = w.event_at(*it);
      const Tick dt = x.event->time - y.event->time;
      if (dt > cfg.duplicate_window) break;
      if (dt == 0 || x.event->signature != y.event->signature) continue;
      if (!(std::fabs(x.event->value - y.event->value) <= tolerance)) continue;
      Conflict c;
      c.kind = ConflictKind::C7;
      c.tick = x.event->time;
      c.participants = {participant_of(*y.event), participant_of(*x.event)};
      c.note = "sensor " + x.event->sensor.str() + " repeated its reading within the duplicate window";
      c.suppressible = x.event->id;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<Conflict> detect_at_tick(Tick now, std::span<const Event> new_events, DetectionWindow& w,
                                     const DetectorConfig& cfg) {
  w.admit(now, new_events);
  std::vector<Conflict> all;
  for (auto* check : {check_c1, check_c2, check_c3, check_c4, check_c5, check_c6, check_c7}) {
    auto found = check(w, cfg);
    all.insert(all.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
  }
  canonicalize(all);
  w.evict();
  return all;
}

Monitor::Monitor(std::shared_ptr<const RuleSet> rules, DetectorConfig cfg)
    : rules_(rules), cfg_(std::make_unique<DetectorConfig>(std::move(cfg))), window_(rules_, *cfg_) {}

std::vector<Conflict> Monitor::step(Tick now, std::span<const Event> events) {
  return detect_at_tick(now, events, window_, *cfg_);
}

std::vector<Conflict> detect_trace(std::span<const Event> trace, std::shared_ptr<const RuleSet> rules,
                                   const DetectorConfig& cfg) {
  Monitor monitor(std::move(rules), cfg);
  std::vector<Conflict> all;
  std::size_t i = 0;
  while (i < trace.size()) {
    std::size_t j = i;
    while (j < trace.size() && trace[j].time == trace[i].time) ++j;
    auto found = monitor.step(trace[i].time, trace.subspan(i, j - i));
    all.insert(all.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
    i = j;
  }
  canonicalize(all);
  return all;
}

}  // namespace tacc
