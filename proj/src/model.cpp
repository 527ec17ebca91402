#include "tacc/model.hpp"

#include <algorithm>
#include <set>

namespace tacc {

ParseError::ParseError(const std::string& what, int line, int column)
    : Error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) +
                           ": " + what
                     : what),
      line_(line),
      column_(column) {}

ReferenceError::ReferenceError(std::string id, const std::string& context)
    : Error("unknown id '" + id + "' referenced by " + context), id_(std::move(id)) {}

DuplicateIdError::DuplicateIdError(std::string id, const std::string& section)
    : Error("duplicate id '" + id + "' in " + section), id_(std::move(id)) {}

std::string_view to_string(PredicateClass p) {
  switch (p) {
    case PredicateClass::GreaterThan: return "greater-than";
    case PredicateClass::LessThan: return "less-than";
    case PredicateClass::EqualTo: return "equal-to";
  }
  return "?";
}

std::string_view to_string(Comparator c) {
  switch (c) {
    case Comparator::Greater: return ">";
    case Comparator::Less: return "<";
    case Comparator::Equal: return "==";
  }
  return "?";
}

std::optional<PredicateClass> parse_predicate(std::string_view text) {
  if (text == "greater-than") return PredicateClass::GreaterThan;
  if (text == "less-than") return PredicateClass::LessThan;
  if (text == "equal-to") return PredicateClass::EqualTo;
  return std::nullopt;
}

std::optional<Comparator> parse_comparator(std::string_view text) {
  if (text == ">") return Comparator::Greater;
  if (text == "<") return Comparator::Less;
  if (text == "==") return Comparator::Equal;
  return std::nullopt;
}

bool compare(Comparator c, double value, double threshold) {
  switch (c) {
    case Comparator::Greater: return value > threshold;
    case Comparator::Less: return value < threshold;
    case Comparator::Equal: return value == threshold;
  }
  return false;
}

bool DailyWindow::active_at(Tick tick, Tick day_length) const {
  const Tick tod = tick % day_length;
  const Tick s = start % day_length;
  const Tick e = end % day_length;
  if (s < e) return tod >= s && tod < e;
  return tod >= s || tod < e;
}

// ---------------------------------------------------------------------------

namespace {

template <class T, class KeyFn>
std::unordered_map<std::string, std::size_t> index_unique(const std::vector<T>& items, KeyFn key,
                                                          const std::string& section) {
  std::unordered_map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string& k = key(items[i]);
    if (k.empty()) throw InvalidValueError("empty id in " + section);
    if (!out.emplace(k, i).second) throw DuplicateIdError(k, section);
  }
  return out;
}

std::optional<std::size_t> lookup(const std::unordered_map<std::string, std::size_t>& m,
                                  const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

}  // namespace

RuleSet::RuleSet(Registry registry, std::vector<Rule> rules)
    : registry_(std::move(registry)), rules_(std::move(rules)) {
  auto& reg = registry_;
  if (reg.day_length == 0) throw InvalidValueError("day_length must be positive");

  const auto location_ix =
      index_unique(reg.locations, [](const LocationId& l) -> const std::string& { return l.str(); },
                   "registry.locations");
  auto require_location = [&](const LocationId& l, const std::string& ctx) {
    if (!location_ix.contains(l.str())) throw ReferenceError(l.str(), ctx);
  };

  sensor_kind_ix_ = index_unique(
      reg.sensor_kinds, [](const SensorKind& k) -> const std::string& { return k.name; },
      "registry.sensor_kinds");
  for (const auto& k : reg.sensor_kinds) {
    if (!(k.min <= k.max)) throw InvalidValueError("sensor kind '" + k.name + "' has min > max");
  }

  actuator_kind_ix_ = index_unique(
      reg.actuator_kinds, [](const ActuatorKind& k) -> const std::string& { return k.name; },
      "registry.actuator_kinds");
  for (const auto& k : reg.actuator_kinds) {
    if (k.actions.empty()) throw InvalidValueError("actuator kind '" + k.name + "' has no actions");
    std::set<std::string> seen;
    for (const auto& a : k.actions) {
      if (!seen.insert(a).second) throw DuplicateIdError(a, "actions of '" + k.name + "'");
    }
  }

  feature_ix_ = index_unique(
      reg.features, [](const Feature& f) -> const std::string& { return f.id.str(); },
      "registry.features");
  for (const auto& f : reg.features) require_location(f.location, "feature '" + f.id.str() + "'");

  sensor_ix_ = index_unique(
      reg.sensors, [](const Sensor& s) -> const std::string& { return s.id.str(); },
      "registry.sensors");
  for (const auto& s : reg.sensors) {
    if (!sensor_kind_ix_.contains(s.kind)) throw ReferenceError(s.kind, "sensor '" + s.id.str() + "'");
    require_location(s.location, "sensor '" + s.id.str() + "'");
    if (!(s.tolerance >= 0.0)) throw InvalidValueError("sensor '" + s.id.str() + "' has negative tolerance");
  }

  actuator_ix_ = index_unique(
      reg.actuators, [](const Actuator& a) -> const std::string& { return a.id.str(); },
      "registry.actuators");
  for (const auto& a : reg.actuators) {
    if (!actuator_kind_ix_.contains(a.kind)) throw ReferenceError(a.kind, "actuator '" + a.id.str() + "'");
    require_location(a.location, "actuator '" + a.id.str() + "'");
  }

  controller_ix_ = index_unique(
      reg.controllers, [](const ControllerId& c) -> const std::string& { return c.str(); },
      "registry.controllers");

  rule_ix_ = index_unique(
      rules_, [](const Rule& r) -> const std::string& { return r.id.str(); }, "rules");

  by_kind_.assign(reg.sensor_kinds.size(), {});
  resolved_.reserve(rules_.size());
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    Rule& r = rules_[i];
    const std::string ctx = "rule '" + r.id.str() + "'";
    ResolvedRule rr;

    auto c = lookup(controller_ix_, r.controller.str());
    if (!c) throw ReferenceError(r.controller.str(), ctx);
    rr.controller = static_cast<std::uint32_t>(*c);

    auto& trig = r.trigger;
    auto k = lookup(sensor_kind_ix_, trig.sensor_kind);
    if (!k) throw ReferenceError(trig.sensor_kind, ctx);
    rr.sensor_kind = static_cast<std::uint32_t>(*k);
    const SensorKind& kind = reg.sensor_kinds[*k];
    if (trig.unit.empty()) trig.unit = kind.unit;
    if (trig.unit != kind.unit) {
      throw InvalidValueError(ctx + ": threshold unit '" + trig.unit + "' does not match '" +
                              kind.name + "' unit '" + kind.unit + "'");
    }
    if (trig.location_filter) require_location(*trig.location_filter, ctx);
    if (trig.schedule) {
      const auto& s = *trig.schedule;
      if (s.start >= reg.day_length || s.end > reg.day_length ||
          s.start % reg.day_length == s.end % reg.day_length) {
        throw InvalidValueError(ctx + ": schedule must satisfy start != end (mod day) within one day");
      }
    }

    auto& act = r.action;
    auto a = lookup(actuator_ix_, act.actuator.str());
    if (!a) throw ReferenceError(act.actuator.str(), ctx);
    rr.actuator = static_cast<std::uint32_t>(*a);
    const Actuator& actuator = reg.actuators[*a];
    rr.actuator_kind = static_cast<std::uint32_t>(*lookup(actuator_kind_ix_, actuator.kind));
    const auto& vocab = reg.actuator_kinds[rr.actuator_kind].actions;
    if (std::find(vocab.begin(), vocab.end(), act.action) == vocab.end()) {
      throw ReferenceError(act.action, ctx + " (action of kind '" + actuator.kind + "')");
    }
    if (act.location.empty()) act.location = actuator.location;
    require_location(act.location, ctx);
    if (act.affected_features.empty()) throw InvalidValueError(ctx + ": affected_features is empty");
    for (const auto& f : act.affected_features) {
      auto fi = lookup(feature_ix_, f.str());
      if (!fi) throw ReferenceError(f.str(), ctx);
      rr.features.push_back(static_cast<std::uint32_t>(*fi));
    }
    std::sort(rr.features.begin(), rr.features.end());
    rr.features.erase(std::unique(rr.features.begin(), rr.features.end()), rr.features.end());

    by_kind_[rr.sensor_kind].push_back(i);
    resolved_.push_back(std::move(rr));
  }
}

std::optional<std::size_t> RuleSet::rule_index(const RuleId& id) const { return lookup(rule_ix_, id.str()); }
std::optional<std::size_t> RuleSet::sensor_index(const SensorId& id) const { return lookup(sensor_ix_, id.str()); }
std::optional<std::size_t> RuleSet::sensor_kind_index(std::string_view kind) const {
  return lookup(sensor_kind_ix_, std::string(kind));
}
std::optional<std::size_t> RuleSet::actuator_index(const ActuatorId& id) const {
  return lookup(actuator_ix_, id.str());
}
std::optional<std::size_t> RuleSet::actuator_kind_index(std::string_view kind) const {
  return lookup(actuator_kind_ix_, std::string(kind));
}
std::optional<std::size_t> RuleSet::feature_index(const FeatureId& id) const {
  return lookup(feature_ix_, id.str());
}
std::optional<std::size_t> RuleSet::controller_index(const ControllerId& id) const {
  return lookup(controller_ix_, id.str());
}

// ---------------------------------------------------------------------------

FeatureDependencyGraph::FeatureDependencyGraph(std::vector<FeatureId> nodes,
                                               std::vector<std::pair<FeatureId, FeatureId>> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  index_ = index_unique(
      nodes_, [](const FeatureId& f) -> const std::string& { return f.str(); }, "feature graph nodes");
  const std::size_t n = nodes_.size();
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (const auto& [from, to] : edges_) {
    auto a = lookup(index_, from.str());
    if (!a) throw ReferenceError(from.str(), "feature_deps");
    auto b = lookup(index_, to.str());
    if (!b) throw ReferenceError(to.str(), "feature_deps");
    if (*a == *b) throw InvalidValueError("feature_deps: self-loop on '" + from.str() + "'");
    adj[*a].push_back(static_cast<std::uint32_t>(*b));
  }

  words_ = (n + 63) / 64;
  reach_.assign(n * words_, 0);
  std::vector<std::uint32_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    std::uint64_t* row = &reach_[s * words_];
    stack.assign(adj[s].begin(), adj[s].end());
    while (!stack.empty()) {
      const std::uint32_t v = stack.back();
      stack.pop_back();
      if ((row[v / 64] >> (v % 64)) & 1U) continue;
      row[v / 64] |= std::uint64_t{1} << (v % 64);
      for (auto w : adj[v]) stack.push_back(w);
    }
  }

  related_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || reaches(i, j) || reaches(j, i)) related_[i].push_back(static_cast<std::uint32_t>(j));
    }
  }
}

std::optional<std::size_t> FeatureDependencyGraph::index(const FeatureId& f) const {
  return lookup(index_, f.str());
}

bool FeatureDependencyGraph::dependent(std::size_t i, std::size_t j) const {
  return i != j && (reaches(i, j) || reaches(j, i));
}

bool FeatureDependencyGraph::dependent(const FeatureId& f1, const FeatureId& f2) const {
  auto a = index(f1);
  if (!a) throw ReferenceError(f1.str(), "dependent_features");
  auto b = index(f2);
  if (!b) throw ReferenceError(f2.str(), "dependent_features");
  return dependent(*a, *b);
}

bool dependent_features(const FeatureId& f1, const FeatureId& f2, const FeatureDependencyGraph& g) {
  return g.dependent(f1, f2);
}

// ---------------------------------------------------------------------------

std::string_view to_string(ActionRelation r) {
  switch (r) {
    case ActionRelation::Same: return "same";
    case ActionRelation::Different: return "different";
    case ActionRelation::Opposite: return "opposite";
    case ActionRelation::Dependent: return "dependent";
  }
  return "?";
}

std::optional<ActionRelation> parse_relation(std::string_view text) {
  if (text == "same") return ActionRelation::Same;
  if (text == "different") return ActionRelation::Different;
  if (text == "opposite") return ActionRelation::Opposite;
  if (text == "dependent") return ActionRelation::Dependent;
  return std::nullopt;
}

namespace {

std::string qualify(std::string_view kind, std::string_view action) {
  std::string q(kind);
  q += '\x1f';
  q += action;
  return q;
}

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t{a} << 32) | b;
}

}  // namespace

ActionRelationTable::ActionRelationTable(std::vector<ActuatorKind> vocabulary, std::vector<Entry> entries)
    : vocabulary_(std::move(vocabulary)), entries_(std::move(entries)) {
  for (std::uint32_t k = 0; k < vocabulary_.size(); ++k) {
    for (const auto& a : vocabulary_[k].actions) {
      const auto q = static_cast<std::uint32_t>(kind_of_.size());
      if (!qualified_.emplace(qualify(vocabulary_[k].name, a), q).second) {
        throw DuplicateIdError(vocabulary_[k].name + "." + a, "action vocabulary");
      }
      kind_of_.push_back(k);
    }
  }
  for (const auto& e : entries_) {
    const auto qa = require(e.kind_a, e.action_a);
    const auto qb = require(e.kind_b, e.action_b);
    if (qa == qb) {
      if (e.relation != ActionRelation::Same) {
        throw InvalidValueError("action_relations: (" + e.action_a + ", " + e.action_a +
                                ") must be 'same'");
      }
      continue;
    }
    if (e.relation == ActionRelation::Same) {
      throw InvalidValueError("action_relations: distinct actions " + e.kind_a + "." + e.action_a +
                              " and " + e.kind_b + "." + e.action_b + " cannot be 'same'");
    }
    auto [it, inserted] = table_.emplace(pair_key(qa, qb), e.relation);
    if (!inserted && it->second != e.relation) {
      throw InvalidValueError("action_relations: conflicting entries for " + e.kind_a + "." +
                              e.action_a + " / " + e.kind_b + "." + e.action_b);
    }
  }
}

std::optional<std::uint32_t> ActionRelationTable::qualified(std::string_view kind,
                                                            std::string_view action) const {
  auto it = qualified_.find(qualify(kind, action));
  if (it == qualified_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t ActionRelationTable::require(std::string_view kind, std::string_view action) const {
  auto q = qualified(kind, action);
  if (!q) throw ReferenceError(std::string(kind) + "." + std::string(action), "action_relations");
  return *q;
}

ActionRelation ActionRelationTable::relation(std::uint32_t qa, std::uint32_t qb) const {
  if (qa == qb) return ActionRelation::Same;
  auto it = table_.find(pair_key(qa, qb));
  return it == table_.end() ? ActionRelation::Different : it->second;
}

ActionRelation ActionRelationTable::relation(std::string_view kind, std::string_view a,
                                             std::string_view b) const {
  return relation(require(kind, a), require(kind, b));
}

ActionRelation ActionRelationTable::relation(std::string_view kind_a, std::string_view a,
                                             std::string_view kind_b, std::string_view b) const {
  return relation(require(kind_a, a), require(kind_b, b));
}

ActionRelation action_relation(std::string_view actuator_kind, std::string_view n1, std::string_view n2,
                               const ActionRelationTable& table) {
  return table.relation(actuator_kind, n1, n2);
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> SignatureClasses::class_of(const EventSignature& s) const {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (std::find(groups[g].begin(), groups[g].end(), s) != groups[g].end()) return g;
  }
  return std::nullopt;
}

bool SignatureClasses::similar(const EventSignature& a, const EventSignature& b) const {
  if (a == b) return true;
  auto ca = class_of(a);
  return ca && ca == class_of(b);
}

void DetectorConfig::validate() const {
  if (overlap_window < 1) throw InvalidValueError("overlap_window must be >= 1");
  if (duplicate_window < 1) throw InvalidValueError("duplicate_window must be >= 1");
}

Tick DetectorConfig::horizon() const {
  return std::max({overlap_window, duplicate_window, same_tick_epsilon});
}

bool overlapping_events(const Event& e1, const Event& e2, const DetectorConfig& cfg) {
  return e1.id != e2.id && cfg.signature_classes.similar(e1.signature, e2.signature) &&
         tick_distance(e1.time, e2.time) <= cfg.overlap_window;
}

}  // namespace tacc
