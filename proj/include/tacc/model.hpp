#pragma once

// Domain model for trigger-action rulesets: registry, rules, events, the
// feature-dependency graph, the action-relation table and detector settings.
// Everything here is immutable once constructed.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tacc {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed document or trace. Line and column are 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0, int column = 0);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// A reference to an id that was never declared.
class ReferenceError : public Error {
 public:
  ReferenceError(std::string id, const std::string& context);
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class DuplicateIdError : public Error {
 public:
  DuplicateIdError(std::string id, const std::string& section);
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class InvalidValueError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Identifiers

template <class Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {}

  const std::string& str() const { return value_; }
  bool empty() const { return value_.empty(); }

  friend bool operator==(const Id&, const Id&) = default;
  friend auto operator<=>(const Id&, const Id&) = default;
  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value_; }

 private:
  std::string value_;
};

using SensorId = Id<struct SensorTag>;
using ActuatorId = Id<struct ActuatorTag>;
using ControllerId = Id<struct ControllerTag>;
using FeatureId = Id<struct FeatureTag>;
using LocationId = Id<struct LocationTag>;
using RuleId = Id<struct RuleTag>;

using ActionName = std::string;
using Tick = std::uint64_t;
using EventId = std::uint64_t;

// ---------------------------------------------------------------------------
// Events and triggers

enum class PredicateClass : std::uint8_t { GreaterThan, LessThan, EqualTo };
enum class Comparator : std::uint8_t { Greater, Less, Equal };

std::string_view to_string(PredicateClass p);
std::string_view to_string(Comparator c);
std::optional<PredicateClass> parse_predicate(std::string_view text);
std::optional<Comparator> parse_comparator(std::string_view text);
bool compare(Comparator c, double value, double threshold);

struct EventSignature {
  std::string sensor_kind;
  PredicateClass predicate = PredicateClass::EqualTo;
  LocationId location;

  friend bool operator==(const EventSignature&, const EventSignature&) = default;
  friend auto operator<=>(const EventSignature&, const EventSignature&) = default;
};

struct Event {
  EventId id = 0;
  SensorId sensor;
  Tick time = 0;
  double value = 0.0;
  EventSignature signature;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Daily active window [start, end) in ticks-of-day. Wraps past midnight when
/// start > end.
struct DailyWindow {
  Tick start = 0;
  Tick end = 0;

  bool active_at(Tick tick, Tick day_length) const;
  friend bool operator==(const DailyWindow&, const DailyWindow&) = default;
};

struct TriggerCondition {
  std::string sensor_kind;
  Comparator comparator = Comparator::Greater;
  double threshold = 0.0;
  std::string unit;
  std::optional<LocationId> location_filter;
  std::optional<DailyWindow> schedule;

  friend bool operator==(const TriggerCondition&, const TriggerCondition&) = default;
};

struct ActionSpec {
  ActuatorId actuator;
  ActionName action;
  LocationId location;
  std::vector<FeatureId> affected_features;

  friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

struct Rule {
  RuleId id;
  ControllerId controller;
  TriggerCondition trigger;
  ActionSpec action;

  friend bool operator==(const Rule&, const Rule&) = default;
};

// ---------------------------------------------------------------------------
// Registry

struct SensorKind {
  std::string name;
  std::string unit;
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const SensorKind&, const SensorKind&) = default;
};

struct ActuatorKind {
  std::string name;
  std::vector<ActionName> actions;

  friend bool operator==(const ActuatorKind&, const ActuatorKind&) = default;
};

struct Feature {
  FeatureId id;
  LocationId location;
  std::string kind;

  friend bool operator==(const Feature&, const Feature&) = default;
};

struct Sensor {
  SensorId id;
  std::string kind;
  LocationId location;
  /// Readings closer than this count as the same measurement for duplicate
  /// detection.
  double tolerance = 0.0;

  friend bool operator==(const Sensor&, const Sensor&) = default;
};

struct Actuator {
  ActuatorId id;
  std::string kind;
  LocationId location;

  friend bool operator==(const Actuator&, const Actuator&) = default;
};

struct Registry {
  Tick day_length = 864;
  std::vector<LocationId> locations;
  std::vector<SensorKind> sensor_kinds;
  std::vector<ActuatorKind> actuator_kinds;
  std::vector<Feature> features;
  std::vector<Sensor> sensors;
  std::vector<Actuator> actuators;
  std::vector<ControllerId> controllers;

  friend bool operator==(const Registry&, const Registry&) = default;
};

// ---------------------------------------------------------------------------
// RuleSet

/// Dense indices resolved for one rule; all index into the owning RuleSet.
struct ResolvedRule {
  std::uint32_t sensor_kind = 0;
  std::uint32_t actuator = 0;
  std::uint32_t actuator_kind = 0;
  std::uint32_t controller = 0;
  std::vector<std::uint32_t> features;
};

class RuleSet {
 public:
  /// Validates referential integrity and id uniqueness; throws ReferenceError,
  /// DuplicateIdError or InvalidValueError.
  RuleSet(Registry registry, std::vector<Rule> rules);

  const Registry& registry() const { return registry_; }
  const std::vector<Rule>& rules() const { return rules_; }
  const Rule& rule(std::size_t i) const { return rules_[i]; }
  const ResolvedRule& resolved(std::size_t i) const { return resolved_[i]; }
  std::size_t size() const { return rules_.size(); }

  std::optional<std::size_t> rule_index(const RuleId& id) const;
  std::optional<std::size_t> sensor_index(const SensorId& id) const;
  std::optional<std::size_t> sensor_kind_index(std::string_view kind) const;
  std::optional<std::size_t> actuator_index(const ActuatorId& id) const;
  std::optional<std::size_t> actuator_kind_index(std::string_view kind) const;
  std::optional<std::size_t> feature_index(const FeatureId& id) const;
  std::optional<std::size_t> controller_index(const ControllerId& id) const;

  const Sensor& sensor(std::size_t i) const { return registry_.sensors[i]; }
  const SensorKind& sensor_kind(std::size_t i) const { return registry_.sensor_kinds[i]; }
  const Actuator& actuator(std::size_t i) const { return registry_.actuators[i]; }

  /// Rules triggered by the given sensor kind, in declaration order.
  std::span<const std::size_t> rules_for_kind(std::size_t sensor_kind) const {
    return by_kind_[sensor_kind];
  }

  friend bool operator==(const RuleSet& a, const RuleSet& b) {
    return a.registry_ == b.registry_ && a.rules_ == b.rules_;
  }

 private:
  Registry registry_;
  std::vector<Rule> rules_;
  std::vector<ResolvedRule> resolved_;
  std::vector<std::vector<std::size_t>> by_kind_;
  std::unordered_map<std::string, std::size_t> rule_ix_, sensor_ix_, sensor_kind_ix_,
      actuator_ix_, actuator_kind_ix_, feature_ix_, controller_ix_;
};

// ---------------------------------------------------------------------------
// Feature dependencies

/// Directed "affects" edges over features with precomputed transitive
/// reachability. Queries use the symmetric closure.
class FeatureDependencyGraph {
 public:
  FeatureDependencyGraph() = default;
  /// Throws ReferenceError for edges naming undeclared features and
  /// InvalidValueError for self-loops.
  FeatureDependencyGraph(std::vector<FeatureId> nodes,
                         std::vector<std::pair<FeatureId, FeatureId>> edges);

  const std::vector<FeatureId>& nodes() const { return nodes_; }
  const std::vector<std::pair<FeatureId, FeatureId>>& edges() const { return edges_; }

  /// True iff f1 != f2 and one reaches the other. Throws ReferenceError for
  /// unknown features.
  bool dependent(const FeatureId& f1, const FeatureId& f2) const;
  bool dependent(std::size_t i, std::size_t j) const;
  /// Equal or dependent.
  bool related(std::size_t i, std::size_t j) const { return i == j || dependent(i, j); }
  /// Features related to node i (including i), ascending.
  const std::vector<std::uint32_t>& related_to(std::size_t i) const { return related_[i]; }

  std::optional<std::size_t> index(const FeatureId& f) const;

  friend bool operator==(const FeatureDependencyGraph& a, const FeatureDependencyGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  bool reaches(std::size_t from, std::size_t to) const {
    return (reach_[from * words_ + to / 64] >> (to % 64)) & 1U;
  }

  std::vector<FeatureId> nodes_;
  std::vector<std::pair<FeatureId, FeatureId>> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> reach_;
  std::vector<std::vector<std::uint32_t>> related_;
};

// ---------------------------------------------------------------------------
// Action relations

enum class ActionRelation : std::uint8_t { Same, Different, Opposite, Dependent };

std::string_view to_string(ActionRelation r);
std::optional<ActionRelation> parse_relation(std::string_view text);

/// Relation between two actions. Within one actuator kind the table is total:
/// (n, n) is Same and undeclared pairs are Different. Pairs across kinds are
/// Different unless declared, which lets e.g. blind.open oppose light.off.
class ActionRelationTable {
 public:
  struct Entry {
    std::string kind_a;
    ActionName action_a;
    std::string kind_b;
    ActionName action_b;
    ActionRelation relation = ActionRelation::Different;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  ActionRelationTable() = default;
  /// Throws ReferenceError for unknown kinds/actions, InvalidValueError for
  /// contradictory entries or a non-Same relation on (n, n).
  ActionRelationTable(std::vector<ActuatorKind> vocabulary, std::vector<Entry> entries);

  ActionRelation relation(std::string_view kind, std::string_view a, std::string_view b) const;
  ActionRelation relation(std::string_view kind_a, std::string_view a, std::string_view kind_b,
                          std::string_view b) const;
  /// Fast path over qualified action indices (see qualified()).
  ActionRelation relation(std::uint32_t qa, std::uint32_t qb) const;
  std::optional<std::uint32_t> qualified(std::string_view kind, std::string_view action) const;

  const std::vector<ActuatorKind>& vocabulary() const { return vocabulary_; }
  const std::vector<Entry>& entries() const { return entries_; }

  friend bool operator==(const ActionRelationTable& a, const ActionRelationTable& b) {
    return a.vocabulary_ == b.vocabulary_ && a.entries_ == b.entries_;
  }

 private:
  std::uint32_t require(std::string_view kind, std::string_view action) const;

  std::vector<ActuatorKind> vocabulary_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::uint32_t> qualified_;
  std::vector<std::uint32_t> kind_of_;
  std::unordered_map<std::uint64_t, ActionRelation> table_;
};

// ---------------------------------------------------------------------------
// Detector configuration

/// Explicit groups of signatures to be treated as similar.
struct SignatureClasses {
  std::vector<std::vector<EventSignature>> groups;

  std::optional<std::size_t> class_of(const EventSignature& s) const;
  bool similar(const EventSignature& a, const EventSignature& b) const;

  friend bool operator==(const SignatureClasses&, const SignatureClasses&) = default;
};

struct DetectorConfig {
  Tick overlap_window = 5;
  Tick duplicate_window = 30;
  Tick same_tick_epsilon = 0;
  FeatureDependencyGraph dependency_graph;
  ActionRelationTable action_relations;
  SignatureClasses signature_classes;

  /// Throws InvalidValueError when W or D is zero.
  void validate() const;
  /// Oldest age any check looks back to.
  Tick horizon() const;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

// ---------------------------------------------------------------------------
// Oracles over the model

bool dependent_features(const FeatureId& f1, const FeatureId& f2, const FeatureDependencyGraph& g);

/// Distinct ids, similar signatures and |dt| <= W.
bool overlapping_events(const Event& e1, const Event& e2, const DetectorConfig& cfg);

ActionRelation action_relation(std::string_view actuator_kind, std::string_view n1,
                               std::string_view n2, const ActionRelationTable& table);

inline Tick tick_distance(Tick a, Tick b) { return a > b ? a - b : b - a; }

}  // namespace tacc

template <class Tag>
struct std::hash<tacc::Id<Tag>> {
  std::size_t operator()(const tacc::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
