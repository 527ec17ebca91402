#pragma once

// Online conflict detection over a sliding window of triggered actions, plus
// the static pairwise ruleset analysis.

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "tacc/model.hpp"

namespace tacc {

enum class ConflictKind : std::uint8_t { C1 = 1, C2, C3, C4, C5, C6, C7 };

inline constexpr std::array<ConflictKind, 7> kAllConflictKinds = {
    ConflictKind::C1, ConflictKind::C2, ConflictKind::C3, ConflictKind::C4,
    ConflictKind::C5, ConflictKind::C6, ConflictKind::C7};

std::string_view to_string(ConflictKind k);
std::optional<ConflictKind> parse_conflict_kind(std::string_view text);
inline std::size_t kind_slot(ConflictKind k) { return static_cast<std::size_t>(k) - 1; }

/// An event that fired a rule. The rule is an index into the RuleSet the
/// action was matched against; controller and action are the rule's.
struct TriggeredAction {
  std::shared_ptr<const Event> event;
  std::size_t rule = 0;
  Tick time = 0;
};

/// Self-contained view of one conflict participant. `rule` is empty for
/// duplicate-event (C7) participants.
struct Participant {
  EventId event = 0;
  SensorId sensor;
  Tick time = 0;
  double value = 0.0;
  RuleId rule;
  ControllerId controller;
  ActuatorId actuator;
  ActionName action;

  friend bool operator==(const Participant&, const Participant&) = default;
};

struct Conflict {
  ConflictKind kind = ConflictKind::C1;
  Tick tick = 0;
  std::array<Participant, 2> participants;
  std::string note;
  /// C7 only: the later, suppressible event.
  std::optional<EventId> suppressible;

  /// Identity used for ordering and set comparison.
  std::tuple<Tick, int, EventId, std::string, EventId, std::string> key() const {
    return {tick, static_cast<int>(kind), participants[0].event, participants[0].rule.str(),
            participants[1].event, participants[1].rule.str()};
  }
  friend bool operator==(const Conflict&, const Conflict&) = default;
};

/// Sorts by key() and drops duplicates.
void canonicalize(std::vector<Conflict>& conflicts);

/// Rules whose trigger holds for the event, in declaration order. Throws
/// ReferenceError when the event's sensor kind is not declared.
std::vector<TriggeredAction> match_rules(const Event& e, const RuleSet& rs);
std::vector<TriggeredAction> match_rules(std::shared_ptr<const Event> e, const RuleSet& rs);

/// Raised when ticks go backwards or a sensor reports twice in one tick.
class StreamOrderError : public Error {
 public:
  using Error::Error;
};

/// Ring of recent triggered actions and raw events covering the last
/// DetectorConfig::horizon() ticks. Entries admitted by the latest call to
/// admit() are "fresh"; the checks report pairs with at least one fresh member,
/// so each pair is reported once, at the tick its later member arrives.
class DetectionWindow {
 public:
  struct ActionEntry {
    TriggeredAction action;
    std::uint64_t seq = 0;
    std::uint64_t event_seq = 0;
  };
  struct EventEntry {
    std::shared_ptr<const Event> event;
    std::uint64_t seq = 0;
    std::uint32_t sensor = 0;
    std::uint32_t signature_class = 0;
  };

  DetectionWindow(std::shared_ptr<const RuleSet> rules, const DetectorConfig& cfg);

  const RuleSet& ruleset() const { return *rules_; }
  Tick now() const { return now_; }
  bool started() const { return started_; }

  /// Matches the events against the ruleset and inserts both. Events must all
  /// carry tick `now`; throws StreamOrderError on a tick going backwards or a
  /// sensor reporting twice within a tick, ReferenceError on an unknown sensor,
  /// InvalidValueError when the signature disagrees with the sensor or the
  /// value lies outside the declared range.
  void admit(Tick now, std::span<const Event> events);
  /// Drops entries older than the horizon relative to now().
  void evict();

  /// Accumulation lists rebuilt by admit(): every in-window action, the
  /// distinct controllers issuing them, and every in-window event.
  const std::vector<const TriggeredAction*>& list_a() const { return list_a_; }
  const std::vector<ControllerId>& list_c() const { return list_c_; }
  const std::vector<const Event*>& list_e() const { return list_e_; }

  std::size_t action_count() const { return actions_.size(); }
  std::size_t event_count() const { return events_.size(); }
  /// Actions admitted by the latest admit(), in match order.
  std::vector<TriggeredAction> fresh_actions() const;

  // Accessors for the checks.
  const std::deque<ActionEntry>& actions() const { return actions_; }
  const std::deque<EventEntry>& events() const { return events_; }
  std::uint64_t first_fresh_action() const { return fresh_action_seq_; }
  std::uint64_t first_fresh_event() const { return fresh_event_seq_; }
  const ActionEntry& action_at(std::uint64_t seq) const { return actions_[seq - action_base_]; }
  const EventEntry& event_at(std::uint64_t seq) const { return events_[seq - event_base_]; }
  const std::deque<std::uint64_t>* actions_on_actuator(std::uint32_t actuator) const;
  const std::deque<std::uint64_t>* actions_on_feature(std::uint32_t feature) const;
  const std::deque<std::uint64_t>* events_of_sensor(std::uint32_t sensor) const;
  std::uint32_t qualified_action(std::size_t rule) const { return qualified_[rule]; }
  /// Feature indices of the rule mapped into the dependency graph.
  const std::vector<std::uint32_t>& graph_features(std::size_t rule) const { return graph_features_[rule]; }
  const DetectorConfig& config() const { return *cfg_; }

 private:
  std::uint32_t intern_signature(const EventSignature& s);

  std::shared_ptr<const RuleSet> rules_;
  const DetectorConfig* cfg_;
  Tick now_ = 0;
  bool started_ = false;

  std::deque<ActionEntry> actions_;
  std::deque<EventEntry> events_;
  std::uint64_t action_base_ = 0, event_base_ = 0;
  std::uint64_t fresh_action_seq_ = 0, fresh_event_seq_ = 0;
  std::unordered_map<std::uint32_t, std::deque<std::uint64_t>> by_actuator_, by_feature_, by_sensor_;

  std::vector<std::uint32_t> qualified_;
  std::vector<std::vector<std::uint32_t>> graph_features_;
  std::map<EventSignature, std::uint32_t> signature_ids_;
  std::uint32_t next_signature_id_ = 0;

  std::vector<const TriggeredAction*> list_a_;
  std::vector<ControllerId> list_c_;
  std::vector<const Event*> list_e_;
};

// Each check returns conflicts for pairs with at least one fresh member.
std::vector<Conflict> check_c1(const DetectionWindow& w, const DetectorConfig& cfg);
std::vector<Conflict> check_c2(const DetectionWindow& w, const DetectorConfig& cfg);
std::vector<Conflict> check_c3(const DetectionWindow& w, const DetectorConfig& cfg);
std::vector<Conflict> check_c4(const DetectionWindow& w, const DetectorConfig& cfg);
std::vector<Conflict> check_c5(const DetectionWindow& w, const DetectorConfig& cfg);
std::vector<Conflict> check_c6(const DetectionWindow& w, const DetectorConfig& cfg);
std::vector<Conflict> check_c7(const DetectionWindow& w, const DetectorConfig& cfg);

/// Admits the events, evaluates all seven checks (never stopping at the first
/// hit), returns the canonical union and evicts expired entries.
std::vector<Conflict> detect_at_tick(Tick now, std::span<const Event> new_events, DetectionWindow& w,
                                     const DetectorConfig& cfg);

/// Stream-level convenience: owns the ruleset, config and window.
class Monitor {
 public:
  Monitor(std::shared_ptr<const RuleSet> rules, DetectorConfig cfg);

  std::vector<Conflict> step(Tick now, std::span<const Event> events);
  const DetectionWindow& window() const { return window_; }
  const DetectorConfig& config() const { return *cfg_; }

 private:
  std::shared_ptr<const RuleSet> rules_;
  std::unique_ptr<DetectorConfig> cfg_;
  DetectionWindow window_;
};

/// Runs a whole tick-sorted trace through a fresh Monitor.
std::vector<Conflict> detect_trace(std::span<const Event> trace, std::shared_ptr<const RuleSet> rules,
                                   const DetectorConfig& cfg);

// ---------------------------------------------------------------------------
// Static analysis

struct PotentialConflict {
  ConflictKind kind = ConflictKind::C1;
  RuleId rule_a;  // rule_a < rule_b
  RuleId rule_b;
  std::string note;

  std::tuple<std::string, std::string, int> key() const {
    return {rule_a.str(), rule_b.str(), static_cast<int>(kind)};
  }
  friend bool operator==(const PotentialConflict& a, const PotentialConflict& b) {
    return a.key() == b.key();
  }
};

/// Every pair of distinct rules that some admissible pair of events could
/// drive into a C1..C6 violation, one record per (pair, kind), sorted.
std::vector<PotentialConflict> static_check(const RuleSet& rs, const DetectorConfig& cfg);

}  // namespace tacc
