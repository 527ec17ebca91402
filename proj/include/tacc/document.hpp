#pragma once

// Ruleset configuration documents (YAML). One document carries the registry,
// rules, feature dependencies, action relations and detector parameters:
//
//   registry:
//     day_length: 864
//     locations: [room1, corridor]
//     sensor_kinds:   [{name: temperature, unit: F, range: [30, 110]}]
//     actuator_kinds: [{name: thermostat, actions: [increase, decrease]}]
//     features:  [{id: temp_room1, location: room1, kind: temperature}]
//     sensors:   [{id: ts1, kind: temperature, location: room1, tolerance: 0}]
//     actuators: [{id: thermo1, kind: thermostat, location: corridor}]
//     controllers: [hvac]
//   rules:
//     - id: r1
//       controller: hvac
//       trigger: {sensor_kind: temperature, comparator: "<", threshold: 65,
//                 unit: F, location_filter: room1, schedule: {start: 0, end: 648}}
//       action: {actuator: thermo1, action: increase, location: corridor,
//                affected_features: [temp_room1]}
//   feature_deps: [[temp_room1, hum_room1]]
//   action_relations:
//     - {kind: thermostat, a: increase, b: decrease, relation: opposite}
//     - {a: blind.open, b: light.off, relation: opposite}
//   signature_classes:
//     - [temperature/less-than/room1, temperature/greater-than/room2]
//   detector: {overlap_window: 5, duplicate_window: 30, same_tick_epsilon: 0}

#include <filesystem>
#include <string>
#include <string_view>

#include "tacc/model.hpp"

namespace tacc {

struct Document {
  RuleSet ruleset;
  DetectorConfig detector;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Throws ParseError (with position), ReferenceError, DuplicateIdError or
/// InvalidValueError.
Document parse_document(std::string_view text);
RuleSet parse_ruleset(std::string_view text);
Document load_document(const std::filesystem::path& path);

/// Canonical form; parse_document(serialize_document(d)) == d.
std::string serialize_document(const Document& doc);

}  // namespace tacc
