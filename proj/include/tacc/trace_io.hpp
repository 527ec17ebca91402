#pragma once

// CSV formats at the command-line boundary.
//
//   event trace:  tick,sensor,kind,predicate,value,location
//   conflict log: tick,kind,rule_a,rule_b,event_a,event_b,actuator,note
//
// Comma-separated, LF line endings, one record per line. Event ids are the
// 0-based row index within the trace.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tacc/detector.hpp"

namespace tacc {

inline constexpr std::string_view kTraceHeader = "tick,sensor,kind,predicate,value,location";
inline constexpr std::string_view kConflictHeader = "tick,kind,rule_a,rule_b,event_a,event_b,actuator,note";

/// Parses and validates a trace against the registry: known sensor, kind and
/// location agreeing with the sensor, value inside the kind's range, ticks
/// non-decreasing and at most one event per sensor per tick. Errors are
/// ParseError carrying the offending line.
std::vector<Event> read_trace(std::istream& in, const RuleSet& rs);
std::vector<Event> load_trace(const std::filesystem::path& path, const RuleSet& rs);

void write_trace(std::ostream& out, std::span<const Event> events);
void write_conflict_log(std::ostream& out, std::span<const Conflict> conflicts);

/// Shortest round-tripping decimal form.
std::string format_number(double v);
/// Quotes a CSV field when it contains a comma, quote or line break.
std::string csv_field(std::string_view text);

}  // namespace tacc
