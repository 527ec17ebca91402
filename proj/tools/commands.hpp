#pragma once

// Command-line front end. Exit status: 0 clean, 1 conflicts found, 2 usage or
// input error.

#include <filesystem>
#include <iosfwd>

#include "tacc/simulator.hpp"

namespace tacc::cli {

inline constexpr int kClean = 0;
inline constexpr int kConflicts = 1;
inline constexpr int kInputError = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// A scenario file derives from a built-in scenario:
///   base: S5                 # required
///   ruleset: other.yaml      # optional, relative to the file
///   horizon / start_tick / seed / suppression (off|duplicates|all)
///   probabilities: {source: p, ...}
/// Returns the scenario and the ruleset document it runs against.
std::pair<sim::Scenario, Document> load_scenario_file(const std::filesystem::path& path);

}  // namespace tacc::cli
