#pragma once

// Brute-force reference implementations used as ground truth by the tests.
// Nothing here shares code with the detector beyond the plain data types: the
// matcher, the dependency closure, the relation lookup and the policies are
// re-derived literally from their definitions. Quadratic (or worse) on
// purpose.

#include <span>
#include <vector>

#include "tacc/detector.hpp"

namespace tacc::oracle {

/// Every conflict in the whole trace: all triggered actions are materialized,
/// then every unordered pair (and every same-sensor event pair for C7) is
/// tested. Returned in canonical order.
std::vector<Conflict> detect(std::span<const Event> trace, const RuleSet& rs, const DetectorConfig& cfg);

/// Exhaustive pairwise co-satisfiability over a sampled trigger space: each
/// sensor, each time offset within reach of a policy, every tick of the day
/// and a value grid of thresholds, thresholds +/- 1, midpoints and range
/// endpoints. Returned in canonical order.
std::vector<PotentialConflict> static_pairs(const RuleSet& rs, const DetectorConfig& cfg);

}  // namespace tacc::oracle
