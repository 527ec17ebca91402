#include <algorithm>

#include "doctest.h"
#include "support.hpp"
#include "tacc/detector.hpp"
#include "tacc/oracle.hpp"
#include "tacc/simulator.hpp"

using namespace tacc;
using tacc::testing::CaseGenerator;
using tacc::testing::make_event;
using tacc::testing::same_conflicts;

TEST_CASE("oracle on trivial traces") {
  auto doc = sim::load_bundled("c7_duplicate");
  CHECK(oracle::detect({}, doc.ruleset, doc.detector).empty());
  std::vector<Event> one = {make_event(0, "ts1", 3, 60, "temperature", PredicateClass::LessThan, "room1")};
  CHECK(oracle::detect(one, doc.ruleset, doc.detector).empty());
}

TEST_CASE("oracle ignores event order within a tick") {
  CaseGenerator gen(555);
  for (int round = 0; round < 200; ++round) {
    auto c = gen.full_case(8, 80);
    auto base = oracle::detect(c.trace, *c.rules, c.cfg);
    auto shuffled = c.trace;
    std::size_t i = 0;
    while (i < shuffled.size()) {
      std::size_t j = i;
      while (j < shuffled.size() && shuffled[j].time == shuffled[i].time) ++j;
      std::shuffle(shuffled.begin() + static_cast<std::ptrdiff_t>(i), shuffled.begin() + static_cast<std::ptrdiff_t>(j),
                   gen.rng());
      i = j;
    }
    REQUIRE(same_conflicts(oracle::detect(shuffled, *c.rules, c.cfg), base));
  }
}

TEST_CASE("oracle agrees with the detector on the alarm scenario") {
  auto scenario = sim::builtin_scenario("S5");
  auto doc = sim::load_bundled(scenario.fixture);
  for (std::uint64_t seed : {1, 2, 3}) {
    scenario.seed = seed;
    auto report = sim::run_scenario(scenario, doc);
    REQUIRE(!report.events.empty());
    auto expected = oracle::detect(report.events, doc.ruleset, doc.detector);
    CHECK(expected.size() > 0);
    CHECK(same_conflicts(report.conflicts, expected));
    CHECK(same_conflicts(detect_trace(report.events, std::make_shared<const RuleSet>(doc.ruleset), doc.detector),
                         expected));
  }
}
