import collections

import pytest

import tacc

DUPLICATE_TRACE = (
    "tick,sensor,kind,predicate,value,location\n"
    "0,ts1,temperature,less-than,60,room1\n"
    "20,ts1,temperature,less-than,60,room1\n"
)


def test_parse_and_round_trip():
    doc = tacc.parse(tacc.bundled_fixture("smart_home"))
    assert len(doc.locations) == 4
    assert len(doc.rules) >= 10
    assert tacc.parse(doc.serialize()) == doc


def test_errors_raise():
    with pytest.raises(tacc.TaccError):
        tacc.parse("registry:\n  locations: [room1\n")
    with pytest.raises(ValueError):
        tacc.run_scenario("S9")


def test_static_check():
    assert tacc.static_check(tacc.parse(tacc.bundled_fixture("conflict_free"))) == []
    found = tacc.static_check(tacc.parse(tacc.bundled_fixture("seeded_50")))
    assert {"p5_flash_on_co", "p5_sound_on_smoke"} in [{p["rule_a"], p["rule_b"]} for p in found]


def test_duplicate_reading():
    doc = tacc.parse(tacc.bundled_fixture("c7_duplicate"))
    conflicts = tacc.detect(doc, DUPLICATE_TRACE)
    assert len(conflicts) == 1
    assert conflicts[0]["kind"] == "C7"
    assert conflicts[0]["suppressible"] == 1
    strip = lambda cs: [{k: v for k, v in c.items() if k != "note"} for c in cs]
    assert strip(conflicts) == strip(tacc.oracle_detect(doc, DUPLICATE_TRACE))


def test_run_scenario():
    assert tacc.scenario_ids() == [f"S{i}" for i in range(1, 9)]
    report = tacc.run_scenario("S5", seed=3)
    counts = collections.Counter(c["kind"] for c in report["conflicts"])
    assert report["counts"]["C1"] == counts["C1"] > 0
    assert report["total_conflicts"] == len(report["conflicts"])
    again = tacc.run_scenario("S5", seed=3)
    assert again["series_csv"] == report["series_csv"]

    quiet = tacc.run_scenario("S5", seed=3, horizon=100, probabilities={"smoke": 0.0, "leak": 0.0})
    assert quiet["total_conflicts"] == 0 and quiet["events"] == 0

    paired = tacc.run_scenario("S7", horizon=300)
    assert paired["baseline"] is not None
