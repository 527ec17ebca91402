"""Trigger-action conflict detection and smart-home simulation."""

from ._tacc import (
    Document,
    TaccError,
    bundled_fixture,
    bundled_fixtures,
    detect,
    oracle_detect,
    parse,
    run_scenario,
    scenario_ids,
    static_check,
)

__all__ = [
    "Document",
    "TaccError",
    "bundled_fixture",
    "bundled_fixtures",
    "detect",
    "oracle_detect",
    "parse",
    "run_scenario",
    "scenario_ids",
    "static_check",
]
