"""Adaptive tube MPC with set-membership identification."""

import json

from ._atmpc import (
    AtmpcError,
    Polytope,
    contains,
    dare_gain,
    minkowski_sum,
    mrpi_outer,
    reference_scenario_json,
    pontryagin_diff,
    run_jsonl,
    selftest,
    validate_scenario,
)

__all__ = [
    "AtmpcError",
    "Polytope",
    "contains",
    "dare_gain",
    "minkowski_sum",
    "mrpi_outer",
    "reference_scenario",
    "pontryagin_diff",
    "run",
    "selftest",
    "validate_scenario",
]


def reference_scenario():
    """The two-state benchmark as a dict, ready to edit and pass to run()."""
    return json.loads(reference_scenario_json())


def run(scenario, steps=None):
    """Runs a scenario dict; returns (step records, summary)."""
    lines = [json.loads(line) for line in run_jsonl(json.dumps(scenario), steps).splitlines() if line]
    records = [line for line in lines if line.get("type") == "step"]
    summary = next(line for line in lines if line.get("type") == "summary")
    return records, summary
