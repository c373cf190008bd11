from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]
SPECS = ROOT / "specs"
FIXTURES = Path(__file__).parent / "fixtures"


def small_spec_dict(**over) -> dict:
    """Two scenarios, short compressed runs: fast enough for unit tests."""
    d = {
        "name": "small",
        "seed": 7,
        "repetitions": 2,
        "intensities": {"reference_year": 2025, "retention_days": 30},
        "baseline": {
            "duration_min": 70,
            "warmup_min": 7,
            "cooldown_min": 3,
            "collection_interval_s": 6,
            "time_compression": 10,
        },
        "treatments": [{"name": "tracing-high", "kind": "trace_sampling", "parameter": 0.5}],
    }
    d.update(over)
    return d


@pytest.fixture(scope="session")
def desk_archive(tmp_path_factory):
    """The shipped six-scenario spec, run once per session."""
    from svcenergy.engine import load_spec, run_experiment

    out = tmp_path_factory.mktemp("desk") / "archive"
    spec = load_spec(SPECS / "desk_six_scenarios.yaml", output_dir=out)
    outcome = run_experiment(spec, workers=2)
    assert not outcome.failures
    return out


@pytest.fixture(scope="session")
def small_archive(tmp_path_factory):
    from svcenergy.engine import parse_spec, run_experiment

    out = tmp_path_factory.mktemp("small") / "archive"
    outcome = run_experiment(parse_spec(small_spec_dict(output_dir=str(out))))
    assert not outcome.failures
    return out
