"""Full-scale simulated runs against the published per-service energies."""

from __future__ import annotations

from dataclasses import replace

import pytest

from oracles import REPORTED_TOTAL_WH, REFERENCE_WH, REFERENCE_COLUMNS
from svcenergy.engine.results import evaluate
from svcenergy.ingest import DEFAULT_MAPPING, build_usage, load_scrape_dir
from svcenergy.model import EnergyIntensityConfig
from svcenergy.sim import ScenarioConfig, calibrate_default_profiles
from svcenergy.sim.generate import generate_run
from svcenergy.units import j_to_wh

INT = EnergyIntensityConfig.from_config({"reference_year": 2025, "retention_days": 30})
SCENARIOS = {
    "baseline": ScenarioConfig(),
    "monitoring-high": replace(ScenarioConfig(), scrape_interval_s=5),
    "tracing-high": replace(ScenarioConfig(), trace_sampling_rate=0.5),
    "service-mesh": replace(ScenarioConfig(), mesh_enabled=True),
}


@pytest.fixture(scope="module")
def evaluations(tmp_path_factory):
    out = {}
    for name, sc in SCENARIOS.items():
        g = generate_run(sc, calibrate_default_profiles(), tmp_path_factory.mktemp(name))
        b = build_usage(load_scrape_dir(g.streams), DEFAULT_MAPPING, g.topology, g.window, g.pv_sizes)
        out[name] = evaluate(b.usage, g.topology, INT, "apportioned")
    return out


def column_wh(ev, column, component):
    b = ev.groups["primary"] if column == "primary" else ev.services[column]
    attr = {"compute": "e_compute", "network": "e_network", "storage": "e_storage", "total": "e_total"}[component]
    return j_to_wh(getattr(b, attr))


@pytest.mark.parametrize("scenario", ["baseline", "monitoring-high", "tracing-high"])
def test_grand_total_within_3_percent(evaluations, scenario):
    got = j_to_wh(evaluations[scenario].groups["all"].e_total)
    assert got == pytest.approx(REPORTED_TOTAL_WH[scenario], rel=0.03)


# Prometheus under monitoring-high is the one column deliberately not matched
CALIBRATED = [
    (s, c) for s in ("baseline", "monitoring-high", "tracing-high") for c in REFERENCE_COLUMNS
    if (s, c) != ("monitoring-high", "prometheus")
]


@pytest.mark.parametrize("scenario, column", CALIBRATED)
def test_column_totals(evaluations, scenario, column):
    target = REFERENCE_WH[scenario]["total"][REFERENCE_COLUMNS.index(column)]
    got = column_wh(evaluations[scenario], column, "total")
    assert abs(got - target) <= max(0.10 * target, 0.1)


def test_prometheus_monitoring_high_rises(evaluations):
    base = column_wh(evaluations["baseline"], "prometheus", "total")
    high = column_wh(evaluations["monitoring-high"], "prometheus", "total")
    assert high > 4 * base


def test_elasticsearch_tracing_high_network(evaluations):
    assert column_wh(evaluations["tracing-high"], "elasticsearch", "network") == pytest.approx(29.31, rel=0.03)


def test_mesh_overhead(evaluations):
    base = evaluations["baseline"].groups["all"].e_total
    mesh = evaluations["service-mesh"].groups["all"].e_total
    assert mesh / base - 1 == pytest.approx(0.108, abs=0.02)
    assert evaluations["service-mesh"].services["service-mesh"].e_total > 0
    assert evaluations["baseline"].services["service-mesh"].e_total == 0
