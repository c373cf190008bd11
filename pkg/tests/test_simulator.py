from __future__ import annotations

import hashlib
import json
from dataclasses import replace

import pytest

from svcenergy.ingest import DEFAULT_MAPPING, build_usage, load_pv_sizes, load_scrape_dir
from svcenergy.ingest.files import scrape_files
from svcenergy.model import EnergyIntensityConfig, container_energy
from svcenergy.sim import (
    MESH_SERVICE,
    ScenarioConfig,
    ScenarioError,
    TreatmentSpec,
    apply_scenario_treatment,
    calibrate_default_profiles,
    controlled_differences,
    patch_descriptor,
)
from svcenergy.sim.generate import SimulationError, generate_run, stable_seed

FAST = ScenarioConfig(collection_interval_s=6, time_compression=10)
PROFILES = calibrate_default_profiles()
INT = EnergyIntensityConfig.from_config({"reference_year": 2025, "retention_days": 30})


def tree_digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_full_scale_is_70_minutes(tmp_path):
    sc = ScenarioConfig()
    g = generate_run(sc, PROFILES, tmp_path / "r")
    files = scrape_files(g.streams)
    stamps = sorted({ts for _, ts, _ in files})
    assert len(stamps) == 71
    assert stamps[-1] - stamps[0] == 70 * 60_000
    assert {src for src, _, _ in files} == {"kepler", "cadvisor", "kubelet", "app"}
    assert (g.window.lo - sc.start_epoch_ms, sc.start_epoch_ms + 70 * 60_000 - g.window.hi) == (7 * 60_000, 3 * 60_000)


def test_byte_identical_for_same_seed(tmp_path):
    a = generate_run(FAST, PROFILES, tmp_path / "a")
    b = generate_run(FAST, PROFILES, tmp_path / "b")
    assert tree_digest(a.directory) == tree_digest(b.directory)
    c = generate_run(replace(FAST, seed=1), PROFILES, tmp_path / "c")
    assert tree_digest(a.directory) != tree_digest(c.directory)


def test_manifest_hashes(tmp_path):
    g = generate_run(FAST, PROFILES, tmp_path / "r")
    manifest = json.loads((g.directory / "manifest.json").read_text())
    for entry in manifest["files"]:
        data = (g.directory / entry["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]
        assert len(data) == entry["bytes"]


def test_refuses_non_empty(tmp_path):
    (tmp_path / "x").write_text("keep")
    with pytest.raises(SimulationError):
        generate_run(FAST, PROFILES, tmp_path)
    assert (tmp_path / "x").read_text() == "keep"


def test_ingest_recovers_ground_truth(tmp_path):
    g = generate_run(FAST, PROFILES, tmp_path / "r")
    pv = load_pv_sizes(g.directory / "pv_sizes.json")
    b = build_usage(load_scrape_dir(g.streams), DEFAULT_MAPPING, g.topology, g.window, pv)
    assert set(b.usage) == set(g.truth)
    for cid, truth in g.truth.items():
        got = b.usage[cid]
        for name in ("cpu_joules", "memory_joules", "network_bytes", "storage_bytes", "trace_count"):
            assert getattr(got, name) == pytest.approx(getattr(truth, name), rel=1e-9, abs=1e-6), (cid, name)
    assert b.diagnostics.unmapped["container_memory_working_set_bytes"] > 0
    assert b.diagnostics.unattributed == {"coredns-0/coredns"}


def test_noise_bounded_across_seeds(tmp_path):
    totals = {}
    for seed in range(3):
        g = generate_run(replace(FAST, seed=seed), PROFILES, tmp_path / str(seed))
        for cid, u in g.truth.items():
            totals.setdefault(cid, []).append(container_energy(u, INT).e_total)
    for cid, vals in totals.items():
        if max(vals) > 0:
            assert (max(vals) - min(vals)) / max(vals) < 0.02, cid


def test_trace_rate(tmp_path):
    sc = replace(FAST, trace_sampling_rate=0.5)
    g = generate_run(sc, PROFILES, tmp_path / "r")
    traces = sum(u.trace_count for u in g.truth.values())
    analysed_s = (g.window.hi - g.window.lo) / 1000
    assert traces == pytest.approx(500 * 1.5 * 6.25 * 0.5 * analysed_s, rel=1e-9)


def test_time_compression_keeps_rates(tmp_path):
    slow = ScenarioConfig(collection_interval_s=60)
    a = generate_run(slow, PROFILES, tmp_path / "a")
    b = generate_run(replace(slow, time_compression=10, collection_interval_s=6), PROFILES, tmp_path / "b")
    cid = "frontend-0/frontend"
    ratio = a.truth[cid].cpu_joules / b.truth[cid].cpu_joules
    assert ratio == pytest.approx(10, rel=0.01)


def test_mesh_adds_sidecars(tmp_path):
    g = generate_run(replace(FAST, mesh_enabled=True), PROFILES, tmp_path / "r")
    mesh = g.topology.members(MESH_SERVICE)
    assert "istiod-0/discovery" in mesh
    assert sum(c.endswith("/istio-proxy") for c in mesh) == 16
    off = generate_run(FAST, PROFILES, tmp_path / "off")
    assert off.topology.members(MESH_SERVICE) == []
    assert set(off.topology.services) == set(g.topology.services)


def test_stable_seed():
    assert stable_seed(1, "a", 0) == stable_seed(1, "a", 0) != stable_seed(1, "a", 1)


class TestScenario:
    def test_one_change_per_treatment(self):
        for kind, p in (("trace_sampling", 0.5), ("scrape_interval", 5), ("service_mesh", True)):
            t = apply_scenario_treatment(FAST, TreatmentSpec("t", kind, p))
            assert len(controlled_differences(FAST, t)) == 1

    def test_noop_rejected(self):
        with pytest.raises(ScenarioError):
            apply_scenario_treatment(FAST, TreatmentSpec("t", "trace_sampling", 0.01))

    def test_unknown_kind(self):
        with pytest.raises(ScenarioError):
            TreatmentSpec("t", "cpu_limit", 1)

    def test_custom_patch_not_simulated(self):
        with pytest.raises(ScenarioError):
            apply_scenario_treatment(FAST, TreatmentSpec("t", "custom-patch", None, {"target": "x"}))

    @pytest.mark.parametrize(
        "kw",
        [
            {"trace_sampling_rate": 0},
            {"trace_sampling_rate": 1.5},
            {"duration_min": 10},
            {"collection_interval_s": 11},
            {"time_compression": 0},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ScenarioError):
            replace(FAST, **kw)

    def test_patch_descriptors(self):
        d = patch_descriptor(TreatmentSpec("tracing-high", "trace_sampling", 0.5))
        assert d["value"] == 50.0 and d["name"] == "otel-collector"
        assert patch_descriptor(TreatmentSpec("m", "scrape_interval", 5))["value"] == "5s"
        assert patch_descriptor(TreatmentSpec("s", "service_mesh", True))["value"] == "enabled"
