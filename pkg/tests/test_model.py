from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import j_per_byte, network_kwh_per_gb, storage_kwh_per_gb
from svcenergy.model import (
    APPORTIONED,
    LITERAL,
    EnergyBreakdown,
    EnergyIntensityConfig,
    ModelError,
    SystemEnergy,
    UsageVector,
    container_energy,
    energy_per_trace,
    extrapolate_network_intensity,
    project_days,
    project_to_period,
    service_energy,
    storage_intensity_for_retention,
    total_energy,
    underestimation_ratio,
)
from svcenergy.topology import Container, ServiceTopology
from svcenergy.units import JOULES_PER_WH, j_to_wh, wh_to_j

INT = EnergyIntensityConfig.from_config({"reference_year": 2025, "retention_days": 30})


def usage(**kw) -> UsageVector:
    base = dict(cpu_joules=0.0, memory_joules=0.0, network_bytes=0.0, storage_bytes=0.0,
                window_start_ms=0.0, window_end_ms=3_600_000.0)
    base.update(kw)
    return UsageVector(**base)


def topo(spec: dict[str, tuple[str, list[str]]], composed=None) -> ServiceTopology:
    containers, membership, services = {}, {}, {}
    for sid, (role, cids) in spec.items():
        services[sid] = role
        for cid in cids:
            pod, name = cid.split("/")
            containers[cid] = Container(cid, pod, "n0", name)
            membership.setdefault(cid, set()).add(sid)
    return ServiceTopology(containers, services, {k: frozenset(v) for k, v in membership.items()}, composed or {})


class TestIntensities:
    def test_network_2025_exact(self):
        assert extrapolate_network_intensity(2025) == float(network_kwh_per_gb(2025)) == 0.001875

    def test_network_anchor_year(self):
        assert extrapolate_network_intensity(2015) == 0.06

    def test_no_backward_extrapolation(self):
        with pytest.raises(ModelError):
            extrapolate_network_intensity(2014)

    def test_storage_30_days(self):
        assert storage_intensity_for_retention(30) == pytest.approx(float(storage_kwh_per_gb(30)), rel=1e-15)
        assert abs(storage_intensity_for_retention(30) - 0.000378) < 1e-6

    def test_storage_zero_retention(self):
        assert storage_intensity_for_retention(0) == 0.0

    def test_storage_negative(self):
        with pytest.raises(ModelError):
            storage_intensity_for_retention(-1)

    def test_config_joules_per_byte(self):
        assert INT.network_intensity == pytest.approx(float(j_per_byte(network_kwh_per_gb(2025))), rel=1e-14)
        assert INT.storage_intensity == pytest.approx(float(j_per_byte(storage_kwh_per_gb(30))), rel=1e-14)

    @pytest.mark.parametrize(
        "cfg",
        [
            {"retention_days": 30},
            {"reference_year": 2025, "network_kwh_per_gb": 0.1, "retention_days": 30},
            {"reference_year": 2025},
            {"network_kwh_per_gb": "x", "retention_days": 30},
        ],
    )
    def test_config_rejected(self, cfg):
        with pytest.raises(ModelError):
            EnergyIntensityConfig.from_config(cfg)

    def test_storage_override(self):
        c = EnergyIntensityConfig.from_config({"network_kwh_per_gb": 0.002, "storage_kwh_per_gb": 0.001})
        assert c.storage_intensity == pytest.approx(3.6e-6)


class TestContainerEnergy:
    def test_zero_usage_zero_energy(self):
        assert container_energy(usage(), INT).e_total == 0.0

    def test_es_tracing_high_components(self):
        # 6.2 GB stored at 30-day retention, 15.632 GB moved at 1.875 Wh/GB
        b = container_energy(usage(network_bytes=15.632e9, storage_bytes=6.2e9), INT)
        assert j_to_wh(b.e_network) == pytest.approx(15.632 * 1.875, rel=1e-12)
        assert j_to_wh(b.e_storage) == pytest.approx(6.2 * 4.6 * 30 / 365, rel=1e-12)

    def test_compute_passthrough(self):
        b = container_energy(usage(cpu_joules=10.0, memory_joules=2.5), INT)
        assert (b.e_cpu, b.e_memory, b.e_compute) == (10.0, 2.5, 12.5)

    def test_negative_usage_rejected(self):
        with pytest.raises(ModelError):
            usage(cpu_joules=-1.0)

    def test_zero_window_rejected(self):
        with pytest.raises(ModelError):
            usage(window_end_ms=0.0)


class TestAggregation:
    def setup_method(self):
        self.t = topo({"a": ("primary", ["a-0/a", "a-1/a"]), "b": ("auxiliary", ["b-0/b"])})
        self.pc = {
            "a-0/a": EnergyBreakdown(1, 2, 3, 4),
            "a-1/a": EnergyBreakdown(10, 20, 30, 40),
            "b-0/b": EnergyBreakdown(100, 0, 0, 0),
        }

    def test_service_sum(self):
        assert service_energy(self.t, self.pc, "a") == EnergyBreakdown(11, 22, 33, 44)

    def test_missing_container_named(self):
        del self.pc["a-1/a"]
        with pytest.raises(ModelError, match="a-1/a"):
            service_energy(self.t, self.pc, "a")

    def test_apportioned_full_set_recovers_system(self):
        ps = {s: service_energy(self.t, self.pc, s) for s in self.t.services}
        sys = SystemEnergy(EnergyBreakdown(6, 0, 0, 0), APPORTIONED)
        whole = total_energy(self.t, ps, ["a", "b"], sys)
        assert whole.e_total == 110 + 100 + 6
        part = total_energy(self.t, ps, ["b"], sys)
        assert part.e_cpu == 100 + 3

    def test_literal_adds_over_subset(self):
        ps = {s: service_energy(self.t, self.pc, s) for s in self.t.services}
        sys = SystemEnergy(EnergyBreakdown(6, 0, 0, 0), LITERAL)
        assert total_energy(self.t, ps, ["b"], sys).e_cpu == 106
        assert total_energy(self.t, ps, ["a", "b"], sys).e_cpu == 111 + 3

    def test_literal_empty_subset(self):
        with pytest.raises(ModelError):
            total_energy(self.t, {}, [], SystemEnergy(attribution_mode=LITERAL))

    def test_unknown_mode(self):
        with pytest.raises(ModelError):
            SystemEnergy(attribution_mode="other")


class TestKpis:
    def test_ratio(self):
        assert underestimation_ratio(EnergyBreakdown(1, 1, 1, 1)) == 0.5

    def test_ratio_zero_total(self):
        with pytest.raises(ModelError):
            underestimation_ratio(EnergyBreakdown())

    def test_energy_per_trace(self):
        assert energy_per_trace(EnergyBreakdown(wh_to_j(137.62)), 8.4e6) == pytest.approx(137.62 / 8.4e6)

    def test_energy_per_trace_needs_traces(self):
        with pytest.raises(ModelError):
            energy_per_trace(EnergyBreakdown(1.0), 0)

    def test_projection_linear(self):
        u = usage(storage_bytes=6.2e9, network_rx_bytes=15.5e9)
        p = project_days(u, 30)
        assert p.storage_bytes == pytest.approx(6.2e9 * 720)
        assert p.window_s == 30 * 86400

    def test_projection_identity(self):
        u = usage(cpu_joules=5.0)
        assert project_to_period(u, u.window_s).cpu_joules == 5.0

    def test_projection_bad_period(self):
        with pytest.raises(ModelError):
            project_to_period(usage(), 0)


pos = st.floats(0, 1e12, allow_nan=False, allow_infinity=False)
usage_st = st.builds(
    usage, cpu_joules=pos, memory_joules=pos, network_bytes=pos, storage_bytes=pos,
)


@settings(max_examples=300, deadline=None)
@given(st.lists(usage_st, min_size=1, max_size=6), st.data())
def test_additivity_over_any_partition(us, data):
    cids = [f"c{i}-0/c" for i in range(len(us))]
    labels = data.draw(st.lists(st.sampled_from(["x", "y", "z"]), min_size=len(us), max_size=len(us)))
    spec: dict = {}
    for cid, lab in zip(cids, labels):
        spec.setdefault(lab, ("primary", []))[1].append(cid)
    t = topo(spec)
    pc = {cid: container_energy(u, INT) for cid, u in zip(cids, us)}
    ps = {s: service_energy(t, pc, s) for s in t.services}
    total = total_energy(t, ps, list(t.services))
    direct = math.fsum(b.e_total for b in pc.values())
    assert total.e_total == pytest.approx(direct, rel=1e-12, abs=1e-6)


@settings(max_examples=300, deadline=None)
@given(usage_st)
def test_components_nonnegative_and_ratio_bounded(u):
    b = container_energy(u, INT)
    assert min(b.e_cpu, b.e_memory, b.e_network, b.e_storage) >= 0
    if b.e_total > 0:
        assert 0.0 <= underestimation_ratio(b) <= 1.0


@settings(max_examples=200, deadline=None)
@given(usage_st, st.floats(1.0, 1e4))
def test_energy_scales_with_intensity(u, k):
    scaled = EnergyIntensityConfig(INT.network_intensity * k, INT.storage_intensity * k)
    a, b = container_energy(u, INT), container_energy(u, scaled)
    assert b.e_network == pytest.approx(a.e_network * k, rel=1e-12, abs=1e-300)
    assert b.e_compute == a.e_compute


def test_unit_constant():
    assert JOULES_PER_WH == 3600.0
