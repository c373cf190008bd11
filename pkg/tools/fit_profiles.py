"""Fit the shipped service profiles and write ``src/svcenergy/data/profiles.json``.

Each anchor gives a quantity's hourly value at full scale (500 users, one
hour) in the baseline and in the scenario that moves it: higher trace
sampling for trace-driven quantities, shorter scrape interval for
metric-driven ones. One hour at 500 users is fixed for every scenario, so
the idle and per-request parts cannot be told apart from the anchors; the
``idle`` share splits them.

Run from the repository root:  python tools/fit_profiles.py
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

from svcenergy.model import extrapolate_network_intensity, storage_intensity_for_retention
from svcenergy.sim.profiles import ServiceProfile, WorkloadModel
from svcenergy.sim.scenario import ScenarioConfig

OUT = Path(__file__).resolve().parents[1] / "src" / "svcenergy" / "data" / "profiles.json"

WH = 3600.0
NET_WH_PER_GB = extrapolate_network_intensity(2025) * 1000.0
STORE_WH_PER_GB = storage_intensity_for_retention(30) * 1000.0
MEMORY_SHARE = 0.15
NOISE = 0.02
SIDECAR_COMPUTE = 0.146
SIDECAR_NETWORK = 0.02


def net_bytes(wh: float) -> float:
    return wh / NET_WH_PER_GB * 1e9


WORKLOAD = WorkloadModel()
BASE = ScenarioConfig()
TRACING_HIGH = replace(BASE, trace_sampling_rate=0.5)
MONITORING_HIGH = replace(BASE, scrape_interval_s=5.0)
R = WORKLOAD.request_rate(BASE)
T_BASE, T_HIGH = WORKLOAD.trace_rate(BASE) * 3600, WORKLOAD.trace_rate(TRACING_HIGH) * 3600
M_BASE, M_HIGH = WORKLOAD.metric_rate(BASE) * 3600, WORKLOAD.metric_rate(MONITORING_HIGH) * 3600

# (compute Wh, network bytes, stored bytes): baseline value, optional "trace" or "metric" response
PRIMARY_SPLIT = {
    "frontend": (31.0, 4.0),
    "frontend-proxy": (5.0, 1.2),
    "checkout": (2.4, 0.5),
    "product-catalog": (3.0, 0.5),
    "recommendation": (3.2, 0.4),
    "ad": (2.6, 0.3),
    "cart": (2.2, 0.4),
    "currency": (1.4, 0.3),
    "shipping": (1.0, 0.2),
    "payment": (1.2, 0.2),
    "email": (1.0, 0.1),
    "quote": (0.8, 0.1),
    "accounting": (1.6, 0.15),
    "fraud-detection": (1.8, 0.15),
}

ANCHORS: dict[str, dict] = {
    name: {
        "role": "primary",
        "compute": {"base": c, "idle": 0.35},
        "network": {"base": net_bytes(n), "idle": 0.0},
        "stored": {"base": 2e6, "idle": 1.0},
        "rx_fraction": 0.5,
        "mesh_injected": True,
        "counts": ["request_count"] if name == "frontend-proxy" else [],
    }
    for name, (c, n) in PRIMARY_SPLIT.items()
}
ANCHORS.update(
    {
        "elasticsearch": {
            "role": "auxiliary",
            "compute": {"base": 0.85, "trace": 10.6, "idle": 0.8},
            "network": {"base": net_bytes(0.6), "trace": 15.632e9, "idle": 0.5},
            "stored": {"base": 0.2646e9, "trace": 6.2e9, "idle": 1.0},
            "rx_fraction": 0.995,
            "write_amplification": 66.0 / 6.2,
            "persistent_volume": True,
        },
        "jaeger": {
            "role": "auxiliary",
            "compute": {"base": 0.33, "trace": 4.5, "idle": 0.8},
            "network": {"base": net_bytes(0.09), "trace": net_bytes(0.7), "idle": 0.5},
            "stored": {"base": 5e6, "idle": 1.0},
            "rx_fraction": 0.45,
            "mesh_injected": True,
            "counts": ["trace_count"],
        },
        "otel-collector": {
            "role": "auxiliary",
            "compute": {"base": 4.3, "trace": 4.4, "idle": 0.35},
            "network": {"base": net_bytes(10.7), "idle": 0.05},
            "stored": {"base": 1e6, "idle": 1.0},
            "rx_fraction": 0.55,
            "mesh_injected": True,
        },
        "prometheus": {
            "role": "auxiliary",
            "compute": {"base": 0.3, "metric": 0.5, "idle": 1.0},
            "network": {"base": 0.117e9, "metric": 1.3e9, "idle": 1.0},
            "stored": {"base": 61.5e6, "metric": 680e6, "idle": 1.0},
            "rx_fraction": 0.97,
            "counts": ["metric_count"],
        },
        "other": {
            "role": "auxiliary",
            "compute": {"base": 5.0, "idle": 0.6},
            "network": {"base": net_bytes(0.1), "idle": 0.6},
            "stored": {"base": 10.85e9, "idle": 0.6},
            "rx_fraction": 0.5,
            "persistent_volume": True,
        },
    }
)
MESH_CONTROL_PLANE = {
    "role": "auxiliary",
    "compute": {"base": 0.5, "idle": 1.0},
    "network": {"base": net_bytes(0.05), "idle": 1.0},
    "stored": {"base": 0.0, "idle": 1.0},
}
SYSTEM = {
    "coredns": {
        "role": "auxiliary",
        "compute": {"base": 0.15, "idle": 1.0},
        "network": {"base": net_bytes(0.01), "idle": 1.0},
        "stored": {"base": 0.0, "idle": 1.0},
    }
}


def solve(anchor: dict) -> tuple[float, float, float, float]:
    """Hourly anchor -> (idle per s, per request, per trace, per metric)."""
    base = anchor["base"]
    per_trace = (anchor["trace"] - base) / (T_HIGH - T_BASE) if "trace" in anchor else 0.0
    per_metric = (anchor["metric"] - base) / (M_HIGH - M_BASE) if "metric" in anchor else 0.0
    fixed = base - per_trace * T_BASE - per_metric * M_BASE
    if fixed < -1e-9 * abs(base) or per_trace < 0 or per_metric < 0:
        raise ValueError(f"anchor {anchor} needs a negative coefficient")
    fixed = max(fixed, 0.0)
    idle = anchor["idle"] * fixed / 3600.0
    per_request = (1.0 - anchor["idle"]) * fixed / (R * 3600.0) if R else 0.0
    return idle, per_request, per_trace, per_metric


def profile(spec: dict) -> dict:
    c_idle, c_req, c_tr, c_met = (x * WH for x in solve(spec["compute"]))
    n_idle, n_req, n_tr, n_met = solve(spec["network"])
    s_idle, s_req, s_tr, s_met = solve(spec["stored"])
    cpu = 1.0 - MEMORY_SHARE
    injected = spec.get("mesh_injected", False)
    p = ServiceProfile(
        role=spec["role"],
        cpu_idle_w=c_idle * cpu,
        cpu_j_per_request=c_req * cpu,
        cpu_j_per_trace=c_tr * cpu,
        cpu_j_per_metric=c_met * cpu,
        memory_idle_w=c_idle * MEMORY_SHARE,
        memory_j_per_request=c_req * MEMORY_SHARE,
        memory_j_per_trace=c_tr * MEMORY_SHARE,
        memory_j_per_metric=c_met * MEMORY_SHARE,
        net_idle_bps=n_idle,
        net_bytes_per_request=n_req,
        net_bytes_per_trace=n_tr,
        net_bytes_per_metric=n_met,
        rx_fraction=spec.get("rx_fraction", 0.5),
        stored_idle_bps=s_idle,
        stored_bytes_per_request=s_req,
        stored_bytes_per_trace=s_tr,
        stored_bytes_per_metric=s_met,
        write_amplification=spec.get("write_amplification", 1.5),
        persistent_volume=spec.get("persistent_volume", False),
        mesh_injected=injected,
        sidecar_compute_factor=SIDECAR_COMPUTE if injected else 0.0,
        sidecar_network_factor=SIDECAR_NETWORK if injected else 0.0,
        noise_amplitude=NOISE,
        counts=tuple(spec.get("counts", ())),
    )
    return p.to_dict()


def main() -> None:
    data = {
        "workload": {
            "trace_candidates_per_request": WORKLOAD.trace_candidates_per_request,
            "scraped_series": WORKLOAD.scraped_series,
            "pushed_samples_per_s": WORKLOAD.pushed_samples_per_s,
        },
        "services": {name: profile(spec) for name, spec in sorted(ANCHORS.items())},
        "mesh_control_plane": profile(MESH_CONTROL_PLANE),
        "system": {name: profile(spec) for name, spec in sorted(SYSTEM.items())},
    }
    OUT.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
