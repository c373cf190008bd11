"""Deterministic scrape-stream generation for a simulated deployment."""

from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import kernels
from ..ingest.counters import RunWindow
from ..ingest.exposition import format_value
from ..model import UsageVector
from ..topology import ServiceTopology
from .profiles import NAMESPACE, SIDECAR_NAME, ProfileSet, ServiceProfile, container_id, derive_topology
from .scenario import ScenarioConfig

QUANTITIES = (
    "cpu_joules",
    "memory_joules",
    "network_tx_bytes",
    "network_rx_bytes",
    "write_bytes",
    "read_bytes",
    "fs_growth",
    "pv_growth",
    "request_count",
    "trace_count",
    "metric_count",
)
_Q = {name: i for i, name in enumerate(QUANTITIES)}
_COUNTS = ("request_count", "trace_count", "metric_count")
# counter value at the first scrape: uniform(lo, hi) per quantity; PV and counts start empty
_OFFSET_RANGE = {
    "cpu_joules": (1e3, 1e6),
    "memory_joules": (1e2, 1e5),
    "network_tx_bytes": (1e6, 1e9),
    "network_rx_bytes": (1e6, 1e9),
    "write_bytes": (1e6, 1e9),
    "read_bytes": (1e6, 1e9),
    "fs_growth": (1e7, 1e8),
}

_METRICS = {
    "kepler": (
        ("kepler_container_package_joules_total", "cpu_joules"),
        ("kepler_container_dram_joules_total", "memory_joules"),
    ),
    "cadvisor": (
        ("container_network_transmit_bytes_total", "network_tx_bytes"),
        ("container_network_receive_bytes_total", "network_rx_bytes"),
        ("container_fs_writes_bytes_total", "write_bytes"),
        ("container_fs_reads_bytes_total", "read_bytes"),
        ("container_fs_usage_bytes", "fs_growth"),
        ("container_memory_working_set_bytes", None),
    ),
    "kubelet": (("kubelet_volume_stats_used_bytes", "pv_growth"),),
    "app": (
        ("http_server_requests_total", "request_count"),
        ("jaeger_collector_traces_saved_total", "trace_count"),
        ("prometheus_tsdb_head_samples_appended_total", "metric_count"),
    ),
}
_GAUGES = {"container_fs_usage_bytes", "container_memory_working_set_bytes", "kubelet_volume_stats_used_bytes"}


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class Entity:
    """One emitting container: its labels, rates per second and noise bound."""

    pod: str
    container: str
    namespace: str
    rates: np.ndarray
    amplitude: float
    persistent_volume: bool
    counts: tuple[str, ...]

    @property
    def id(self) -> str:
        return f"{self.pod}/{self.container}"


@dataclass
class GeneratedRun:
    directory: Path
    topology: ServiceTopology
    window: RunWindow
    truth: dict[str, UsageVector]
    pv_sizes: dict[str, float]

    @property
    def streams(self) -> Path:
        return self.directory / "streams"


def stable_seed(*parts: object) -> int:
    digest = hashlib.blake2b(":".join(str(p) for p in parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _rates(p: ServiceProfile, r: float, t: float, m: float) -> np.ndarray:
    cpu = p.cpu_idle_w + p.cpu_j_per_request * r + p.cpu_j_per_trace * t + p.cpu_j_per_metric * m
    mem = p.memory_idle_w + p.memory_j_per_request * r + p.memory_j_per_trace * t + p.memory_j_per_metric * m
    net = p.net_idle_bps + p.net_bytes_per_request * r + p.net_bytes_per_trace * t + p.net_bytes_per_metric * m
    stored = p.stored_idle_bps + p.stored_bytes_per_request * r + p.stored_bytes_per_trace * t + p.stored_bytes_per_metric * m
    write = stored * p.write_amplification
    out = np.zeros(len(QUANTITIES))
    out[_Q["cpu_joules"]] = cpu
    out[_Q["memory_joules"]] = mem
    out[_Q["network_tx_bytes"]] = net * (1.0 - p.rx_fraction)
    out[_Q["network_rx_bytes"]] = net * p.rx_fraction
    out[_Q["write_bytes"]] = write
    out[_Q["read_bytes"]] = write * p.read_fraction
    out[_Q["pv_growth" if p.persistent_volume else "fs_growth"]] = stored
    drivers = {"request_count": r, "trace_count": t, "metric_count": m}
    for c in p.counts:
        out[_Q[c]] = drivers[c]
    return out


def _sidecar_rates(host: np.ndarray, p: ServiceProfile) -> np.ndarray:
    out = np.zeros(len(QUANTITIES))
    out[_Q["cpu_joules"]] = host[_Q["cpu_joules"]] * p.sidecar_compute_factor
    out[_Q["memory_joules"]] = host[_Q["memory_joules"]] * p.sidecar_compute_factor
    net = (host[_Q["network_tx_bytes"]] + host[_Q["network_rx_bytes"]]) * p.sidecar_network_factor
    out[_Q["network_tx_bytes"]] = out[_Q["network_rx_bytes"]] = net / 2.0
    return out


def plan_entities(scenario: ScenarioConfig, profiles: ProfileSet) -> list[Entity]:
    w = profiles.workload
    r, t, m = w.request_rate(scenario), w.trace_rate(scenario), w.metric_rate(scenario)
    out: list[Entity] = []
    for name in sorted(profiles.services):
        p = profiles.services[name]
        rates = _rates(p, r, t, m)
        pod = f"{name}-0"
        out.append(Entity(pod, name, NAMESPACE, rates, p.noise_amplitude, p.persistent_volume, p.counts))
        if scenario.mesh_enabled and p.mesh_injected:
            out.append(Entity(pod, SIDECAR_NAME, NAMESPACE, _sidecar_rates(rates, p), p.noise_amplitude, False, ()))
    if scenario.mesh_enabled:
        cp = profiles.mesh_control_plane
        out.append(Entity("istiod-0", "discovery", "istio-system", _rates(cp, r, t, m), cp.noise_amplitude, False, ()))
    for name in sorted(profiles.system):
        sp = profiles.system[name]
        out.append(Entity(f"{name}-0", name, "kube-system", _rates(sp, r, t, m), sp.noise_amplitude, False, ()))
    return out


def _simulate_entity(entity: Entity, scenario: ScenarioConfig) -> np.ndarray:
    rng = np.random.default_rng(stable_seed(scenario.seed, entity.id))
    n_t = scenario.n_intervals
    noise = rng.uniform(-1.0, 1.0, size=(len(QUANTITIES), n_t))
    offsets = np.zeros(len(QUANTITIES))
    for q, (lo, hi) in _OFFSET_RANGE.items():
        offsets[_Q[q]] = rng.uniform(lo, hi)
    amplitude = np.full(len(QUANTITIES), entity.amplitude)
    for c in _COUNTS:
        amplitude[_Q[c]] = 0.0
    return kernels.cumulative_counters(entity.rates, noise, amplitude, scenario.collection_interval_s, offsets)


def _window_increase(cum: np.ndarray, lo_ticks: float, hi_ticks: float) -> np.ndarray:
    grid = np.arange(cum.shape[1], dtype=np.float64)
    return np.array([np.interp(hi_ticks, grid, row) - np.interp(lo_ticks, grid, row) for row in cum])


def _truth(delta: np.ndarray, pv: bool, window: RunWindow) -> UsageVector:
    g = {q: float(max(delta[i], 0.0)) for i, q in enumerate(QUANTITIES)}
    return UsageVector(
        cpu_joules=g["cpu_joules"],
        memory_joules=g["memory_joules"],
        network_bytes=g["network_tx_bytes"] + g["network_rx_bytes"],
        storage_bytes=g["pv_growth"] if pv else g["fs_growth"],
        window_start_ms=window.lo,
        window_end_ms=window.hi,
        trace_count=g["trace_count"],
        metric_count=g["metric_count"],
        request_count=g["request_count"],
        network_tx_bytes=g["network_tx_bytes"],
        network_rx_bytes=g["network_rx_bytes"],
        write_bytes=g["write_bytes"],
        read_bytes=g["read_bytes"],
    )


def _labels(source: str, e: Entity, metric: str) -> str:
    if source == "kepler":
        return f'container_name="{e.container}",container_namespace="{e.namespace}",pod_name="{e.pod}"'
    extra = ""
    if metric.startswith("container_network"):
        extra = ',interface="eth0"'
    elif metric.startswith("container_fs"):
        extra = ',device="/dev/sda"'
    elif source == "kubelet":
        extra = f',persistentvolumeclaim="data-{e.pod}"'
    return f'container="{e.container}"{extra},namespace="{e.namespace}",pod="{e.pod}"'


def _emits(source: str, e: Entity, q: str | None) -> bool:
    if source == "kubelet":
        return e.persistent_volume
    if source == "app":
        return q in e.counts
    return True


def _write_streams(streams: Path, scenario: ScenarioConfig, entities: list[Entity], cums: list[np.ndarray]) -> None:
    n_ticks = scenario.n_intervals + 1
    dt_ms = scenario.collection_interval_s * 1000.0
    for source, metrics in _METRICS.items():
        blocks: list[tuple[str, list[str] | None, list[str]]] = []
        for metric, q in metrics:
            heads: list[str] = []
            columns: list[list[str]] = []
            for e, cum in zip(entities, cums):
                if not _emits(source, e, q):
                    continue
                heads.append(f"{metric}{{{_labels(source, e, metric)}}} ")
                if q is None:
                    # constant working set, present only so ingest has something unmapped to report
                    columns.append([format_value(float(stable_seed(e.id) % 900 + 100) * 1e6)] * n_ticks)
                else:
                    columns.append([format_value(v) for v in cum[_Q[q]].tolist()])
            if heads:
                kind = "gauge" if metric in _GAUGES else "counter"
                blocks.append((f"# TYPE {metric} {kind}", heads, columns))
        if not blocks:
            continue
        for k in range(n_ticks):
            ts = int(round(scenario.start_epoch_ms + k * dt_ms))
            lines: list[str] = []
            for type_line, heads, columns in blocks:
                lines.append(type_line)
                lines.extend(h + col[k] for h, col in zip(heads, columns))
            (streams / f"{source}-{ts}.prom").write_text("\n".join(lines) + "\n")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump(path: Path, data: object) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def generate_run(
    scenario: ScenarioConfig,
    profiles: ProfileSet,
    out_dir: str | Path,
    overwrite: bool = False,
) -> GeneratedRun:
    """Write scrape files, PV sizes, ground truth and a manifest for one run.

    Identical scenario (including seed) and profiles give byte-identical
    output.
    """
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()):
        if not overwrite:
            raise SimulationError(f"output directory {out} is not empty")
        shutil.rmtree(out)
    streams = out / "streams"
    streams.mkdir(parents=True, exist_ok=True)

    topology = derive_topology(scenario, profiles)
    window = RunWindow(
        scenario.start_epoch_ms,
        scenario.start_epoch_ms + scenario.sim_duration_s * 1000.0,
        scenario.sim_warmup_s * 1000.0,
        scenario.sim_cooldown_s * 1000.0,
    )
    entities = plan_entities(scenario, profiles)
    for e in entities:
        if e.id not in topology.containers and e.namespace != "kube-system":
            raise SimulationError(f"entity {e.id} missing from derived topology")
    cums = [_simulate_entity(e, scenario) for e in entities]
    _write_streams(streams, scenario, entities, cums)

    dt = scenario.collection_interval_s
    lo_ticks = scenario.sim_warmup_s / dt
    hi_ticks = (scenario.sim_duration_s - scenario.sim_cooldown_s) / dt
    truth: dict[str, UsageVector] = {}
    system_delta = np.zeros(len(QUANTITIES))
    has_system = False
    pv_sizes: dict[str, float] = {}
    for e, cum in zip(entities, cums):
        delta = _window_increase(cum, lo_ticks, hi_ticks)
        if e.id in topology.containers:
            truth[e.id] = _truth(delta, e.persistent_volume, window)
            if e.persistent_volume:
                pv_sizes[e.id] = truth[e.id].storage_bytes
        else:
            system_delta = system_delta + delta
            has_system = True
    if has_system:
        truth["system"] = _truth(system_delta, False, window)

    _dump(out / "pv_sizes.json", dict(sorted(pv_sizes.items())))
    _dump(
        out / "ground_truth.json",
        {
            "scenario": scenario.to_dict(),
            "window": {"run_start_ms": window.run_start_ms, "run_end_ms": window.run_end_ms,
                       "warmup_ms": window.warmup_ms, "cooldown_ms": window.cooldown_ms},
            "usage": {cid: u.to_dict() for cid, u in sorted(truth.items())},
        },
    )
    _dump(out / "topology.json", topology.to_dict())
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    _dump(
        out / "manifest.json",
        {
            "scenario": scenario.name,
            "seed": scenario.seed,
            "files": [
                {"path": p.relative_to(out).as_posix(), "bytes": p.stat().st_size, "sha256": _digest(p)} for p in files
            ],
        },
    )
    return GeneratedRun(out, topology, window, truth, pv_sizes)
