"""Turn metric series into per-container usage vectors."""

from __future__ import annotations

import fnmatch
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..model import NETWORK_DIRECTIONS, UsageVector
from ..topology import ServiceTopology
from .counters import (
    CounterSeries,
    InsufficientSamplesError,
    RunWindow,
    counter_delta_with_resets,
    gauge_delta,
)

SYSTEM_CONTAINER = "system"

COUNTER = "counter"
GAUGE = "gauge"

USAGE_FIELDS = (
    "cpu_joules",
    "memory_joules",
    "network_tx_bytes",
    "network_rx_bytes",
    "write_bytes",
    "read_bytes",
    "storage_bytes",
    "pv_bytes",
    "trace_count",
    "metric_count",
    "request_count",
)
# fields every container is expected to report; absence is noted
EXPECTED_FIELDS = ("cpu_joules", "memory_joules", "network_tx_bytes", "network_rx_bytes", "storage_bytes")

CONTAINER_LABELS = ("container", "container_name")
POD_LABELS = ("pod", "pod_name")


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class MappingRule:
    pattern: str
    field: str
    kind: str = COUNTER

    def __post_init__(self) -> None:
        if self.field not in USAGE_FIELDS:
            raise MappingError(f"unknown usage field {self.field!r}")
        if self.kind not in (COUNTER, GAUGE):
            raise MappingError(f"rule kind must be counter or gauge, got {self.kind!r}")

    def matches(self, name: str) -> bool:
        return fnmatch.fnmatchcase(name, self.pattern)


@dataclass(frozen=True)
class MetricMapping:
    rules: tuple[MappingRule, ...]

    def __post_init__(self) -> None:
        seen: dict[str, MappingRule] = {}
        for r in self.rules:
            prev = seen.get(r.pattern)
            if prev and (prev.field != r.field or prev.kind != r.kind):
                raise MappingError(f"pattern {r.pattern!r} bound to both {prev.field} and {r.field}")
            seen[r.pattern] = r

    def match(self, name: str) -> MappingRule | None:
        hits = {(r.field, r.kind): r for r in self.rules if r.matches(name)}
        if len(hits) > 1:
            raise MappingError(f"metric {name!r} matches rules for {sorted(f for f, _ in hits)}")
        return next(iter(hits.values()), None)

    @property
    def exact_names(self) -> list[str]:
        return sorted({r.pattern for r in self.rules if not any(c in r.pattern for c in "*?[")})

    @classmethod
    def from_config(cls, rules: Sequence[Mapping]) -> "MetricMapping":
        try:
            return cls(tuple(MappingRule(str(r["metric"]), str(r["field"]), str(r.get("kind", COUNTER))) for r in rules))
        except (KeyError, TypeError) as exc:
            raise MappingError(f"malformed mapping rule: {exc}") from exc

    def to_config(self) -> list[dict]:
        return [{"metric": r.pattern, "field": r.field, "kind": r.kind} for r in self.rules]


DEFAULT_MAPPING = MetricMapping(
    (
        MappingRule("kepler_container_package_joules_total", "cpu_joules"),
        MappingRule("kepler_container_dram_joules_total", "memory_joules"),
        MappingRule("container_network_transmit_bytes_total", "network_tx_bytes"),
        MappingRule("container_network_receive_bytes_total", "network_rx_bytes"),
        MappingRule("container_fs_writes_bytes_total", "write_bytes"),
        MappingRule("container_fs_reads_bytes_total", "read_bytes"),
        MappingRule("container_fs_usage_bytes", "storage_bytes", GAUGE),
        MappingRule("kubelet_volume_stats_used_bytes", "pv_bytes", GAUGE),
        MappingRule("jaeger_collector_traces_saved_total", "trace_count"),
        MappingRule("prometheus_tsdb_head_samples_appended_total", "metric_count"),
        MappingRule("http_server_requests_total", "request_count"),
    )
)


@dataclass
class Diagnostics:
    series_seen: int = 0
    resets: dict[str, int] = field(default_factory=dict)
    unmapped: Counter = field(default_factory=Counter)
    unattributed: set[str] = field(default_factory=set)
    missing: list[str] = field(default_factory=list)
    insufficient: list[str] = field(default_factory=list)
    negative_gauges: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def total_resets(self) -> int:
        return sum(self.resets.values())

    def to_dict(self) -> dict:
        return {
            "series_seen": self.series_seen,
            "total_resets": self.total_resets,
            "resets": dict(sorted(self.resets.items())),
            "unmapped_metrics": dict(sorted(self.unmapped.items())),
            "unmapped_series": sum(self.unmapped.values()),
            "unattributed_containers": sorted(self.unattributed),
            "missing_fields": sorted(self.missing),
            "insufficient_samples": sorted(self.insufficient),
            "negative_gauges": sorted(self.negative_gauges),
            "notes": list(self.notes),
        }


@dataclass
class UsageBuild:
    usage: dict[str, UsageVector]
    diagnostics: Diagnostics
    fields_seen: dict[str, set[str]]


def _first_label(series: CounterSeries, keys: Iterable[str]) -> str | None:
    for k in keys:
        v = series.label(k)
        if v is not None:
            return v
    return None


def _series_id(series: CounterSeries) -> str:
    labels = ",".join(f"{k}={v}" for k, v in series.labels)
    return f"{series.metric_name}{{{labels}}}"


def network_bytes(tx: float, rx: float, direction: str) -> float:
    if direction == "tx":
        return tx
    if direction == "rx":
        return rx
    return tx + rx


def build_usage(
    series: Iterable[CounterSeries],
    mapping: MetricMapping,
    topology: ServiceTopology,
    window: RunWindow,
    pv_sizes: Mapping[str, float] | None = None,
    network_direction: str = "both",
) -> UsageBuild:
    """Per-container usage over the trimmed window.

    Storage precedence: recorded PV size, then PV gauge growth, then
    filesystem usage growth. Series whose labels do not resolve in the
    topology are charged to the synthetic ``system`` container.
    """
    if network_direction not in NETWORK_DIRECTIONS:
        raise MappingError(f"network_direction must be one of {NETWORK_DIRECTIONS}")
    diag = Diagnostics()
    sums: dict[str, dict[str, float]] = {}
    seen: dict[str, set[str]] = {}

    for s in sorted(series, key=lambda s: s.key):
        diag.series_seen += 1
        rule = mapping.match(s.metric_name)
        if rule is None:
            diag.unmapped[s.metric_name] += 1
            continue
        pod = _first_label(s, POD_LABELS)
        name = _first_label(s, CONTAINER_LABELS)
        cid = topology.resolve(pod, name)
        if cid is None:
            diag.unattributed.add(f"{pod}/{name}")
            cid = SYSTEM_CONTAINER
        try:
            if rule.kind == COUNTER:
                delta, resets = counter_delta_with_resets(s, window)
                if resets:
                    diag.resets[_series_id(s)] = resets
            else:
                delta = gauge_delta(s, window)
                if delta < 0:
                    diag.negative_gauges.append(_series_id(s))
                    delta = 0.0
        except InsufficientSamplesError:
            diag.insufficient.append(_series_id(s))
            continue
        bucket = sums.setdefault(cid, dict.fromkeys(USAGE_FIELDS, 0.0))
        bucket[rule.field] += delta
        seen.setdefault(cid, set()).add(rule.field)

    pv_sizes = dict(pv_sizes or {})
    for cid in sorted(set(pv_sizes) - set(topology.containers)):
        diag.notes.append(f"pv size recorded for unknown container {cid}")

    usage: dict[str, UsageVector] = {}
    for cid in sorted(set(topology.containers) | set(sums)):
        f = sums.get(cid, dict.fromkeys(USAGE_FIELDS, 0.0))
        got = seen.get(cid, set())
        if cid != SYSTEM_CONTAINER:
            for name in EXPECTED_FIELDS:
                if name not in got and not (name == "storage_bytes" and ("pv_bytes" in got or cid in pv_sizes)):
                    diag.missing.append(f"{cid}:{name}")
        if cid in pv_sizes:
            stored = float(pv_sizes[cid])
        elif "pv_bytes" in got:
            stored = f["pv_bytes"]
        else:
            stored = f["storage_bytes"]
        usage[cid] = UsageVector(
            cpu_joules=f["cpu_joules"],
            memory_joules=f["memory_joules"],
            network_bytes=network_bytes(f["network_tx_bytes"], f["network_rx_bytes"], network_direction),
            storage_bytes=stored,
            window_start_ms=window.lo,
            window_end_ms=window.hi,
            trace_count=f["trace_count"],
            metric_count=f["metric_count"],
            request_count=f["request_count"],
            network_tx_bytes=f["network_tx_bytes"],
            network_rx_bytes=f["network_rx_bytes"],
            write_bytes=f["write_bytes"],
            read_bytes=f["read_bytes"],
        )
    return UsageBuild(usage, diag, seen)
