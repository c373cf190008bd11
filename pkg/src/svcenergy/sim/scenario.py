"""Scenario configuration and single-change treatments."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Mapping

TRACE_SAMPLING = "trace_sampling"
SCRAPE_INTERVAL = "scrape_interval"
SERVICE_MESH = "service_mesh"
CUSTOM_PATCH = "custom-patch"
TREATMENT_KINDS = (TRACE_SAMPLING, SCRAPE_INTERVAL, SERVICE_MESH, CUSTOM_PATCH)

# fields a treatment may differ in; identity fields (name, seed, repetitions) excluded
CONTROLLED_FIELDS = ("trace_sampling_rate", "scrape_interval_s", "mesh_enabled")
_GRID_TOL = 1e-9


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "baseline"
    seed: int = 0
    duration_min: float = 70.0
    warmup_min: float = 7.0
    cooldown_min: float = 3.0
    virtual_users: int = 500
    requests_per_user_s: float = 1.5
    trace_sampling_rate: float = 0.01
    scrape_interval_s: float = 60.0
    mesh_enabled: bool = False
    repetitions: int = 3
    collection_interval_s: float = 60.0
    time_compression: float = 1.0
    start_epoch_ms: int = 1_750_000_000_000

    def __post_init__(self) -> None:
        if not 0 < self.trace_sampling_rate <= 1:
            raise ScenarioError("trace_sampling_rate must be in (0, 1]")
        if self.scrape_interval_s < 1:
            raise ScenarioError("scrape_interval_s must be >= 1")
        if self.collection_interval_s < 1:
            raise ScenarioError("collection_interval_s must be >= 1")
        if self.virtual_users < 0 or self.requests_per_user_s < 0:
            raise ScenarioError("load must be >= 0")
        if self.time_compression <= 0:
            raise ScenarioError("time_compression must be > 0")
        if self.warmup_min < 0 or self.cooldown_min < 0:
            raise ScenarioError("trims must be >= 0")
        if self.duration_min <= self.warmup_min + self.cooldown_min:
            raise ScenarioError("duration must exceed warmup + cooldown trims")
        if self.repetitions < 1:
            raise ScenarioError("repetitions must be >= 1")
        if self.start_epoch_ms <= 0:
            raise ScenarioError("start_epoch_ms must be > 0")
        steps = self.sim_duration_s / self.collection_interval_s
        if abs(steps - round(steps)) > _GRID_TOL * max(1.0, steps):
            raise ScenarioError("simulated duration must be a whole number of collection intervals")

    @property
    def base_request_rate(self) -> float:
        """Requests per second (open loop)."""
        return self.virtual_users * self.requests_per_user_s

    @property
    def sim_duration_s(self) -> float:
        return self.duration_min * 60.0 / self.time_compression

    @property
    def sim_warmup_s(self) -> float:
        return self.warmup_min * 60.0 / self.time_compression

    @property
    def sim_cooldown_s(self) -> float:
        return self.cooldown_min * 60.0 / self.time_compression

    @property
    def n_intervals(self) -> int:
        return int(round(self.sim_duration_s / self.collection_interval_s))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], **overrides: Any) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        merged = {**dict(data), **overrides}
        unknown = set(merged) - known
        if unknown:
            raise ScenarioError(f"unknown scenario fields {sorted(unknown)}")
        try:
            return cls(**merged)
        except TypeError as exc:
            raise ScenarioError(str(exc)) from exc


@dataclass(frozen=True)
class TreatmentSpec:
    name: str
    kind: str
    parameter: Any = None
    patch: Mapping[str, Any] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.name:
            raise ScenarioError("treatment needs a name")
        if self.kind not in TREATMENT_KINDS:
            raise ScenarioError(f"unknown treatment kind {self.kind!r}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TreatmentSpec":
        try:
            return cls(str(data["name"]), str(data["kind"]), data.get("parameter"), data.get("patch"))
        except KeyError as exc:
            raise ScenarioError(f"treatment missing {exc}") from exc

    def to_dict(self) -> dict:
        out = {"name": self.name, "kind": self.kind, "parameter": self.parameter}
        if self.patch is not None:
            out["patch"] = dict(self.patch)
        return out


def _as_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("on", "true", "yes", "enabled"):
        return True
    if isinstance(value, str) and value.lower() in ("off", "false", "no", "disabled"):
        return False
    raise ScenarioError(f"service_mesh parameter must be on/off, got {value!r}")


def apply_scenario_treatment(base: ScenarioConfig, treatment: TreatmentSpec) -> ScenarioConfig:
    """Copy of ``base`` with the single field the treatment controls changed."""
    kind, p = treatment.kind, treatment.parameter
    if kind == TRACE_SAMPLING:
        try:
            rate = float(p)
        except (TypeError, ValueError):
            raise ScenarioError(f"trace_sampling parameter must be a fraction, got {p!r}") from None
        if not (math.isfinite(rate) and 0 < rate <= 1):
            raise ScenarioError(f"trace_sampling parameter out of range (0, 1]: {p!r}")
        change = {"trace_sampling_rate": rate}
    elif kind == SCRAPE_INTERVAL:
        try:
            interval = float(p)
        except (TypeError, ValueError):
            raise ScenarioError(f"scrape_interval parameter must be seconds, got {p!r}") from None
        if not (math.isfinite(interval) and interval >= 1):
            raise ScenarioError(f"scrape_interval parameter must be >= 1 s: {p!r}")
        change = {"scrape_interval_s": interval}
    elif kind == SERVICE_MESH:
        change = {"mesh_enabled": _as_bool(p)}
    else:
        raise ScenarioError("custom-patch treatments target live clusters and cannot be simulated")
    (key, value), = change.items()
    if getattr(base, key) == value:
        raise ScenarioError(f"treatment {treatment.name!r} does not change {key}")
    return replace(base, name=treatment.name, **change)


def controlled_differences(a: ScenarioConfig, b: ScenarioConfig) -> list[str]:
    """Names of non-identity fields in which two scenarios differ."""
    skip = {"name", "seed", "repetitions"}
    return [f.name for f in fields(ScenarioConfig) if f.name not in skip and getattr(a, f.name) != getattr(b, f.name)]


def patch_descriptor(treatment: TreatmentSpec) -> dict:
    """Cluster change a live-mode operator would apply; never applied here."""
    if treatment.patch is not None:
        return {"treatment": treatment.name, **dict(treatment.patch)}
    kind, p = treatment.kind, treatment.parameter
    if kind == TRACE_SAMPLING:
        target = {
            "kind": "ConfigMap",
            "name": "otel-collector",
            "key_path": "processors.probabilistic_sampler.sampling_percentage",
            "value": float(p) * 100.0,
        }
    elif kind == SCRAPE_INTERVAL:
        target = {"kind": "ConfigMap", "name": "prometheus", "key_path": "global.scrape_interval", "value": f"{float(p):g}s"}
        target["restart"] = "prometheus"
    elif kind == SERVICE_MESH:
        target = {
            "kind": "Namespace",
            "name": "otel-demo",
            "key_path": "metadata.labels.istio-injection",
            "value": "enabled" if _as_bool(p) else "disabled",
        }
    else:
        raise ScenarioError("custom-patch treatment needs an explicit patch {target, key_path, value}")
    return {"treatment": treatment.name, **target}
