"""Per-service load coefficients and the simulated deployment they describe."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

from ..topology import AUXILIARY, PRIMARY, Container, ServiceTopology
from .scenario import ScenarioConfig

MESH_SERVICE = "service-mesh"
SIDECAR_NAME = "istio-proxy"
NAMESPACE = "otel-demo"
NODE = "node-0"


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class ServiceProfile:
    """Linear load model of one single-container service.

    Every rate is ``idle + per_request*R + per_trace*T + per_metric*M``
    with R requests/s, T sampled traces/s and M metric samples/s.
    """

    role: str
    cpu_idle_w: float = 0.0
    cpu_j_per_request: float = 0.0
    cpu_j_per_trace: float = 0.0
    cpu_j_per_metric: float = 0.0
    memory_idle_w: float = 0.0
    memory_j_per_request: float = 0.0
    memory_j_per_trace: float = 0.0
    memory_j_per_metric: float = 0.0
    net_idle_bps: float = 0.0
    net_bytes_per_request: float = 0.0
    net_bytes_per_trace: float = 0.0
    net_bytes_per_metric: float = 0.0
    rx_fraction: float = 0.5
    stored_idle_bps: float = 0.0
    stored_bytes_per_request: float = 0.0
    stored_bytes_per_trace: float = 0.0
    stored_bytes_per_metric: float = 0.0
    write_amplification: float = 1.0
    read_fraction: float = 0.1
    persistent_volume: bool = False
    mesh_injected: bool = False
    sidecar_compute_factor: float = 0.0
    sidecar_network_factor: float = 0.0
    noise_amplitude: float = 0.02
    counts: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.role not in (PRIMARY, AUXILIARY):
            raise ProfileError(f"unknown role {self.role!r}")
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not v >= 0:
                raise ProfileError(f"{f.name} must be >= 0, got {v!r}")
        if not self.rx_fraction <= 1 or not self.read_fraction <= 1:
            raise ProfileError("rx_fraction and read_fraction must be <= 1")
        if not self.noise_amplitude < 0.05:
            raise ProfileError("noise_amplitude must stay below 5%")
        bad = set(self.counts) - {"request_count", "trace_count", "metric_count"}
        if bad:
            raise ProfileError(f"unknown count kinds {sorted(bad)}")

    @classmethod
    def from_dict(cls, data: Mapping) -> "ServiceProfile":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ProfileError(f"unknown profile fields {sorted(unknown)}")
        kw = {}
        for k, v in data.items():
            if k == "counts":
                kw[k] = tuple(v)
            elif isinstance(v, (int, float)) and not isinstance(v, bool) and k != "role":
                kw[k] = float(v)
            else:
                kw[k] = v
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = list(self.counts)
        return d


@dataclass(frozen=True)
class WorkloadModel:
    """Deployment-wide drivers shared by all services."""

    trace_candidates_per_request: float = 6.25
    scraped_series: float = 131_000.0
    pushed_samples_per_s: float = 176.67

    def request_rate(self, scenario: ScenarioConfig) -> float:
        return scenario.base_request_rate

    def trace_rate(self, scenario: ScenarioConfig) -> float:
        return scenario.base_request_rate * self.trace_candidates_per_request * scenario.trace_sampling_rate

    def metric_rate(self, scenario: ScenarioConfig) -> float:
        return self.scraped_series / scenario.scrape_interval_s + self.pushed_samples_per_s


@dataclass(frozen=True)
class ProfileSet:
    services: Mapping[str, ServiceProfile]
    workload: WorkloadModel
    mesh_control_plane: ServiceProfile
    system: Mapping[str, ServiceProfile]
    source: str = "custom"

    @classmethod
    def from_dict(cls, data: Mapping, source: str = "custom") -> "ProfileSet":
        try:
            return cls(
                services={k: ServiceProfile.from_dict(v) for k, v in data["services"].items()},
                workload=WorkloadModel(**data.get("workload", {})),
                mesh_control_plane=ServiceProfile.from_dict(data["mesh_control_plane"]),
                system={k: ServiceProfile.from_dict(v) for k, v in data.get("system", {}).items()},
                source=source,
            )
        except (KeyError, TypeError) as exc:
            raise ProfileError(f"malformed profile set: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "workload": asdict(self.workload),
            "services": {k: v.to_dict() for k, v in sorted(self.services.items())},
            "mesh_control_plane": self.mesh_control_plane.to_dict(),
            "system": {k: v.to_dict() for k, v in sorted(self.system.items())},
        }


@lru_cache(maxsize=1)
def _shipped() -> ProfileSet:
    text = resources.files("svcenergy.data").joinpath("profiles.json").read_text()
    return ProfileSet.from_dict(json.loads(text), source="shipped")


def calibrate_default_profiles() -> ProfileSet:
    """The shipped coefficient set, fitted offline against the published per-group energies."""
    return _shipped()


def load_profiles(path: str | Path) -> ProfileSet:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ProfileError(f"{path}: {exc}") from exc
    return ProfileSet.from_dict(data, source=str(path))


# sim container placement: every service runs as one pod with one container
def container_id(service: str, name: str | None = None) -> str:
    return f"{service}-0/{name or service}"


def derive_topology(scenario: ScenarioConfig, profiles: ProfileSet) -> ServiceTopology:
    containers: dict[str, Container] = {}
    membership: dict[str, frozenset[str]] = {}
    services = {name: p.role for name, p in profiles.services.items()}
    services[MESH_SERVICE] = AUXILIARY
    for name in sorted(profiles.services):
        cid = container_id(name)
        containers[cid] = Container(cid, f"{name}-0", NODE, name)
        membership[cid] = frozenset({name})
        if scenario.mesh_enabled and profiles.services[name].mesh_injected:
            sid = container_id(name, SIDECAR_NAME)
            containers[sid] = Container(sid, f"{name}-0", NODE, SIDECAR_NAME)
            membership[sid] = frozenset({MESH_SERVICE})
    if scenario.mesh_enabled:
        cid = container_id("istiod", "discovery")
        containers[cid] = Container(cid, "istiod-0", NODE, "discovery")
        membership[cid] = frozenset({MESH_SERVICE})
    composed = {
        "primary": frozenset(s for s, r in services.items() if r == PRIMARY),
        "auxiliary": frozenset(s for s, r in services.items() if r == AUXILIARY),
    }
    return ServiceTopology(containers, services, membership, composed)
