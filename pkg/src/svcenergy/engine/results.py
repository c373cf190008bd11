"""Energy evaluation of one run and its archive representation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ..ingest.usage import SYSTEM_CONTAINER
from ..model import (
    DOUBLE_COUNTING_DISCLOSURE,
    EnergyBreakdown,
    EnergyIntensityConfig,
    ModelError,
    SystemEnergy,
    UsageVector,
    container_energy,
    energy_per_trace,
    project_days,
    service_energy,
    total_energy,
    underestimation_ratio,
)
from ..topology import AUXILIARY, PRIMARY, ServiceTopology

PROJECTION_DAYS = 30.0
ALL_GROUP = "all"
PROJECTED_FIELDS = ("storage_bytes", "network_bytes", "network_rx_bytes", "network_tx_bytes", "write_bytes")


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"


def sum_usage(items: list[UsageVector], start_ms: float, end_ms: float) -> UsageVector:
    totals = dict.fromkeys(UsageVector.CUMULATIVE, 0.0)
    for u in items:
        for name in UsageVector.CUMULATIVE:
            totals[name] += getattr(u, name)
    return UsageVector(window_start_ms=start_ms, window_end_ms=end_ms, **totals)


def group_members(topology: ServiceTopology) -> dict[str, list[str]]:
    groups = {
        PRIMARY: sorted(topology.composed_services.get(PRIMARY, topology.services_with_role(PRIMARY))),
        AUXILIARY: sorted(topology.composed_services.get(AUXILIARY, topology.services_with_role(AUXILIARY))),
    }
    for name, members in topology.composed_services.items():
        groups.setdefault(name, sorted(members))
    groups[ALL_GROUP] = sorted(topology.services)
    return groups


@dataclass
class Evaluation:
    containers: dict[str, EnergyBreakdown]
    services: dict[str, EnergyBreakdown]
    groups: dict[str, EnergyBreakdown]
    system: EnergyBreakdown
    kpis: dict[str, float | None]
    projections: dict[str, dict[str, float]]


def evaluate(
    usage: Mapping[str, UsageVector],
    topology: ServiceTopology,
    intensities: EnergyIntensityConfig,
    attribution_mode: str,
) -> Evaluation:
    containers = {cid: container_energy(u, intensities) for cid, u in sorted(usage.items())}
    services = {sid: service_energy(topology, containers, sid) for sid in sorted(topology.services)}
    system = containers.get(SYSTEM_CONTAINER, EnergyBreakdown())
    sys_energy = SystemEnergy(system, attribution_mode)
    groups = {
        name: total_energy(topology, services, members, sys_energy) if members or attribution_mode != "literal" else EnergyBreakdown()
        for name, members in sorted(group_members(topology).items())
    }
    everything = groups[ALL_GROUP]
    traces = sum(u.trace_count for u in usage.values())

    def ratio(b: EnergyBreakdown) -> float | None:
        return underestimation_ratio(b) if b.e_total > 0 else None

    kpis: dict[str, float | None] = {
        "trace_count": traces,
        "metric_count": sum(u.metric_count for u in usage.values()),
        "request_count": sum(u.request_count for u in usage.values()),
        "wh_per_trace": energy_per_trace(everything, traces) if traces > 0 else None,
        "underestimation_ratio_auxiliary": ratio(groups[AUXILIARY]),
        "underestimation_ratio_all": ratio(everything),
    }

    some = next(iter(usage.values()), None)
    projections: dict[str, dict[str, float]] = {}
    if some is not None:
        for sid in sorted(topology.services):
            members = [usage[c] for c in topology.members(sid) if c in usage]
            total = sum_usage(members, some.window_start_ms, some.window_end_ms)
            projected = project_days(total, PROJECTION_DAYS)
            row = {name: getattr(projected, name) for name in PROJECTED_FIELDS}
            row["e_total_j"] = container_energy(projected, intensities).e_total
            projections[sid] = row
    return Evaluation(containers, services, groups, system, kpis, projections)


@dataclass
class RunResult:
    scenario_name: str
    repetition: int
    seed: int
    scenario: dict
    topology: ServiceTopology
    usage: dict[str, UsageVector]
    evaluation: Evaluation
    attribution_mode: str
    intensities: EnergyIntensityConfig
    diagnostics: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    @property
    def key(self) -> str:
        return f"{self.scenario_name}/{self.repetition}"

    def usage_doc(self) -> dict:
        some = next(iter(self.usage.values()))
        return {
            "scenario": self.scenario_name,
            "repetition": self.repetition,
            "window": {"start_ms": some.window_start_ms, "end_ms": some.window_end_ms},
            "topology": self.topology.to_dict(),
            "containers": {cid: u.to_dict() for cid, u in sorted(self.usage.items())},
        }

    def energy_doc(self) -> dict:
        ev = self.evaluation
        return {
            "scenario": self.scenario_name,
            "repetition": self.repetition,
            "seed": self.seed,
            "scenario_config": self.scenario,
            "units": "J",
            "attribution_mode": self.attribution_mode,
            "intensities": self.intensities.to_dict(),
            "disclosure": DOUBLE_COUNTING_DISCLOSURE,
            "containers": {k: v.to_dict() for k, v in ev.containers.items()},
            "services": {k: {"role": self.topology.services[k], **v.to_dict()} for k, v in ev.services.items()},
            "groups": {k: v.to_dict() for k, v in ev.groups.items()},
            "system": ev.system.to_dict(),
            "kpis": ev.kpis,
            "projection_days": PROJECTION_DAYS,
            "projections": ev.projections,
        }

    def diagnostics_doc(self) -> dict:
        return {**self.diagnostics, "timing": self.timing}

    @classmethod
    def load(cls, run_dir: str | Path) -> "RunResult":
        run_dir = Path(run_dir)
        try:
            usage_doc = json.loads((run_dir / "usage.json").read_text())
            energy = json.loads((run_dir / "energy.json").read_text())
            diag = json.loads((run_dir / "diagnostics.json").read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelError(f"{run_dir}: unreadable run record: {exc}") from exc
        topology = ServiceTopology.from_dict(usage_doc["topology"])
        usage = {cid: UsageVector.from_dict(u) for cid, u in usage_doc["containers"].items()}
        i = energy["intensities"]
        intensities = EnergyIntensityConfig(
            i["network_j_per_byte"], i["storage_j_per_byte"], i["retention_days"], i["reference_year"], i["network_direction"]
        )
        ev = Evaluation(
            containers={k: EnergyBreakdown.from_dict(v) for k, v in energy["containers"].items()},
            services={k: EnergyBreakdown.from_dict(v) for k, v in energy["services"].items()},
            groups={k: EnergyBreakdown.from_dict(v) for k, v in energy["groups"].items()},
            system=EnergyBreakdown.from_dict(energy["system"]),
            kpis=dict(energy["kpis"]),
            projections={k: dict(v) for k, v in energy["projections"].items()},
        )
        timing = diag.pop("timing", {})
        return cls(
            energy["scenario"], int(energy["repetition"]), int(energy["seed"]), energy["scenario_config"],
            topology, usage, ev, energy["attribution_mode"], intensities, diag, timing,
        )
