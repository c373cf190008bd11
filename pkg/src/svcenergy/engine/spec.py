"""Experiment spec files and run planning."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..ingest.usage import DEFAULT_MAPPING, MappingError, MetricMapping
from ..model import APPORTIONED, ATTRIBUTION_MODES, EnergyIntensityConfig, ModelError
from ..sim.generate import stable_seed
from ..sim.scenario import (
    CUSTOM_PATCH,
    ScenarioConfig,
    ScenarioError,
    TreatmentSpec,
    apply_scenario_treatment,
)

SIMULATE = "simulate"
LIVE = "live"
SIMULATED_TOPOLOGY = "simulated"
_SAFE_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")
_KEYS = {
    "name", "topology", "baseline", "treatments", "repetitions", "intensities",
    "attribution_mode", "output_dir", "seed", "mode", "mapping", "profiles", "live", "keep_streams",
}


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class LiveConfig:
    endpoint: str | None = None
    step_s: float = 15.0
    timeout_s: float = 10.0
    windows: Mapping[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)
    pv_sizes: Mapping[str, tuple[str | None, ...]] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "LiveConfig":
        data = data or {}
        windows = {
            str(k): tuple((float(w["start_ms"]), float(w["end_ms"])) for w in v)
            for k, v in (data.get("windows") or {}).items()
        }
        pv = {str(k): tuple(v) for k, v in (data.get("pv_sizes") or {}).items()}
        return cls(data.get("endpoint"), float(data.get("step_s", 15.0)), float(data.get("timeout_s", 10.0)), windows, pv)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    baseline: ScenarioConfig
    treatments: tuple[TreatmentSpec, ...] = ()
    repetitions: int = 3
    intensities: EnergyIntensityConfig = field(
        default_factory=lambda: EnergyIntensityConfig.from_config({"reference_year": 2025, "retention_days": 30})
    )
    attribution_mode: str = APPORTIONED
    output_dir: Path = Path("results")
    seed: int = 0
    mode: str = SIMULATE
    topology: str = SIMULATED_TOPOLOGY
    mapping: MetricMapping = DEFAULT_MAPPING
    profiles: str | None = None
    live: LiveConfig = field(default_factory=LiveConfig)
    keep_streams: bool = False
    raw: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise SpecError("repetitions must be >= 1")
        if self.attribution_mode not in ATTRIBUTION_MODES:
            raise SpecError(f"attribution_mode must be one of {ATTRIBUTION_MODES}")
        if self.mode not in (SIMULATE, LIVE):
            raise SpecError(f"mode must be {SIMULATE!r} or {LIVE!r}")
        names = [self.baseline.name] + [t.name for t in self.treatments]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise SpecError(f"duplicate scenario names {dupes}")
        for n in names:
            if not _SAFE_NAME.match(n):
                raise SpecError(f"scenario name {n!r} must match {_SAFE_NAME.pattern}")
        if self.mode == SIMULATE:
            if self.topology != SIMULATED_TOPOLOGY:
                raise SpecError("simulate mode derives its topology; set topology: simulated")
            for t in self.treatments:
                if t.kind == CUSTOM_PATCH:
                    raise SpecError(f"treatment {t.name!r}: custom-patch needs live mode")
                try:
                    apply_scenario_treatment(self.baseline, t)
                except ScenarioError as exc:
                    raise SpecError(f"treatment {t.name!r}: {exc}") from exc
        elif self.topology == SIMULATED_TOPOLOGY:
            raise SpecError("live mode needs a topology file")

    @property
    def scenario_names(self) -> list[str]:
        return [self.baseline.name] + [t.name for t in self.treatments]

    def scenario(self, name: str) -> ScenarioConfig:
        if name == self.baseline.name:
            return self.baseline
        for t in self.treatments:
            if t.name == name:
                return self.baseline if self.mode == LIVE else apply_scenario_treatment(self.baseline, t)
        raise SpecError(f"unknown scenario {name!r}")

    def treatment(self, name: str) -> TreatmentSpec | None:
        return next((t for t in self.treatments if t.name == name), None)


def parse_spec(data: Mapping[str, Any], base_dir: Path | None = None, **overrides: Any) -> ExperimentSpec:
    if not isinstance(data, Mapping):
        raise SpecError("experiment spec must be a mapping")
    unknown = set(data) - _KEYS
    if unknown:
        raise SpecError(f"unknown spec keys {sorted(unknown)}")
    for key in ("name", "baseline"):
        if key not in data:
            raise SpecError(f"spec is missing {key!r}")
    try:
        repetitions = int(overrides.get("repetitions") or data.get("repetitions", 3))
        seed = int(overrides["seed"]) if overrides.get("seed") is not None else int(data.get("seed", 0))
        baseline = ScenarioConfig.from_dict(data["baseline"] or {}, repetitions=repetitions)
        treatments = tuple(TreatmentSpec.from_dict(t) for t in data.get("treatments") or [])
        intensities = EnergyIntensityConfig.from_config(data.get("intensities") or {})
        mapping = MetricMapping.from_config(data["mapping"]) if data.get("mapping") else DEFAULT_MAPPING
        topology = str(data.get("topology", SIMULATED_TOPOLOGY))
        if topology != SIMULATED_TOPOLOGY and base_dir is not None and not Path(topology).is_absolute():
            topology = str(base_dir / topology)
        profiles = data.get("profiles")
        if profiles and base_dir is not None and not Path(profiles).is_absolute():
            profiles = str(base_dir / profiles)
        out = overrides.get("output_dir") or data.get("output_dir", "results")
        return ExperimentSpec(
            name=str(data["name"]),
            baseline=baseline,
            treatments=treatments,
            repetitions=repetitions,
            intensities=intensities,
            attribution_mode=str(data.get("attribution_mode", APPORTIONED)),
            output_dir=Path(out),
            seed=seed,
            mode=str(data.get("mode", SIMULATE)),
            topology=topology,
            mapping=mapping,
            profiles=profiles,
            live=LiveConfig.from_dict(data.get("live")),
            keep_streams=bool(data.get("keep_streams", False)),
            raw=dict(data),
        )
    except (ScenarioError, ModelError, MappingError, TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(str(exc)) from exc


def load_spec(path: str | Path, **overrides: Any) -> ExperimentSpec:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise SpecError(f"{path}: invalid YAML: {exc}") from exc
    except OSError as exc:
        raise SpecError(f"{path}: {exc}") from exc
    return parse_spec(data, base_dir=path.parent, **overrides)


@dataclass(frozen=True)
class PlannedRun:
    index: int
    scenario_name: str
    repetition: int
    seed: int
    scenario: ScenarioConfig
    treatment: TreatmentSpec | None

    @property
    def key(self) -> str:
        return f"{self.scenario_name}/{self.repetition}"


def plan_runs(spec: ExperimentSpec) -> list[PlannedRun]:
    """Baseline first, then treatments in spec order, each repeated.

    A run's seed hashes (experiment seed, scenario name, repetition), so
    adding treatments leaves existing runs untouched.
    """
    runs: list[PlannedRun] = []
    for name in spec.scenario_names:
        base = spec.scenario(name)
        for rep in range(spec.repetitions):
            seed = stable_seed(spec.seed, name, rep) % (2**63)
            runs.append(PlannedRun(len(runs), name, rep, seed, replace(base, seed=seed), spec.treatment(name)))
    return runs
