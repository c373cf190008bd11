"""Service-level energy model.

Containers are charged for CPU and memory directly from measured joules and
for network and storage through energy-intensity factors. Services sum their
containers; totals over a set of services add a share of unattributed system
energy. Everything here is pure arithmetic in joules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Iterable, Mapping

from .topology import ServiceTopology
from .units import (
    JOULES_PER_WH,
    SECONDS_PER_DAY,
    j_per_byte_to_kwh_per_gb,
    kwh_per_gb_to_j_per_byte,
)

LITERAL = "literal"
APPORTIONED = "apportioned"
ATTRIBUTION_MODES = (LITERAL, APPORTIONED)

NETWORK_DIRECTIONS = ("tx", "rx", "both")

# network intensity anchor and halving period
NETWORK_ANCHOR_YEAR = 2015
NETWORK_ANCHOR_KWH_PER_GB = 0.06
NETWORK_HALVING_YEARS = 2.0
# energy to keep one GB stored for a year
STORAGE_KWH_PER_GB_YEAR = 0.0046

DOUBLE_COUNTING_DISCLOSURE = (
    "Network energy counts every byte a container sends or receives. Traffic "
    "between two internal containers is charged on both ends, so network "
    "energy may be overestimated."
)


class ModelError(ValueError):
    pass


def _check_nonneg(name: str, value: float) -> None:
    if not math.isfinite(value) or value < 0:
        raise ModelError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class UsageVector:
    """Measured quantities of one container over a time window.

    ``network_tx_bytes``/``network_rx_bytes`` and ``write_bytes``/``read_bytes``
    are diagnostics; the model only reads ``network_bytes`` and
    ``storage_bytes``.
    """

    cpu_joules: float
    memory_joules: float
    network_bytes: float
    storage_bytes: float
    window_start_ms: float
    window_end_ms: float
    trace_count: float = 0.0
    metric_count: float = 0.0
    request_count: float = 0.0
    network_tx_bytes: float = 0.0
    network_rx_bytes: float = 0.0
    write_bytes: float = 0.0
    read_bytes: float = 0.0

    CUMULATIVE = (
        "cpu_joules",
        "memory_joules",
        "network_bytes",
        "storage_bytes",
        "trace_count",
        "metric_count",
        "request_count",
        "network_tx_bytes",
        "network_rx_bytes",
        "write_bytes",
        "read_bytes",
    )

    def __post_init__(self) -> None:
        for name in self.CUMULATIVE:
            _check_nonneg(name, getattr(self, name))
        if not (math.isfinite(self.window_start_ms) and math.isfinite(self.window_end_ms)):
            raise ModelError("window bounds must be finite")
        if self.window_end_ms <= self.window_start_ms:
            raise ModelError("usage window duration must be > 0")

    @property
    def window_s(self) -> float:
        return (self.window_end_ms - self.window_start_ms) / 1000.0

    def scaled(self, k: float) -> "UsageVector":
        return replace(self, **{name: getattr(self, name) * k for name in self.CUMULATIVE})

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "UsageVector":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ModelError(f"unknown usage fields {sorted(unknown)}")
        try:
            return cls(**{k: float(v) for k, v in data.items()})
        except TypeError as exc:
            raise ModelError(f"malformed usage record: {exc}") from exc

    @classmethod
    def zero(cls, start_ms: float, end_ms: float) -> "UsageVector":
        return cls(0.0, 0.0, 0.0, 0.0, start_ms, end_ms)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Per-entity energy components in joules."""

    e_cpu: float = 0.0
    e_memory: float = 0.0
    e_network: float = 0.0
    e_storage: float = 0.0

    COMPONENTS = ("e_cpu", "e_memory", "e_network", "e_storage")

    def __post_init__(self) -> None:
        for name in self.COMPONENTS:
            _check_nonneg(name, getattr(self, name))

    @property
    def e_compute(self) -> float:
        return self.e_cpu + self.e_memory

    @property
    def e_total(self) -> float:
        return self.e_cpu + self.e_memory + self.e_network + self.e_storage

    def __add__(self, other: "EnergyBreakdown") -> "EnergyBreakdown":
        return EnergyBreakdown(
            self.e_cpu + other.e_cpu,
            self.e_memory + other.e_memory,
            self.e_network + other.e_network,
            self.e_storage + other.e_storage,
        )

    def scaled(self, k: float) -> "EnergyBreakdown":
        return EnergyBreakdown(self.e_cpu * k, self.e_memory * k, self.e_network * k, self.e_storage * k)

    def to_dict(self) -> dict:
        return {
            "e_cpu": self.e_cpu,
            "e_memory": self.e_memory,
            "e_network": self.e_network,
            "e_storage": self.e_storage,
            "e_compute": self.e_compute,
            "e_total": self.e_total,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EnergyBreakdown":
        return cls(*(float(data[name]) for name in cls.COMPONENTS))


def sum_breakdowns(items: Iterable[EnergyBreakdown]) -> EnergyBreakdown:
    total = EnergyBreakdown()
    for b in items:
        total = total + b
    return total


@dataclass(frozen=True)
class SystemEnergy:
    """Energy of processes no service owns, kept as components."""

    breakdown: EnergyBreakdown = EnergyBreakdown()
    attribution_mode: str = APPORTIONED

    def __post_init__(self) -> None:
        if self.attribution_mode not in ATTRIBUTION_MODES:
            raise ModelError(f"unknown attribution mode {self.attribution_mode!r}")

    @property
    def e_system(self) -> float:
        return self.breakdown.e_total


@dataclass(frozen=True)
class EnergyIntensityConfig:
    """Network and storage intensities in J/byte."""

    network_intensity: float
    storage_intensity: float
    retention_days: float = 30.0
    reference_year: int | None = None
    network_direction: str = "both"

    def __post_init__(self) -> None:
        _check_nonneg("network_intensity", self.network_intensity)
        _check_nonneg("storage_intensity", self.storage_intensity)
        _check_nonneg("retention_days", self.retention_days)
        if self.reference_year is not None and self.reference_year < NETWORK_ANCHOR_YEAR:
            raise ModelError(f"reference_year must be >= {NETWORK_ANCHOR_YEAR}")
        if self.network_direction not in NETWORK_DIRECTIONS:
            raise ModelError(f"network_direction must be one of {NETWORK_DIRECTIONS}")

    @classmethod
    def from_kwh_per_gb(
        cls,
        network_kwh_per_gb: float,
        storage_kwh_per_gb: float,
        retention_days: float = 30.0,
        reference_year: int | None = None,
        network_direction: str = "both",
    ) -> "EnergyIntensityConfig":
        return cls(
            kwh_per_gb_to_j_per_byte(network_kwh_per_gb),
            kwh_per_gb_to_j_per_byte(storage_kwh_per_gb),
            retention_days,
            reference_year,
            network_direction,
        )

    @classmethod
    def from_config(cls, cfg: Mapping) -> "EnergyIntensityConfig":
        """Build from a config mapping.

        Network: ``network_kwh_per_gb`` or ``reference_year`` (exactly one).
        Storage: ``retention_days``, optionally ``storage_kwh_per_gb`` to
        override the retention-derived value.
        """
        if not isinstance(cfg, Mapping):
            raise ModelError("intensities must be a mapping")
        has_direct = cfg.get("network_kwh_per_gb") is not None
        has_year = cfg.get("reference_year") is not None
        if has_direct == has_year:
            raise ModelError("intensities need exactly one of network_kwh_per_gb or reference_year")
        if "retention_days" not in cfg and "storage_kwh_per_gb" not in cfg:
            raise ModelError("intensities need retention_days or storage_kwh_per_gb")
        try:
            year = int(cfg["reference_year"]) if has_year else None
            network = float(cfg["network_kwh_per_gb"]) if has_direct else extrapolate_network_intensity(year)
            retention = float(cfg.get("retention_days", 30.0))
            storage = (
                float(cfg["storage_kwh_per_gb"])
                if cfg.get("storage_kwh_per_gb") is not None
                else storage_intensity_for_retention(retention)
            )
        except (TypeError, ValueError) as exc:
            raise ModelError(f"malformed intensities: {exc}") from exc
        return cls.from_kwh_per_gb(network, storage, retention, year, str(cfg.get("network_direction", "both")))

    def to_dict(self) -> dict:
        return {
            "network_j_per_byte": self.network_intensity,
            "storage_j_per_byte": self.storage_intensity,
            "network_kwh_per_gb": j_per_byte_to_kwh_per_gb(self.network_intensity),
            "storage_kwh_per_gb": j_per_byte_to_kwh_per_gb(self.storage_intensity),
            "retention_days": self.retention_days,
            "reference_year": self.reference_year,
            "network_direction": self.network_direction,
        }


def extrapolate_network_intensity(reference_year: int) -> float:
    """Network intensity in kWh/GB, halving every two years from 2015."""
    if reference_year < NETWORK_ANCHOR_YEAR:
        raise ModelError(f"no backward extrapolation before {NETWORK_ANCHOR_YEAR}")
    return NETWORK_ANCHOR_KWH_PER_GB / 2.0 ** ((reference_year - NETWORK_ANCHOR_YEAR) / NETWORK_HALVING_YEARS)


def storage_intensity_for_retention(retention_days: float) -> float:
    """Storage intensity in kWh/GB for keeping data ``retention_days``."""
    if not math.isfinite(retention_days) or retention_days < 0:
        raise ModelError("retention_days must be finite and >= 0")
    return STORAGE_KWH_PER_GB_YEAR * retention_days / 365.0


def container_energy(usage: UsageVector, intensities: EnergyIntensityConfig) -> EnergyBreakdown:
    return EnergyBreakdown(
        e_cpu=usage.cpu_joules,
        e_memory=usage.memory_joules,
        e_network=usage.network_bytes * intensities.network_intensity,
        e_storage=usage.storage_bytes * intensities.storage_intensity,
    )


def service_energy(
    topology: ServiceTopology,
    per_container: Mapping[str, EnergyBreakdown],
    service: str,
) -> EnergyBreakdown:
    total = EnergyBreakdown()
    for cid in topology.members(service):
        try:
            total = total + per_container[cid]
        except KeyError:
            raise ModelError(f"no energy breakdown for container {cid!r} of service {service!r}") from None
    return total


def total_energy(
    topology: ServiceTopology,
    per_service: Mapping[str, EnergyBreakdown],
    subset: Iterable[str],
    system: SystemEnergy | None = None,
) -> EnergyBreakdown:
    """Energy of a set of services plus their share of system energy.

    ``apportioned`` charges each service 1/|all services| of the system
    energy, so the full set recovers it exactly. ``literal`` adds
    system/|subset| once.
    """
    system = system or SystemEnergy()
    chosen = sorted(topology.expand(subset))
    total = EnergyBreakdown()
    for sid in chosen:
        try:
            total = total + per_service[sid]
        except KeyError:
            raise ModelError(f"no energy breakdown for service {sid!r}") from None
    if system.attribution_mode == LITERAL:
        if not chosen:
            raise ModelError("literal attribution over an empty subset divides by zero")
        share = 1.0 / len(chosen)
    else:
        share = len(chosen) / len(topology.services) if topology.services else 0.0
    if share == 1.0:
        return total + system.breakdown
    return total + system.breakdown.scaled(share)


def underestimation_ratio(b: EnergyBreakdown) -> float:
    """Share of energy that compute-only accounting misses."""
    total = b.e_total
    if total <= 0:
        raise ModelError("underestimation ratio undefined for zero total energy")
    return min(1.0, (b.e_network + b.e_storage) / total)


def project_to_period(usage: UsageVector, period_s: float) -> UsageVector:
    """Scale cumulative usage linearly from its window to ``period_s`` seconds."""
    if not math.isfinite(period_s) or period_s <= 0:
        raise ModelError("projection period must be > 0")
    window_s = usage.window_s
    if window_s <= 0:
        raise ModelError("cannot project a zero-length window")
    k = period_s / window_s
    scaled = usage if k == 1.0 else usage.scaled(k)
    return replace(scaled, window_end_ms=usage.window_start_ms + period_s * 1000.0)


def project_days(usage: UsageVector, days: float) -> UsageVector:
    return project_to_period(usage, days * SECONDS_PER_DAY)


def energy_per_trace(total: EnergyBreakdown, traces: float) -> float:
    """Wh per captured trace."""
    if not traces > 0:
        raise ModelError("energy per trace needs a positive trace count")
    return total.e_total / JOULES_PER_WH / traces
