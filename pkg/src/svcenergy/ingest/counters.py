"""Counter series, run windows and reset-aware window deltas."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .. import kernels
from .exposition import MetricSample


class InsufficientSamplesError(ValueError):
    pass


@dataclass(frozen=True)
class RunWindow:
    """Run bounds in epoch ms; the analysed window excludes both trims."""

    run_start_ms: float
    run_end_ms: float
    warmup_ms: float = 0.0
    cooldown_ms: float = 0.0

    def __post_init__(self) -> None:
        if self.warmup_ms < 0 or self.cooldown_ms < 0:
            raise ValueError("trims must be >= 0")
        if self.run_end_ms - self.run_start_ms <= self.warmup_ms + self.cooldown_ms:
            raise ValueError("run is not longer than its warmup and cooldown trims")

    @property
    def lo(self) -> float:
        return self.run_start_ms + self.warmup_ms

    @property
    def hi(self) -> float:
        return self.run_end_ms - self.cooldown_ms

    @classmethod
    def from_minutes(cls, start_ms: float, duration_min: float, warmup_min: float, cooldown_min: float) -> "RunWindow":
        return cls(start_ms, start_ms + duration_min * 60_000.0, warmup_min * 60_000.0, cooldown_min * 60_000.0)


@dataclass(frozen=True)
class CounterSeries:
    metric_name: str
    labels: tuple[tuple[str, str], ...]
    timestamps_ms: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        ts = np.asarray(self.timestamps_ms, dtype=np.int64)
        vs = np.asarray(self.values, dtype=np.float64)
        if ts.shape != vs.shape or ts.ndim != 1:
            raise ValueError("timestamps and values must be 1-d and equally long")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            raise ValueError(f"timestamps of {self.metric_name} must be strictly increasing")
        if not np.all(np.isfinite(vs)):
            raise ValueError("series values must be finite")
        object.__setattr__(self, "timestamps_ms", ts)
        object.__setattr__(self, "values", vs)

    def __len__(self) -> int:
        return int(self.values.size)

    def label(self, key: str) -> str | None:
        return dict(self.labels).get(key)

    @property
    def key(self) -> tuple[str, tuple[tuple[str, str], ...]]:
        return self.metric_name, self.labels

    def in_window(self, window: RunWindow) -> np.ndarray:
        lo = np.searchsorted(self.timestamps_ms, window.lo, side="left")
        hi = np.searchsorted(self.timestamps_ms, window.hi, side="right")
        return self.values[lo:hi]


def group_samples(samples: Iterable[MetricSample]) -> list[CounterSeries]:
    """Group samples into one series per (name, label set), ordered by key."""
    buckets: dict[tuple, dict[int, float]] = {}
    for s in samples:
        points = buckets.setdefault((s.metric_name, s.labels), {})
        if s.timestamp_ms in points and points[s.timestamp_ms] != s.value:
            raise ValueError(f"conflicting samples for {s.metric_name} at {s.timestamp_ms}")
        points[s.timestamp_ms] = s.value
    out = []
    for (name, labels) in sorted(buckets):
        points = buckets[(name, labels)]
        ts = sorted(points)
        out.append(CounterSeries(name, labels, np.array(ts, dtype=np.int64), np.array([points[t] for t in ts])))
    return out


def _window_values(series: CounterSeries, window: RunWindow) -> np.ndarray:
    vals = series.in_window(window)
    if vals.size < 2:
        raise InsufficientSamplesError(
            f"insufficient samples: {series.metric_name}{dict(series.labels)} has {vals.size} in window"
        )
    return vals


def counter_delta_with_resets(series: CounterSeries, window: RunWindow) -> tuple[float, int]:
    """Increase of a counter across the trimmed window and the number of resets seen."""
    return kernels.reset_delta(_window_values(series, window))


def counter_delta(series: CounterSeries, window: RunWindow) -> float:
    return counter_delta_with_resets(series, window)[0]


def gauge_delta(series: CounterSeries, window: RunWindow) -> float:
    """Last in-window value minus first (signed)."""
    vals = _window_values(series, window)
    return float(vals[-1] - vals[0])
