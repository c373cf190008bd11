"""Mean and two-sided Student-t confidence intervals over repetitions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

CI_LEVEL = 0.95
CI_METHOD = "student-t, two-sided, n-1 degrees of freedom"


@dataclass(frozen=True)
class Aggregate:
    mean: float
    half_width: float | None
    n: int
    sd: float | None

    @property
    def ci_available(self) -> bool:
        return self.half_width is not None

    @property
    def low(self) -> float | None:
        return None if self.half_width is None else self.mean - self.half_width

    @property
    def high(self) -> float | None:
        return None if self.half_width is None else self.mean + self.half_width

    def to_dict(self) -> dict:
        return {"mean": self.mean, "ci_half_width": self.half_width, "n": self.n, "ci_available": self.ci_available}


def aggregate(values: Sequence[float], level: float = CI_LEVEL) -> Aggregate:
    """Mean with a t-interval; one value gives a point estimate without CI."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot aggregate zero values")
    if not np.all(np.isfinite(x)):
        raise ValueError("values must be finite")
    if np.all(x == x[0]):
        mean = float(x[0])
    else:
        mean = math.fsum(x.tolist()) / x.size
    if x.size < 2:
        return Aggregate(mean, None, 1, None)
    sd = float(np.sqrt(math.fsum(((x - mean) ** 2).tolist()) / (x.size - 1)))
    t = float(stats.t.ppf(0.5 + level / 2.0, x.size - 1))
    return Aggregate(mean, t * sd / math.sqrt(x.size), int(x.size), sd)
