"""Pure-numpy kernels. Reference path and fallback when numba is off."""

from __future__ import annotations

import numpy as np


def reset_delta(values: np.ndarray) -> tuple[float, int]:
    """Sum of positive increments; a drop counts the post-reset value in full."""
    if values.shape[0] < 2:
        return 0.0, 0
    d = np.diff(values)
    resets = d < 0
    inc = np.where(resets, values[1:], d)
    # cumsum accumulates left to right, matching the compiled loop bit for bit
    return float(np.cumsum(inc)[-1]), int(resets.sum())


def cumulative_counters(
    rates: np.ndarray, noise: np.ndarray, amplitude: np.ndarray, dt: float, offsets: np.ndarray
) -> np.ndarray:
    """Cumulative counter values at n_t + 1 scrape times.

    ``rates`` (n_q,) per second, ``noise`` (n_q, n_t) in [-1, 1],
    ``amplitude`` (n_q,) multiplicative noise bound, ``offsets`` (n_q,)
    counter values at the first scrape.
    """
    inc = (rates * dt)[:, None] * (1.0 + amplitude[:, None] * noise)
    out = np.empty((rates.shape[0], noise.shape[1] + 1))
    out[:, 0] = offsets
    out[:, 1:] = offsets[:, None] + np.cumsum(inc, axis=1)
    return out
