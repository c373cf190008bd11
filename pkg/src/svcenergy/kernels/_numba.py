"""numba-compiled kernels, same contracts as ``_numpy``."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def reset_delta(values):
    n = values.shape[0]
    total = 0.0
    resets = 0
    for i in range(1, n):
        d = values[i] - values[i - 1]
        if d < 0:
            total += values[i]
            resets += 1
        else:
            total += d
    return total, resets


@njit(cache=True)
def cumulative_counters(rates, noise, amplitude, dt, offsets):
    n_q, n_t = noise.shape
    out = np.empty((n_q, n_t + 1))
    for q in range(n_q):
        step = rates[q] * dt
        acc = 0.0
        out[q, 0] = offsets[q]
        for t in range(n_t):
            acc += step * (1.0 + amplitude[q] * noise[q, t])
            out[q, t + 1] = offsets[q] + acc
    return out
