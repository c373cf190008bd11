"""Hot loops behind one interface.

``SVCENERGY_KERNELS=numpy`` forces the pure-numpy path; the default uses
numba when it imports.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

from . import _numpy

BACKEND_ENV = "SVCENERGY_KERNELS"


def _select():
    wanted = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if wanted == "numpy":
        return "numpy", _numpy
    if wanted != "numba":
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {wanted!r}")
    try:
        from . import _numba
    except ImportError:
        warnings.warn("numba is not installed, using numpy kernels", RuntimeWarning, stacklevel=2)
        return "numpy", _numpy
    return "numba", _numba


BACKEND, _impl = _select()


def reset_delta(values) -> tuple[float, int]:
    values = np.ascontiguousarray(values, dtype=np.float64)
    total, resets = _impl.reset_delta(values)
    return float(total), int(resets)


def cumulative_counters(rates, noise, amplitude, dt: float, offsets) -> np.ndarray:
    return _impl.cumulative_counters(
        np.ascontiguousarray(rates, dtype=np.float64),
        np.ascontiguousarray(noise, dtype=np.float64),
        np.ascontiguousarray(amplitude, dtype=np.float64),
        float(dt),
        np.ascontiguousarray(offsets, dtype=np.float64),
    )
