"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 200000] [--repeat 20]

Both backends are imported directly, so the env flag does not matter here.
The first numba call is excluded (JIT compile or cache load).
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from svcenergy.kernels import _numba, _numpy


def inputs(n: int, n_q: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    counter = np.cumsum(rng.uniform(0.0, 10.0, n))
    counter[n // 3 :] -= counter[n // 3] - 1.0  # one reset
    rates = rng.uniform(1.0, 100.0, n_q)
    noise = rng.uniform(-1.0, 1.0, (n_q, n // n_q))
    amp = np.full(n_q, 0.02)
    offsets = rng.uniform(0.0, 1e6, n_q)
    return counter, (rates, noise, amp, 6.0, offsets)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--queues", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    counter, cum_args = inputs(args.n, args.queues)

    _numba.reset_delta(counter[:10])
    _numba.cumulative_counters(*(a[:2] if isinstance(a, np.ndarray) else a for a in cum_args))

    assert _numba.reset_delta(counter) == _numpy.reset_delta(counter)
    assert np.array_equal(_numba.cumulative_counters(*cum_args), _numpy.cumulative_counters(*cum_args))

    print(f"n={args.n} queues={args.queues} repeat={args.repeat}")
    print(f"{'kernel':22s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, call in (
        ("reset_delta", lambda m: m.reset_delta(counter)),
        ("cumulative_counters", lambda m: m.cumulative_counters(*cum_args)),
    ):
        t_np = min(timeit.repeat(lambda: call(_numpy), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: call(_numba), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:22s} {t_np:10.3f} {t_nb:10.3f} {t_np / t_nb:8.2f}x")


if __name__ == "__main__":
    main()
