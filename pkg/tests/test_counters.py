from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svcenergy.ingest.counters import (
    CounterSeries,
    InsufficientSamplesError,
    RunWindow,
    counter_delta,
    counter_delta_with_resets,
    gauge_delta,
    group_samples,
)
from svcenergy.ingest.exposition import MetricSample


def series(values, step=1000, start=1000):
    ts = np.arange(len(values)) * step + start
    return CounterSeries("c_total", (), ts, np.asarray(values, dtype=float))


WIDE = RunWindow(0, 10**9)


def test_plain_increase():
    assert counter_delta(series([1, 3, 6, 10]), WIDE) == 9


def test_reset_counts_post_reset_value():
    # 10 -> 2 is a restart; the 2 accrued since restart counts in full
    total, resets = counter_delta_with_resets(series([5, 10, 2, 4]), WIDE)
    assert (total, resets) == (5 + 2 + 2, 1)


def test_window_uses_inside_samples_only():
    s = series([0, 100, 200, 300, 400, 500])  # ts 1000..6000
    w = RunWindow(0, 7000, 2000, 2000)  # [2000, 5000]
    assert counter_delta(s, w) == 300


def test_insufficient_samples():
    with pytest.raises(InsufficientSamplesError):
        counter_delta(series([1, 2, 3]), RunWindow(0, 10000, 2500, 6600))


def test_gauge_signed():
    assert gauge_delta(series([10, 4]), WIDE) == -6


def test_window_trims_invariant():
    with pytest.raises(ValueError):
        RunWindow(0, 1000, 600, 400)


def test_non_increasing_timestamps():
    with pytest.raises(ValueError):
        CounterSeries("x", (), np.array([2, 1]), np.array([1.0, 2.0]))


def test_group_samples_conflict():
    a = MetricSample.make("m", {}, 5, 1.0)
    b = MetricSample.make("m", {}, 5, 2.0)
    with pytest.raises(ValueError):
        group_samples([a, b])


def test_group_samples_orders():
    ss = [MetricSample.make("m", {"p": "b"}, 2, 1.0), MetricSample.make("m", {"p": "a"}, 1, 3.0),
          MetricSample.make("m", {"p": "a"}, 3, 5.0)]
    g = group_samples(ss)
    assert [x.labels for x in g] == [(("p", "a"),), (("p", "b"),)]
    assert g[0].values.tolist() == [3.0, 5.0]


increments = st.lists(st.floats(0, 1e9, allow_nan=False), min_size=1, max_size=60)


def oracle_delta(values):
    total = 0.0
    for prev, cur in zip(values, values[1:]):
        total += cur if cur < prev else cur - prev
    return total


@settings(max_examples=1000, deadline=None)
@given(increments, st.lists(st.integers(0, 59), max_size=4), st.floats(0, 1e6))
def test_reset_handling_matches_restart_model(incs, reset_at, offset):
    # counter restarts from 0 at each reset index; true work is the sum of increments
    values, cur = [offset], offset
    for i, inc in enumerate(incs):
        cur = inc if i in reset_at else cur + inc
        values.append(cur)
    total, resets = counter_delta_with_resets(series(values), WIDE)
    assert total >= 0
    assert total == pytest.approx(oracle_delta(values), rel=1e-9, abs=1e-6)
    if not reset_at:
        assert total == pytest.approx(sum(incs), rel=1e-9, abs=1e-6)
        assert resets == 0


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.floats(0, 1e12, allow_nan=False), min_size=2, max_size=50))
def test_nonnegative_on_arbitrary_values(vals):
    assert counter_delta(series(vals), WIDE) >= 0


@settings(max_examples=1000, deadline=None)
@given(increments.filter(lambda x: len(x) >= 2), st.data())
def test_window_additivity(incs, data):
    # splitting a window at an interior sample adds up (no resets)
    values = np.concatenate([[0.0], np.cumsum(incs)])
    lo, mid, hi = sorted(data.draw(st.lists(st.integers(0, len(values) - 1), min_size=3, max_size=3, unique=True)))
    s = series(values)
    ts = s.timestamps_ms

    def w(a, b):
        return RunWindow(ts[a] - 10, ts[b] + 10, 10, 10)

    whole = counter_delta(s, w(lo, hi))
    parts = counter_delta(s, w(lo, mid)) + counter_delta(s, w(mid, hi))
    assert whole == pytest.approx(parts, rel=1e-9, abs=1e-6)


@settings(max_examples=1000, deadline=None)
@given(increments.filter(lambda x: len(x) >= 2), st.integers(1, 5000))
def test_window_invariance_to_sample_shift(incs, shift):
    # shifting all timestamps together with the window leaves the delta unchanged
    values = np.concatenate([[0.0], np.cumsum(incs)])
    s = series(values)
    t = CounterSeries(s.metric_name, s.labels, s.timestamps_ms + shift, s.values)
    w = RunWindow(0, int(s.timestamps_ms[-1]) + 1, 0, 0)
    ws = RunWindow(shift, int(s.timestamps_ms[-1]) + 1 + shift, 0, 0)
    assert counter_delta(s, w) == counter_delta(t, ws)
