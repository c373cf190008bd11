from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import t_interval
from svcenergy.engine.stats import aggregate


def test_three_values():
    a = aggregate([92, 93, 94])
    assert a.mean == 93
    assert a.half_width == pytest.approx(4.302652729749463 / math.sqrt(3), rel=1e-9)
    assert abs(a.half_width - 2.48) < 0.01


def test_identical_width_zero():
    a = aggregate([93.58] * 3)
    assert a.mean == 93.58 and a.half_width == 0.0


def test_single_value_flagged():
    a = aggregate([5.0])
    assert not a.ci_available and a.half_width is None and a.to_dict()["ci_available"] is False


def test_empty_and_nonfinite():
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ValueError):
        aggregate([1.0, float("nan")])


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.data())
def test_matches_closed_form_t_interval(n, data):
    vals = data.draw(st.lists(st.floats(-1e6, 1e6), min_size=n, max_size=n))
    mean, hw = t_interval(vals)
    a = aggregate(vals)
    assert a.mean == pytest.approx(mean, rel=1e-9, abs=1e-9)
    assert a.half_width == pytest.approx(hw, rel=1e-9, abs=1e-9)
    assert a.low <= a.mean <= a.high
