"""Unit constants. The joule is the canonical internal unit."""

from __future__ import annotations

JOULES_PER_KWH = 3_600_000.0
JOULES_PER_WH = JOULES_PER_KWH / 1000.0
BYTES_PER_GB = 1e9
SECONDS_PER_DAY = 86_400.0


def j_to_wh(joules: float) -> float:
    return joules / JOULES_PER_WH


def wh_to_j(wh: float) -> float:
    return wh * JOULES_PER_WH


def j_to_kwh(joules: float) -> float:
    return joules / JOULES_PER_KWH


def kwh_per_gb_to_j_per_byte(kwh_per_gb: float) -> float:
    return kwh_per_gb * JOULES_PER_KWH / BYTES_PER_GB


def j_per_byte_to_kwh_per_gb(j_per_byte: float) -> float:
    return j_per_byte * BYTES_PER_GB / JOULES_PER_KWH
