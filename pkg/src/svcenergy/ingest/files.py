"""Readers for recorded scrape directories and PV size files."""

from __future__ import annotations

import json
import re
from pathlib import Path

from .counters import CounterSeries, group_samples
from .exposition import MetricSample, parse_exposition

SCRAPE_FILE_RE = re.compile(r"^(?P<source>[A-Za-z0-9_.]+)-(?P<epochms>\d+)\.prom$")


def scrape_files(directory: str | Path) -> list[tuple[str, int, Path]]:
    """(source, epoch ms, path) for every scrape file, ordered by time then source."""
    out = []
    for p in Path(directory).iterdir():
        m = SCRAPE_FILE_RE.match(p.name)
        if m:
            out.append((m["source"], int(m["epochms"]), p))
    out.sort(key=lambda x: (x[1], x[0]))
    return out


def load_scrape_samples(directory: str | Path) -> list[MetricSample]:
    samples: list[MetricSample] = []
    for _, ts, path in scrape_files(directory):
        try:
            samples.extend(parse_exposition(path.read_bytes(), ts))
        except ValueError as exc:
            raise ValueError(f"{path.name}: {exc}") from exc
    return samples


def load_scrape_dir(directory: str | Path) -> list[CounterSeries]:
    return group_samples(load_scrape_samples(directory))


def load_pv_sizes(path: str | Path) -> dict[str, float]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError("pv sizes file must map container id to bytes")
    out = {}
    for k, v in data.items():
        size = float(v)
        if size < 0:
            raise ValueError(f"negative pv size for {k}")
        out[str(k)] = size
    return out
