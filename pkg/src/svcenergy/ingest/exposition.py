"""Metrics exposition text: parsing and rendering of counters and gauges."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

_NAME_RE = re.compile(r"[a-zA-Z_:][a-zA-Z0-9_:]*")
_LABEL_NAME_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*")
_ESCAPES = {"\\": "\\", '"': '"', "n": "\n"}


class ExpositionError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, order=True)
class MetricSample:
    metric_name: str
    labels: tuple[tuple[str, str], ...]
    timestamp_ms: int
    value: float

    def __post_init__(self) -> None:
        if self.timestamp_ms <= 0:
            raise ValueError(f"timestamp must be > 0, got {self.timestamp_ms}")
        if not math.isfinite(self.value):
            raise ValueError(f"sample value must be finite, got {self.value!r}")

    @classmethod
    def make(cls, name: str, labels: Mapping[str, str], timestamp_ms: int, value: float) -> "MetricSample":
        return cls(name, tuple(sorted(labels.items())), int(timestamp_ms), float(value))

    @property
    def label_map(self) -> dict[str, str]:
        return dict(self.labels)

    def label(self, key: str) -> str | None:
        for k, v in self.labels:
            if k == key:
                return v
        return None


def _parse_labels(text: str, pos: int, lineno: int) -> tuple[dict[str, str], int]:
    """Parse ``{k="v",...}`` starting at the opening brace; return labels and end index."""
    labels: dict[str, str] = {}
    pos += 1
    n = len(text)
    while True:
        while pos < n and text[pos] in " \t":
            pos += 1
        if pos < n and text[pos] == "}":
            return labels, pos + 1
        m = _LABEL_NAME_RE.match(text, pos)
        if not m:
            raise ExpositionError("expected label name", lineno)
        key = m.group(0)
        pos = m.end()
        while pos < n and text[pos] in " \t":
            pos += 1
        if pos >= n or text[pos] != "=":
            raise ExpositionError(f"expected '=' after label {key!r}", lineno)
        pos += 1
        while pos < n and text[pos] in " \t":
            pos += 1
        if pos >= n or text[pos] != '"':
            raise ExpositionError(f"expected quoted value for label {key!r}", lineno)
        pos += 1
        chars: list[str] = []
        while True:
            if pos >= n:
                raise ExpositionError(f"unterminated value for label {key!r}", lineno)
            ch = text[pos]
            if ch == "\\":
                if pos + 1 >= n or text[pos + 1] not in _ESCAPES:
                    bad = text[pos + 1] if pos + 1 < n else ""
                    raise ExpositionError(f"unknown escape '\\{bad}' in label {key!r}", lineno)
                chars.append(_ESCAPES[text[pos + 1]])
                pos += 2
            elif ch == '"':
                pos += 1
                break
            else:
                chars.append(ch)
                pos += 1
        if key in labels:
            raise ExpositionError(f"duplicate label {key!r}", lineno)
        labels[key] = "".join(chars)
        while pos < n and text[pos] in " \t":
            pos += 1
        if pos < n and text[pos] == ",":
            pos += 1
        elif pos < n and text[pos] == "}":
            return labels, pos + 1
        else:
            raise ExpositionError("expected ',' or '}' in label set", lineno)


def _parse_value(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ExpositionError(f"unparsable value {token!r}", lineno) from None
    if not math.isfinite(value):
        raise ExpositionError(f"non-finite value {token!r}", lineno)
    return value


def parse_exposition(text: str | bytes, scrape_time_ms: int) -> list[MetricSample]:
    """Parse exposition text into samples.

    Lines without a timestamp get ``scrape_time_ms``. Comment lines
    (``# HELP``, ``# TYPE`` and others) are skipped.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    samples: list[MetricSample] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r").strip()
        if not line or line.startswith("#"):
            continue
        m = _NAME_RE.match(line)
        if not m:
            raise ExpositionError("expected metric name", lineno)
        name = m.group(0)
        pos = m.end()
        labels: dict[str, str] = {}
        if pos < len(line) and line[pos] == "{":
            labels, pos = _parse_labels(line, pos, lineno)
        rest = line[pos:]
        if rest and rest[0] not in " \t":
            raise ExpositionError(f"unexpected character {rest[0]!r} after metric name", lineno)
        tokens = rest.split()
        if len(tokens) not in (1, 2):
            raise ExpositionError("expected 'value [timestamp]'", lineno)
        value = _parse_value(tokens[0], lineno)
        if len(tokens) == 2:
            try:
                ts = int(tokens[1])
            except ValueError:
                raise ExpositionError(f"unparsable timestamp {tokens[1]!r}", lineno) from None
        else:
            ts = int(scrape_time_ms)
        if ts <= 0:
            raise ExpositionError("timestamp must be > 0", lineno)
        samples.append(MetricSample.make(name, labels, ts, value))
    return samples


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def format_value(value: float) -> str:
    return repr(float(value))


def render_exposition(
    samples: Iterable[MetricSample],
    types: Mapping[str, str] | None = None,
    with_timestamps: bool = True,
) -> str:
    """Render samples; metrics are grouped by name with optional TYPE lines."""
    by_name: dict[str, list[MetricSample]] = {}
    for s in samples:
        by_name.setdefault(s.metric_name, []).append(s)
    out: list[str] = []
    for name, group in by_name.items():
        if types and name in types:
            out.append(f"# TYPE {name} {types[name]}")
        for s in group:
            label_txt = ",".join(f'{k}="{_escape(v)}"' for k, v in s.labels)
            head = f"{name}{{{label_txt}}}" if s.labels else name
            tail = f" {s.timestamp_ms}" if with_timestamps else ""
            out.append(f"{head} {format_value(s.value)}{tail}")
    return "\n".join(out) + ("\n" if out else "")
