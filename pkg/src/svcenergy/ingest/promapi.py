"""Metric-server HTTP API v1 ``query_range``: response parsing and a small client."""

from __future__ import annotations

import json
import math
import os
import urllib.error
import urllib.parse
import urllib.request

import numpy as np

from .counters import CounterSeries

ENDPOINT_ENV = "METRICS_ENDPOINT"
TOKEN_ENV = "METRICS_TOKEN"


class RangeQueryError(ValueError):
    pass


class MetricsEndpointError(RuntimeError):
    pass


def parse_range_query_response(payload: str | bytes) -> list[CounterSeries]:
    try:
        doc = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise RangeQueryError(f"response is not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise RangeQueryError("response must be a JSON object")
    if doc.get("status") != "success":
        msg = doc.get("error") or doc.get("errorType") or "no message"
        raise RangeQueryError(f"query failed with status {doc.get('status')!r}: {msg}")
    data = doc.get("data") or {}
    if data.get("resultType") != "matrix":
        raise RangeQueryError(f"expected resultType 'matrix', got {data.get('resultType')!r}")
    out: list[CounterSeries] = []
    for i, entry in enumerate(data.get("result") or []):
        metric = dict(entry.get("metric") or {})
        name = metric.pop("__name__", "")
        ts: list[int] = []
        vs: list[float] = []
        for point in entry.get("values") or []:
            try:
                t, raw = point
                value = float(raw)
            except (TypeError, ValueError):
                raise RangeQueryError(f"result[{i}]: unparsable point {point!r}") from None
            if not math.isfinite(value):
                raise RangeQueryError(f"result[{i}]: non-finite value {raw!r}")
            ts.append(int(round(float(t) * 1000.0)))
            vs.append(value)
        labels = tuple(sorted((str(k), str(v)) for k, v in metric.items()))
        try:
            out.append(CounterSeries(name, labels, np.array(ts, dtype=np.int64), np.array(vs, dtype=np.float64)))
        except ValueError as exc:
            raise RangeQueryError(f"result[{i}]: {exc}") from exc
    return out


class MetricsClient:
    """Fetches ``query_range`` matrices after a run has finished."""

    def __init__(self, endpoint: str, token: str | None = None, timeout: float = 10.0):
        self.endpoint = endpoint.rstrip("/")
        self.token = token
        self.timeout = timeout

    @classmethod
    def from_env(cls, default_endpoint: str | None = None, timeout: float = 10.0) -> "MetricsClient":
        endpoint = os.environ.get(ENDPOINT_ENV) or default_endpoint
        if not endpoint:
            raise MetricsEndpointError(f"no metrics endpoint configured (set {ENDPOINT_ENV})")
        return cls(endpoint, os.environ.get(TOKEN_ENV), timeout)

    def query_range(self, query: str, start_s: float, end_s: float, step_s: float) -> list[CounterSeries]:
        params = urllib.parse.urlencode({"query": query, "start": start_s, "end": end_s, "step": step_s})
        req = urllib.request.Request(f"{self.endpoint}/api/v1/query_range?{params}")
        if self.token:
            req.add_header("Authorization", f"Bearer {self.token}")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                body = resp.read()
        except urllib.error.HTTPError as exc:
            body = exc.read()
            if not body:
                raise MetricsEndpointError(f"HTTP {exc.code} from {self.endpoint}") from exc
        except (urllib.error.URLError, OSError) as exc:
            raise MetricsEndpointError(f"cannot reach {self.endpoint}: {exc}") from exc
        return parse_range_query_response(body)
