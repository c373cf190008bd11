"""Per-scenario aggregation and treatment-versus-baseline comparison."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..model import DOUBLE_COUNTING_DISCLOSURE
from .results import RunResult, dumps
from .stats import CI_LEVEL, CI_METHOD, Aggregate, aggregate

COMPONENTS = ("e_cpu", "e_memory", "e_network", "e_storage", "e_compute", "e_total")
KPI_NAMES = (
    "trace_count",
    "metric_count",
    "request_count",
    "wh_per_trace",
    "underestimation_ratio_auxiliary",
    "underestimation_ratio_all",
)


class ComparisonError(ValueError):
    pass


def _agg(values: Iterable[float | None]) -> Aggregate | None:
    present = [v for v in values if v is not None]
    return aggregate(present) if present else None


def _dict(a: Aggregate | None) -> dict | None:
    return None if a is None else a.to_dict()


@dataclass
class ScenarioAggregate:
    name: str
    n_runs: int
    roles: dict[str, str]
    services: dict[str, dict[str, Aggregate]]
    groups: dict[str, dict[str, Aggregate]]
    kpis: dict[str, Aggregate | None]
    projections: dict[str, dict[str, Aggregate]]

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "services": {s: {"role": self.roles[s], **{c: a.to_dict() for c, a in v.items()}} for s, v in self.services.items()},
            "groups": {g: {c: a.to_dict() for c, a in v.items()} for g, v in self.groups.items()},
            "kpis": {k: _dict(v) for k, v in self.kpis.items()},
            "projections": {s: {q: a.to_dict() for q, a in v.items()} for s, v in self.projections.items()},
        }


def aggregate_scenario(results: Sequence[RunResult]) -> ScenarioAggregate:
    """Mean and CI of every reported quantity over the repetitions of one scenario."""
    if not results:
        raise ComparisonError("no results to aggregate")
    names = {r.scenario_name for r in results}
    if len(names) != 1:
        raise ComparisonError(f"results mix scenarios {sorted(names)}")
    results = sorted(results, key=lambda r: r.repetition)
    first = results[0]
    service_ids = sorted(first.evaluation.services)
    for r in results[1:]:
        if sorted(r.evaluation.services) != service_ids:
            raise ComparisonError(f"{r.key}: service set differs from {first.key}")

    def by_component(get) -> dict[str, Aggregate]:
        return {c: aggregate([getattr(get(r), c) for r in results]) for c in COMPONENTS}

    services = {s: by_component(lambda r, s=s: r.evaluation.services[s]) for s in service_ids}
    groups = {g: by_component(lambda r, g=g: r.evaluation.groups[g]) for g in sorted(first.evaluation.groups)}
    kpis = {k: _agg(r.evaluation.kpis.get(k) for r in results) for k in KPI_NAMES}
    projections = {
        s: {q: aggregate([r.evaluation.projections[s][q] for r in results]) for q in sorted(first.evaluation.projections[s])}
        for s in sorted(first.evaluation.projections)
    }
    roles = {s: first.topology.services[s] for s in service_ids}
    return ScenarioAggregate(first.scenario_name, len(results), roles, services, groups, kpis, projections)


def delta(base: Aggregate | None, treat: Aggregate | None) -> dict:
    if base is None or treat is None:
        return {"baseline": _dict(base), "treatment": _dict(treat), "abs_delta": None, "rel_delta": None, "rel_undefined": True}
    diff = treat.mean - base.mean
    undefined = base.mean == 0.0
    return {
        "baseline": base.to_dict(),
        "treatment": treat.to_dict(),
        "abs_delta": diff,
        "rel_delta": None if undefined else diff / base.mean,
        "rel_undefined": undefined,
    }


def compare(baseline: ScenarioAggregate, treatment: ScenarioAggregate) -> dict:
    """Deltas per service, group and KPI; relative deltas on a zero baseline are flagged."""
    a, b = set(baseline.services), set(treatment.services)
    if a != b:
        only_base = sorted(a - b)
        only_treat = sorted(b - a)
        raise ComparisonError(
            f"service sets differ: only in {baseline.name}: {only_base}; only in {treatment.name}: {only_treat}"
        )
    if set(baseline.groups) != set(treatment.groups):
        raise ComparisonError("group sets differ between scenarios")
    return {
        "services": {
            s: {c: delta(baseline.services[s][c], treatment.services[s][c]) for c in COMPONENTS}
            for s in sorted(a)
        },
        "groups": {
            g: {c: delta(baseline.groups[g][c], treatment.groups[g][c]) for c in COMPONENTS}
            for g in sorted(baseline.groups)
        },
        "kpis": {k: delta(baseline.kpis.get(k), treatment.kpis.get(k)) for k in KPI_NAMES},
    }


def build_comparison(
    aggregates: Sequence[ScenarioAggregate],
    baseline_name: str,
    experiment: str,
    missing: Sequence[str] = (),
) -> dict:
    by_name = {a.name: a for a in aggregates}
    base = by_name.get(baseline_name)
    comparisons = {}
    if base is not None:
        for a in aggregates:
            if a.name != baseline_name:
                comparisons[a.name] = compare(base, a)
    return {
        "experiment": experiment,
        "baseline": baseline_name,
        "units": "J",
        "ci_level": CI_LEVEL,
        "ci_method": CI_METHOD,
        "disclosure": DOUBLE_COUNTING_DISCLOSURE,
        "scenario_order": [a.name for a in aggregates],
        "scenarios_without_results": list(missing),
        "scenarios": {a.name: a.to_dict() for a in aggregates},
        "comparisons": comparisons,
    }


SUMMARY_HEADER = (
    ["scenario", "kind", "name", "role", "n"]
    + [f"{c}_j_{s}" for c in COMPONENTS for s in ("mean", "ci_half_width")]
    + ["ci_available"]
)


def _num(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def summary_rows(aggregates: Sequence[ScenarioAggregate]) -> list[list[str]]:
    """One row per (scenario, service) and (scenario, group); joules at full precision."""
    rows = []
    for a in aggregates:
        entries = [("service", s, a.roles[s], a.services[s]) for s in sorted(a.services)]
        entries += [("group", g, "", a.groups[g]) for g in sorted(a.groups)]
        for kind, name, role, comps in entries:
            row = [a.name, kind, name, role, str(a.n_runs)]
            for c in COMPONENTS:
                row += [_num(comps[c].mean), _num(comps[c].half_width)]
            row.append("true" if comps["e_total"].ci_available else "false")
            rows.append(row)
    return rows


def render_summary_csv(aggregates: Sequence[ScenarioAggregate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    w.writerows(summary_rows(aggregates))
    return buf.getvalue()


def aggregate_all(results: Sequence[RunResult], order: Sequence[str]) -> tuple[list[ScenarioAggregate], list[str]]:
    grouped: dict[str, list[RunResult]] = {}
    for r in results:
        grouped.setdefault(r.scenario_name, []).append(r)
    unknown = sorted(set(grouped) - set(order))
    if unknown:
        raise ComparisonError(f"results for unplanned scenarios {unknown}")
    aggs = [aggregate_scenario(grouped[name]) for name in order if name in grouped]
    missing = [name for name in order if name not in grouped]
    return aggs, missing


def write_comparison(
    root: str | Path,
    results: Sequence[RunResult],
    order: Sequence[str],
    baseline_name: str,
    experiment: str,
) -> dict:
    """Write ``summary.csv`` and ``comparison.json``; both are byte-stable for equal inputs."""
    root = Path(root)
    aggs, missing = aggregate_all(results, order)
    report = build_comparison(aggs, baseline_name, experiment, missing)
    for name, text in (("summary.csv", render_summary_csv(aggs)), ("comparison.json", dumps(report))):
        tmp = root / (name + ".tmp")
        tmp.write_text(text)
        tmp.replace(root / name)
    return report
