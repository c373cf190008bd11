"""Human- and machine-readable reports built from an experiment archive.

Display values are Wh rounded half-even to 0.1; anything that rounds
below 0.1 Wh is shown as "-". Archived joules are never rounded.
"""

from __future__ import annotations

import csv
import io
import json
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Any, Mapping

from .engine.results import ALL_GROUP, dumps
from .topology import AUXILIARY, PRIMARY
from .units import JOULES_PER_WH

REPORT_VERSION = 1
FORMATS = ("md", "csv", "json")
OMIT_BELOW_WH = Decimal("0.1")
COLUMNS = ("e_compute", "e_network", "e_storage", "e_total")
PROJECTION_COLUMNS = (
    ("storage_bytes", "stored TB"),
    ("network_rx_bytes", "inbound TB"),
    ("network_tx_bytes", "outbound TB"),
    ("write_bytes", "written TB"),
)


class ReportError(ValueError):
    pass


def round_wh(joules: float) -> Decimal:
    """Joules to Wh at 0.1 resolution, ties to even."""
    return (Decimal(repr(float(joules))) / Decimal(int(JOULES_PER_WH))).quantize(Decimal("0.1"), ROUND_HALF_EVEN)


def display_wh(joules: float) -> str:
    wh = round_wh(joules)
    return "-" if wh < OMIT_BELOW_WH else str(wh)


def _mean(agg: Mapping | None) -> float | None:
    return None if agg is None else agg["mean"]


def build_report(comparison: Mapping[str, Any]) -> dict:
    """Flatten a comparison record into table rows, KPI rows and projections."""
    try:
        scenarios = comparison["scenarios"]
        order = comparison["scenario_order"]
        baseline = comparison["baseline"]
    except KeyError as exc:
        raise ReportError(f"not a comparison record: missing {exc}") from exc
    if not order:
        raise ReportError("archive holds no completed runs")
    rows, kpis, projections = [], [], []
    for name in order:
        sc = scenarios[name]
        services = sc["services"]
        entries = [(PRIMARY, "All", sc["groups"][PRIMARY])]
        aux = sorted(s for s, v in services.items() if v["role"] == AUXILIARY)
        entries += [(AUXILIARY, s, services[s]) for s in aux]
        entries += [(AUXILIARY, "All", sc["groups"][AUXILIARY]), ("total", "All", sc["groups"][ALL_GROUP])]
        for group, service, comps in entries:
            row = {"experiment": name, "group": group, "service": service}
            for c in COLUMNS:
                row[f"{c}_j"] = comps[c]["mean"]
                row[f"{c}_wh"] = str(round_wh(comps[c]["mean"]))
            rows.append(row)
        total = sc["groups"][ALL_GROUP]["e_total"]
        cmp = comparison.get("comparisons", {}).get(name)
        k = sc["kpis"]
        kpis.append(
            {
                "experiment": name,
                "n_runs": sc["n_runs"],
                "e_total_j": total["mean"],
                "e_total_ci_half_width_j": total["ci_half_width"],
                "ci_available": total["ci_available"],
                "delta_total_rel": None if cmp is None else cmp["groups"][ALL_GROUP]["e_total"]["rel_delta"],
                "underestimation_ratio_auxiliary": _mean(k.get("underestimation_ratio_auxiliary")),
                "underestimation_ratio_all": _mean(k.get("underestimation_ratio_all")),
                "wh_per_trace": _mean(k.get("wh_per_trace")),
                "trace_count": _mean(k.get("trace_count")),
            }
        )
        for s in sorted(sc["projections"]):
            p = sc["projections"][s]
            row = {"experiment": name, "service": s}
            for q, _ in PROJECTION_COLUMNS:
                row[q] = p[q]["mean"]
            row["e_total_j"] = p["e_total_j"]["mean"]
            projections.append(row)
    return {
        "report_version": REPORT_VERSION,
        "experiment": comparison.get("experiment"),
        "baseline": baseline,
        "ci_method": comparison.get("ci_method"),
        "ci_level": comparison.get("ci_level"),
        "disclosure": comparison.get("disclosure"),
        "projection_days": 30,
        "scenario_order": list(order),
        "rows": rows,
        "kpis": kpis,
        "projections": projections,
    }


def load_report_source(path: str | Path) -> dict:
    """Report from an archive directory, a comparison.json or a report JSON."""
    path = Path(path)
    target = path / "comparison.json" if path.is_dir() else path
    try:
        data = json.loads(target.read_text())
    except FileNotFoundError as exc:
        raise ReportError(f"{path}: empty archive, no comparison.json") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportError(f"{target}: {exc}") from exc
    if isinstance(data, dict) and data.get("report_version") == REPORT_VERSION:
        return data
    return build_report(data)


def _fmt(x: float | None, spec: str) -> str:
    return "n/a" if x is None else format(x, spec)


def _tb(x: float) -> str:
    return format(x / 1e12, ".2f")


def render_markdown(report: Mapping[str, Any]) -> str:
    out = [f"# Energy report: {report['experiment']}", ""]
    out.append(f"Baseline: `{report['baseline']}`. Values in Wh, {report['ci_method']} at {report['ci_level']}.")
    out.append('Values < 0.1 Wh shown as "-".')
    out.append("")
    for name in report["scenario_order"]:
        out += [f"## {name}", "", "| Group | Service | E_compute | E_network | E_storage | E_total |", "|---|---|---:|---:|---:|---:|"]
        for r in report["rows"]:
            if r["experiment"] != name:
                continue
            cells = [display_wh(r[f"{c}_j"]) for c in COLUMNS]
            out.append(f"| {r['group']} | {r['service']} | " + " | ".join(cells) + " |")
        out.append("")
    out += [
        "## Key indicators",
        "",
        "| Experiment | Runs | E_total (Wh) | vs baseline | Underestimation (auxiliary) | Underestimation (all) | Wh/trace |",
        "|---|---:|---:|---:|---:|---:|---:|",
    ]
    for k in report["kpis"]:
        total = str(round_wh(k["e_total_j"]))
        if k["ci_available"]:
            total += f" ± {round_wh(k['e_total_ci_half_width_j'])}"
        else:
            total += " (no CI)"
        rel = "n/a" if k["delta_total_rel"] is None else f"{k['delta_total_rel'] * 100:+.1f}%"
        out.append(
            f"| {k['experiment']} | {k['n_runs']} | {total} | {rel} | "
            f"{_fmt(k['underestimation_ratio_auxiliary'], '.3f')} | {_fmt(k['underestimation_ratio_all'], '.3f')} | "
            f"{_fmt(k['wh_per_trace'], '.3e')} |"
        )
    out += [
        "",
        f"## {report['projection_days']}-day projection",
        "",
        "Linear extrapolation of the analysed window at constant load.",
        "",
        "| Experiment | Service | " + " | ".join(label for _, label in PROJECTION_COLUMNS) + " | Energy (kWh) |",
        "|---|---|" + "---:|" * (len(PROJECTION_COLUMNS) + 1),
    ]
    for p in report["projections"]:
        if p["storage_bytes"] == 0 and p["network_rx_bytes"] == 0 and p["e_total_j"] == 0:
            continue
        cells = [_tb(p[q]) for q, _ in PROJECTION_COLUMNS] + [format(p["e_total_j"] / 3.6e6, ".2f")]
        out.append(f"| {p['experiment']} | {p['service']} | " + " | ".join(cells) + " |")
    if report.get("disclosure"):
        out += ["", f"Note: {report['disclosure']}"]
    return "\n".join(out) + "\n"


def render_csv(report: Mapping[str, Any]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["experiment", "group", "service"] + [f"{c}_wh" for c in COLUMNS] + [f"{c}_j" for c in COLUMNS]
    w.writerow(header)
    for r in report["rows"]:
        w.writerow([r["experiment"], r["group"], r["service"]] + [r[f"{c}_wh"] for c in COLUMNS] + [repr(r[f"{c}_j"]) for c in COLUMNS])
    return buf.getvalue()


def render(report: Mapping[str, Any], fmt: str) -> str:
    if fmt == "md":
        return render_markdown(report)
    if fmt == "csv":
        return render_csv(report)
    if fmt == "json":
        return dumps(report)
    raise ReportError(f"unknown format {fmt!r}; choose from {FORMATS}")
