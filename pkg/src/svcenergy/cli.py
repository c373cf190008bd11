"""``svcenergy`` command line.

Exit codes: 0 success, 2 spec or validation error, 3 filesystem conflict,
4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import yaml

from .engine.compare import ComparisonError, write_comparison
from .engine.results import dumps, evaluate
from .engine.run import OutputConflictError, RunError, load_archive, prepare_output, run_experiment
from .engine.spec import LIVE, SpecError, load_spec, plan_runs
from .ingest.usage import MappingError
from .model import (
    APPORTIONED,
    ATTRIBUTION_MODES,
    DOUBLE_COUNTING_DISCLOSURE,
    EnergyIntensityConfig,
    ModelError,
    UsageVector,
    container_energy,
)
from .report import FORMATS, ReportError, load_report_source, render
from .sim.generate import SimulationError, generate_run
from .sim.profiles import ProfileError, calibrate_default_profiles, load_profiles
from .sim.scenario import ScenarioError
from .topology import ServiceTopology, TopologyError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONFLICT = 3
EXIT_RUNTIME = 4

VALIDATION_ERRORS = (SpecError, ModelError, ScenarioError, MappingError, TopologyError, ProfileError, ReportError, ComparisonError)

log = logging.getLogger("svcenergy")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = load_spec(args.spec, seed=args.seed, output_dir=args.out)
    if spec.mode == LIVE:
        raise CliError("simulate needs a spec in simulate mode", EXIT_VALIDATION)
    profiles = load_profiles(spec.profiles) if spec.profiles else calibrate_default_profiles()
    prepare_output(spec.output_dir, spec.scenario_names, args.force)
    runs = plan_runs(spec)
    for run in runs:
        target = spec.output_dir / run.scenario_name / str(run.repetition)
        g = generate_run(run.scenario, profiles, target, overwrite=args.force)
        log.info("%s: %d containers, window %.0f-%.0f ms", run.key, len(g.topology.containers), g.window.lo, g.window.hi)
    print(f"wrote {len(runs)} simulated runs to {spec.output_dir}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    spec = load_spec(args.spec, seed=args.seed, output_dir=args.out)
    outcome = run_experiment(spec, workers=args.workers, force=args.force)
    print(f"{len(outcome.results)} runs completed, {len(outcome.failures)} failed; archive at {spec.output_dir}")
    for f in outcome.failures:
        print(f"  failed {f.scenario}/{f.repetition}: {f.error_type}: {f.message}", file=sys.stderr)
    return EXIT_RUNTIME if outcome.failures else EXIT_OK


def _intensities(args: argparse.Namespace) -> EnergyIntensityConfig:
    if args.intensities:
        try:
            cfg = yaml.safe_load(Path(args.intensities).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise CliError(f"{args.intensities}: {exc}", EXIT_VALIDATION) from exc
        if isinstance(cfg, dict) and "intensities" in cfg:
            cfg = cfg["intensities"]
    else:
        cfg = {
            k: v
            for k, v in {
                "network_kwh_per_gb": args.network_kwh_per_gb,
                "reference_year": args.reference_year,
                "retention_days": args.retention_days,
                "storage_kwh_per_gb": args.storage_kwh_per_gb,
            }.items()
            if v is not None
        }
        if args.network_direction:
            cfg["network_direction"] = args.network_direction
    return EnergyIntensityConfig.from_config(cfg)


def cmd_compute(args: argparse.Namespace) -> int:
    intensities = _intensities(args)
    try:
        doc = json.loads(Path(args.usage).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"{args.usage}: {exc}", EXIT_VALIDATION) from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("containers"), dict):
        raise CliError(f"{args.usage}: expected an object with a 'containers' mapping", EXIT_VALIDATION)
    try:
        usage = {cid: UsageVector.from_dict(u) for cid, u in doc["containers"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{args.usage}: schema mismatch: {exc}", EXIT_VALIDATION) from exc
    out: dict = {
        "units": "J",
        "intensities": intensities.to_dict(),
        "attribution_mode": args.attribution_mode,
        "disclosure": DOUBLE_COUNTING_DISCLOSURE,
    }
    topo = doc.get("topology")
    if args.topology:
        topo = ServiceTopology.load(args.topology).to_dict()
    if topo and usage:
        ev = evaluate(usage, ServiceTopology.from_dict(topo), intensities, args.attribution_mode)
        out["containers"] = {k: v.to_dict() for k, v in ev.containers.items()}
        out["services"] = {k: v.to_dict() for k, v in ev.services.items()}
        out["groups"] = {k: v.to_dict() for k, v in ev.groups.items()}
        out["kpis"] = ev.kpis
    else:
        out["containers"] = {k: container_energy(u, intensities).to_dict() for k, u in sorted(usage.items())}
    _emit(dumps(out), args.output)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report = load_report_source(args.archive)
    _emit(render(report, args.format), args.output)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        meta, results = load_archive(args.archive)
    except RunError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from exc
    if not results:
        raise CliError(f"{args.archive}: no completed runs", EXIT_VALIDATION)
    target = Path(args.out) if args.out else Path(args.archive)
    if args.out:
        if target.exists() and any(target.iterdir()) and not args.force:
            raise OutputConflictError(f"output directory {target} is not empty (use --force to overwrite)")
        target.mkdir(parents=True, exist_ok=True)
    baseline = args.baseline or meta["baseline"]
    if baseline not in meta["scenarios"]:
        raise CliError(f"unknown baseline scenario {baseline!r}", EXIT_VALIDATION)
    order = [baseline] + [s for s in meta["scenarios"] if s != baseline]
    write_comparison(target, results, order, baseline, meta["name"])
    print(f"wrote summary.csv and comparison.json to {target}")
    return EXIT_OK


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(None), help="override the experiment seed")
    parser.add_argument("--workers", type=int, default=d(1), help="parallel runs (default 1)")
    parser.add_argument("--force", action="store_true", default=d(False), help="overwrite existing output")
    parser.add_argument("--out", default=d(None), help="output directory (overrides the experiment file)")
    parser.add_argument("-v", "--verbose", action="count", default=d(0))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="svcenergy", description="Energy accounting for microservice experiments.")
    _global_options(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help)
        _global_options(sp, suppress=True)
        return sp

    s = add("simulate", "write simulated metric streams for every planned run")
    s.add_argument("spec")
    s.set_defaults(func=cmd_simulate)

    s = add("run", "plan, execute, aggregate and compare an experiment")
    s.add_argument("spec")
    s.set_defaults(func=cmd_run)

    s = add("compute", "recompute energy from a recorded usage.json")
    s.add_argument("usage")
    s.add_argument("--intensities", help="YAML/JSON file with an intensity mapping")
    s.add_argument("--network-kwh-per-gb", type=float)
    s.add_argument("--reference-year", type=int)
    s.add_argument("--retention-days", type=float)
    s.add_argument("--storage-kwh-per-gb", type=float)
    s.add_argument("--network-direction", choices=("tx", "rx", "both"))
    s.add_argument("--attribution-mode", choices=ATTRIBUTION_MODES, default=APPORTIONED)
    s.add_argument("--topology", help="topology file, if usage.json does not embed one")
    s.add_argument("-o", "--output", help="write energy.json here instead of stdout")
    s.set_defaults(func=cmd_compute)

    s = add("report", "render an archive as markdown, CSV or JSON")
    s.add_argument("archive", help="archive directory, comparison.json or report JSON")
    s.add_argument("--format", choices=FORMATS, default="md")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_report)

    s = add("compare", "recompute summary.csv and comparison.json from archived runs")
    s.add_argument("archive")
    s.add_argument("--baseline", help="scenario to compare against (default: the experiment baseline)")
    s.set_defaults(func=cmd_compare)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OutputConflictError, FileExistsError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFLICT
    except Exception as exc:
        log.debug("unhandled", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
