"""Executing planned runs and persisting them as an archive.

Layout under the output directory::

    experiment.json           spec echo, run plan, failures
    failures.json             one record per failed run
    patches.json              custom-patch treatments as applied (live mode)
    <scenario>/<rep>/         usage.json, energy.json, diagnostics.json
    summary.csv, comparison.json

A run is written into ``.staging`` and renamed into place, so a run
directory either holds a complete record or does not exist.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
import threading
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..ingest import (
    MetricsClient,
    MetricsEndpointError,
    RunWindow,
    build_usage,
    load_pv_sizes,
    load_scrape_dir,
)
from ..sim.generate import generate_run
from ..sim.profiles import ProfileSet, calibrate_default_profiles, load_profiles
from ..sim.scenario import patch_descriptor
from ..topology import ServiceTopology
from .results import RunResult, dumps, evaluate
from .spec import LIVE, ExperimentSpec, PlannedRun, plan_runs

log = logging.getLogger(__name__)

STAGING = ".staging"
ARCHIVE_FILES = ("experiment.json", "failures.json", "patches.json", "summary.csv", "comparison.json")


class OutputConflictError(RuntimeError):
    """The output directory already holds results and overwriting was not allowed."""


class RunError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunFailure:
    scenario: str
    repetition: int
    seed: int
    error_type: str
    message: str

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "repetition": self.repetition,
            "seed": self.seed,
            "error_type": self.error_type,
            "message": self.message,
        }


class Archive:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    def run_dir(self, scenario: str, repetition: int) -> Path:
        return self.root / scenario / str(repetition)

    def commit_run(self, result: RunResult, extra: dict[str, Path] | None = None) -> Path:
        staging = self.root / STAGING
        staging.mkdir(parents=True, exist_ok=True)
        tmp = Path(tempfile.mkdtemp(prefix=f"{result.scenario_name}.{result.repetition}.", dir=staging))
        (tmp / "usage.json").write_text(dumps(result.usage_doc()))
        (tmp / "energy.json").write_text(dumps(result.energy_doc()))
        (tmp / "diagnostics.json").write_text(dumps(result.diagnostics_doc()))
        for name, src in (extra or {}).items():
            shutil.copytree(src, tmp / name)
        final = self.run_dir(result.scenario_name, result.repetition)
        with self._lock:
            final.parent.mkdir(parents=True, exist_ok=True)
            if final.exists():
                shutil.rmtree(final)
            os.replace(tmp, final)
        return final

    def write(self, name: str, text: str) -> Path:
        path = self.root / name
        with self._lock:
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_text(text)
            os.replace(tmp, path)
        return path

    def cleanup(self) -> None:
        shutil.rmtree(self.root / STAGING, ignore_errors=True)


def prepare_output(root: Path, scenarios: list[str], force: bool) -> None:
    """Refuse a non-empty directory unless ``force``; then remove only archive entries."""
    if root.exists() and not root.is_dir():
        raise OutputConflictError(f"{root} exists and is not a directory")
    if root.exists() and any(root.iterdir()):
        if not force:
            raise OutputConflictError(f"output directory {root} is not empty (use --force to overwrite)")
        for name in (*ARCHIVE_FILES, STAGING):
            p = root / name
            if p.is_dir():
                shutil.rmtree(p)
            elif p.exists():
                p.unlink()
        for name in scenarios:
            shutil.rmtree(root / name, ignore_errors=True)
    root.mkdir(parents=True, exist_ok=True)


def _profiles_for(spec: ExperimentSpec) -> ProfileSet:
    return load_profiles(spec.profiles) if spec.profiles else calibrate_default_profiles()


def _simulate(run: PlannedRun, spec: ExperimentSpec, profiles: ProfileSet, work: Path):
    g = generate_run(run.scenario, profiles, work)
    series = load_scrape_dir(g.streams)
    return g.topology, g.window, series, g.pv_sizes


def _live(run: PlannedRun, spec: ExperimentSpec, topology: ServiceTopology, client: MetricsClient):
    windows = spec.live.windows.get(run.scenario_name, ())
    if run.repetition >= len(windows):
        raise RunError(f"no live window recorded for {run.key}")
    start_ms, end_ms = windows[run.repetition]
    base = spec.baseline
    window = RunWindow(start_ms, end_ms, base.warmup_min * 60_000.0, base.cooldown_min * 60_000.0)
    series = []
    for name in spec.mapping.exact_names:
        series.extend(client.query_range(name, start_ms / 1000.0, end_ms / 1000.0, spec.live.step_s))
    pv_files = spec.live.pv_sizes.get(run.scenario_name, ())
    pv_path = pv_files[run.repetition] if run.repetition < len(pv_files) else None
    pv = load_pv_sizes(pv_path) if pv_path else {}
    return topology, window, series, pv


class _Context:
    """Shared, read-only inputs for every run of one experiment."""

    def __init__(self, spec: ExperimentSpec, profiles: ProfileSet | None, client: MetricsClient | None):
        self.spec = spec
        self.profiles = None
        self.topology = None
        self.client = client
        # reported per run, so a missing endpoint yields failure records
        self.client_error: Exception | None = None
        if spec.mode == LIVE:
            self.topology = ServiceTopology.load(spec.topology)
            if self.client is None:
                try:
                    self.client = MetricsClient.from_env(spec.live.endpoint, spec.live.timeout_s)
                except MetricsEndpointError as exc:
                    self.client_error = exc
        else:
            self.profiles = profiles or _profiles_for(spec)


def execute_run(run: PlannedRun, ctx: _Context, archive: Archive) -> RunResult:
    spec = ctx.spec
    t0 = time.perf_counter()
    work_root = archive.root / STAGING
    work_root.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(prefix="work.", dir=work_root) as tmp:
        if spec.mode == LIVE:
            if ctx.client_error is not None:
                raise ctx.client_error
            topology, window, series, pv = _live(run, spec, ctx.topology, ctx.client)
        else:
            topology, window, series, pv = _simulate(run, spec, ctx.profiles, Path(tmp) / "sim")
        t_collect = time.perf_counter()
        build = build_usage(series, spec.mapping, topology, window, pv, spec.intensities.network_direction)
        t_ingest = time.perf_counter()
        ev = evaluate(build.usage, topology, spec.intensities, spec.attribution_mode)
        t_eval = time.perf_counter()
        diagnostics = build.diagnostics.to_dict()
        if run.treatment is not None:
            diagnostics["treatment"] = patch_descriptor(run.treatment)
        result = RunResult(
            scenario_name=run.scenario_name,
            repetition=run.repetition,
            seed=run.seed,
            scenario=run.scenario.to_dict(),
            topology=topology,
            usage=build.usage,
            evaluation=ev,
            attribution_mode=spec.attribution_mode,
            intensities=spec.intensities,
            diagnostics=diagnostics,
            timing={
                "collect_s": t_collect - t0,
                "ingest_s": t_ingest - t_collect,
                "evaluate_s": t_eval - t_ingest,
            },
        )
        extra = {"streams": Path(tmp) / "sim" / "streams"} if spec.keep_streams and spec.mode != LIVE else None
        archive.commit_run(result, extra)
    return result


@dataclass
class ExperimentOutcome:
    spec: ExperimentSpec
    results: list[RunResult] = field(default_factory=list)
    failures: list[RunFailure] = field(default_factory=list)

    @property
    def output_dir(self) -> Path:
        return self.spec.output_dir


def run_experiment(
    spec: ExperimentSpec,
    workers: int = 1,
    force: bool = False,
    profiles: ProfileSet | None = None,
    client: MetricsClient | None = None,
) -> ExperimentOutcome:
    """Execute every planned run, isolate failures, then write the comparison.

    Results do not depend on ``workers``: each run has its own seed and
    writes only its own directory.
    """
    from .compare import write_comparison

    if workers < 1:
        raise ValueError("workers must be >= 1")
    plan = plan_runs(spec)
    root = spec.output_dir
    prepare_output(root, spec.scenario_names, force)
    archive = Archive(root)
    ctx = _Context(spec, profiles, client)

    def attempt(run: PlannedRun) -> RunResult | RunFailure:
        try:
            return execute_run(run, ctx, archive)
        except Exception as exc:  # one failed run must not stop the others
            log.warning("run %s failed: %s", run.key, exc)
            log.debug("%s", traceback.format_exc())
            return RunFailure(run.scenario_name, run.repetition, run.seed, type(exc).__name__, str(exc))

    if workers == 1:
        outcomes = [attempt(r) for r in plan]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(attempt, plan))
    archive.cleanup()

    outcome = ExperimentOutcome(spec)
    for o in outcomes:
        (outcome.failures if isinstance(o, RunFailure) else outcome.results).append(o)

    archive.write("failures.json", dumps([f.to_dict() for f in outcome.failures]))
    patches = {t.name: patch_descriptor(t) for t in spec.treatments}
    archive.write("patches.json", dumps(patches))
    archive.write(
        "experiment.json",
        dumps(
            {
                "name": spec.name,
                "mode": spec.mode,
                "seed": spec.seed,
                "repetitions": spec.repetitions,
                "attribution_mode": spec.attribution_mode,
                "intensities": spec.intensities.to_dict(),
                "baseline": spec.baseline.name,
                "scenarios": spec.scenario_names,
                "spec": _jsonable(spec.raw),
                "plan": [{"scenario": r.scenario_name, "repetition": r.repetition, "seed": r.seed} for r in plan],
                "failures": len(outcome.failures),
            }
        ),
    )
    if outcome.results:
        write_comparison(root, outcome.results, spec.scenario_names, spec.baseline.name, spec.name)
    return outcome


def _jsonable(data):
    return json.loads(json.dumps(data, default=str))


def load_archive(root: str | Path) -> tuple[dict, list[RunResult]]:
    """Experiment metadata and every completed run, in plan order."""
    root = Path(root)
    try:
        meta = json.loads((root / "experiment.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise RunError(f"{root}: not an experiment archive: {exc}") from exc
    results = []
    for entry in meta["plan"]:
        d = root / entry["scenario"] / str(entry["repetition"])
        if (d / "energy.json").exists():
            results.append(RunResult.load(d))
    return meta, results
