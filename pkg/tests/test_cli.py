from __future__ import annotations

import json
import subprocess
import sys

import pytest
import yaml

from conftest import FIXTURES, SPECS, small_spec_dict
from svcenergy.cli import main


def write_spec(tmp_path, **over):
    p = tmp_path / "spec.yaml"
    p.write_text(yaml.safe_dump(small_spec_dict(**over)))
    return p


def test_simulate_writes_streams(tmp_path, capsys):
    spec = write_spec(tmp_path, treatments=[], repetitions=1)
    assert main(["simulate", str(spec), "--out", str(tmp_path / "s")]) == 0
    run = tmp_path / "s" / "baseline" / "0"
    assert (run / "manifest.json").is_file() and any((run / "streams").iterdir())


def test_baseline_spec_simulates_70_minutes(tmp_path):
    p = tmp_path / "full.yaml"
    p.write_text(yaml.safe_dump({"name": "full", "repetitions": 1, "baseline": {},
                                 "intensities": {"reference_year": 2025, "retention_days": 30}}))
    assert main(["simulate", str(p), "--out", str(tmp_path / "s")]) == 0
    truth = json.loads((tmp_path / "s" / "baseline" / "0" / "ground_truth.json").read_text())
    w = truth["window"]
    assert w["run_end_ms"] - w["run_start_ms"] == 70 * 60_000


def test_bad_yaml_exit_2(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("name: [")
    assert main(["run", str(p)]) == 2
    assert main(["simulate", str(p)]) == 2


def test_unknown_treatment_exit_2(tmp_path):
    spec = write_spec(tmp_path, treatments=[{"name": "x", "kind": "cpu_limit", "parameter": 1}])
    assert main(["run", str(spec), "--out", str(tmp_path / "o")]) == 2


def test_existing_output_exit_3(tmp_path):
    spec = write_spec(tmp_path, treatments=[], repetitions=1)
    out = tmp_path / "o"
    out.mkdir()
    (out / "x").write_text("1")
    assert main(["simulate", str(spec), "--out", str(out)]) == 3
    assert main(["run", str(spec), "--out", str(out)]) == 3
    assert main(["run", str(spec), "--out", str(out), "--force"]) == 0


def test_run_and_report(tmp_path, capsys):
    spec = write_spec(tmp_path, repetitions=1)
    out = tmp_path / "o"
    assert main(["--workers", "2", "run", str(spec), "--out", str(out)]) == 0
    rows = (out / "summary.csv").read_text().strip().splitlines()
    assert len(rows) - 1 == 2 * (20 + 3)
    capsys.readouterr()
    assert main(["report", str(out), "--format", "md"]) == 0
    assert "no CI" in capsys.readouterr().out
    assert main(["compare", str(out)]) == 0


def test_run_failure_exit_4(tmp_path, monkeypatch):
    from svcenergy.engine import run as run_mod

    def boom(*a, **kw):
        raise RuntimeError("boom")

    monkeypatch.setattr(run_mod, "_simulate", boom)
    spec = write_spec(tmp_path, treatments=[], repetitions=1)
    assert main(["run", str(spec), "--out", str(tmp_path / "o")]) == 4


def test_compute_zero_usage(tmp_path, capsys):
    p = tmp_path / "u.json"
    p.write_text(json.dumps({"containers": {"a-0/a": {"cpu_joules": 0, "memory_joules": 0, "network_bytes": 0,
                                                      "storage_bytes": 0, "window_start_ms": 0, "window_end_ms": 1}}}))
    assert main(["compute", str(p), "--reference-year", "2025", "--retention-days", "30"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["containers"]["a-0/a"]["e_total"] == 0


def test_compute_missing_intensity_exit_2(capsys):
    assert main(["compute", str(FIXTURES / "es_tracing_high_usage.json"), "--retention-days", "30"]) == 2


def test_compute_schema_mismatch(tmp_path):
    p = tmp_path / "u.json"
    p.write_text(json.dumps({"containers": {"a": {"cpu": 1}}}))
    assert main(["compute", str(p), "--reference-year", "2025", "--retention-days", "30"]) == 2
    p.write_text("[]")
    assert main(["compute", str(p), "--reference-year", "2025", "--retention-days", "30"]) == 2


def test_compute_intensities_file(tmp_path, capsys):
    cfg = tmp_path / "i.yaml"
    cfg.write_text("intensities:\n  network_kwh_per_gb: 0.001875\n  retention_days: 30\n")
    assert main(["compute", str(FIXTURES / "es_tracing_high_usage.json"), "--intensities", str(cfg)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["services"]["elasticsearch"]["e_network"] > 0


def test_compute_recomputes_archived_run(small_archive, tmp_path, capsys):
    run = small_archive / "tracing-high" / "0"
    assert main(["compute", str(run / "usage.json"), "--reference-year", "2025", "--retention-days", "30",
                 "-o", str(tmp_path / "e.json")]) == 0
    mine = json.loads((tmp_path / "e.json").read_text())
    archived = json.loads((run / "energy.json").read_text())
    assert mine["services"] == {k: {kk: vv for kk, vv in v.items() if kk != "role"} for k, v in archived["services"].items()}


def test_global_flags_after_subcommand(tmp_path):
    spec = write_spec(tmp_path, treatments=[], repetitions=1)
    assert main(["run", str(spec), "--out", str(tmp_path / "o"), "--seed", "3", "--workers", "2"]) == 0
    meta = json.loads((tmp_path / "o" / "experiment.json").read_text())
    assert meta["seed"] == 3


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "svcenergy.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "simulate" in r.stdout


def test_report_empty_archive_exit_2(tmp_path):
    assert main(["report", str(tmp_path)]) == 2
