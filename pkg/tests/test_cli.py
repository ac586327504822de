import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

import oracles
from ymhflow import higgs
from ymhflow.cli import main
from ymhflow.flow import TRACE_COLUMNS
from ymhflow.groups import descriptor
from ymhflow.higgs import HiggsPair
from ymhflow.persist import load_checkpoint, save_checkpoint
from ymhflow.torus import make_grid

E12 = np.array([[0, 1], [0, 0]], dtype=complex)


def write_config(path, **keys):
    path.write_text(json.dumps(keys))
    return str(path)


def read_trace(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_run_s1(tmp_path):
    out = tmp_path / "s1"
    cfg = write_config(tmp_path / "c.json", **{"grid.N": 16, "scenario.name": "S1", "output.dir": str(out)})
    assert main(["run", cfg]) == 0
    header, rows = read_trace(out / "trace.csv")
    assert tuple(header) == TRACE_COLUMNS
    assert rows.shape == (1, 7) and rows[0, 2] == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["stop_reason"] == "Converged" and summary["ymh"] == 0
    assert summary["config"]["scenario.name"] == "S1"
    assert "wall_time_s" in summary
    assert {"slopes", "higgs_residual", "offalg_residual", "hitchin_drift"} <= set(summary)
    assert load_checkpoint(out / "final.ckpt").group == descriptor("SL", 2)


def test_golden_s1_trace(tmp_path):
    out = tmp_path / "s1"
    cfg = write_config(tmp_path / "c.json", **{"grid.N": 16, "scenario.name": "S1", "output.dir": str(out)})
    main(["run", cfg])
    golden = "step,t,ymh,grad_norm,higgs_residual,offalg_residual,hitchin_drift\n0,0.0,0.0,0.0,0.0,0.0,0.0\n"
    assert (out / "trace.csv").read_text() == golden


def test_run_s2_closed_form_energy(tmp_path):
    out = tmp_path / "s2"
    cfg = write_config(tmp_path / "c.json", **{"grid.N": 8, "scenario.name": "S2", "flow.t_max": 10.0,
                                               "flow.monitor_every": 1000, "output.dir": str(out)})
    assert main(["run", cfg]) == 2  # MaxTime: the tail converges only polynomially
    summary = json.loads((out / "summary.json").read_text())
    assert summary["t"] == pytest.approx(10.0, abs=1e-12)
    assert summary["ymh"] == pytest.approx(2 * (1 + 4 * 10.0) ** -2, rel=1e-4)
    assert summary["stop_reason"] == "MaxTime"


def test_run_config_errors(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", **{"grid.N": 16, "flow.tmax": 1})
    assert main(["run", cfg]) == 64
    assert "flow.tmax" in capsys.readouterr().err
    cfg = write_config(tmp_path / "c.json", **{"grid.N": 15})
    assert main(["run", cfg]) == 64
    assert "grid.N" in capsys.readouterr().err
    cfg = write_config(tmp_path / "c.json", **{"scenario.name": "S99"})
    assert main(["run", cfg]) == 64
    cfg = write_config(tmp_path / "c.json", **{"scenario.name": "S2", "scenario.params.radius": 2})
    assert main(["run", cfg]) == 64
    assert main(["run", str(tmp_path / "missing.json")]) == 74
    assert main(["frobnicate"]) == 64
    assert main(["run"]) == 64


def test_run_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = write_config(tmp_path / "c.json", **{"grid.N": 8, "output.dir": str(blocker / "sub")})
    assert main(["run", cfg]) == 74


def test_verify_passes():
    buf = io.StringIO()
    from ymhflow.cli import cmd_verify

    assert cmd_verify(out=buf) == 0
    text = buf.getvalue()
    for name in ("gradient-oracle", "tangency", "isometry", "higgs-preservation", "monotonicity",
                 "hitchin-conservation"):
        assert name in text
    assert "FAIL" not in text


def test_verify_negative_control(monkeypatch):
    from ymhflow.cli import cmd_verify

    monkeypatch.setattr(higgs, "GRADIENT_SCALE", -4.0)
    buf = io.StringIO()
    assert cmd_verify(out=buf) == 1
    assert "FAILED: gradient-oracle" in buf.getvalue()


def test_verify_deterministic_report():
    from ymhflow.cli import cmd_verify

    a, b = io.StringIO(), io.StringIO()
    cmd_verify(out=a)
    cmd_verify(out=b)
    assert a.getvalue() == b.getvalue()


def test_deterministic_runs_are_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}"
        cfg = write_config(tmp_path / f"c{i}.json", **{
            "grid.N": 16, "scenario.name": "S5", "flow.t_max": 0.02, "flow.monitor_every": 5,
            "deterministic": True, "seed": 3, "output.dir": str(out)})
        main(["run", cfg])
        outs.append(out)
    for name in ("trace.csv", "final.ckpt", "initial.ckpt"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    s0 = json.loads((outs[0] / "summary.json").read_text())
    s1 = json.loads((outs[1] / "summary.json").read_text())
    s0["config"].pop("output.dir")
    s1["config"].pop("output.dir")
    assert s0 == s1 and "wall_time_s" not in s0


def test_resume_reproduces_trace(tmp_path):
    # dyadic dt and times: the break point lies exactly on the step grid
    base = {"grid.N": 16, "scenario.name": "S5", "flow.monitor_every": 10, "deterministic": True,
            "flow.tol_grad": 0.0, "flow.dt": 2.0**-11}
    full = tmp_path / "full"
    main(["run", write_config(tmp_path / "a.json", **base, **{"flow.t_max": 2.0**-5, "output.dir": str(full)})])
    part = tmp_path / "part"
    main(["run", write_config(tmp_path / "b.json", **base, **{"flow.t_max": 2.0**-6, "output.dir": str(part)})])
    cfg = write_config(tmp_path / "c.json", **base, **{"flow.t_max": 2.0**-5, "output.dir": str(part)})
    assert main(["run", cfg, "--resume"]) == 2
    h1, r1 = read_trace(full / "trace.csv")
    h2, r2 = read_trace(part / "trace.csv")
    assert h1 == h2
    # the interrupted run also recorded its final state at the break point (step 32)
    assert 32 in r2[:, 0] and 32 not in r1[:, 0]
    r2 = r2[r2[:, 0] != 32]
    assert r1.shape == r2.shape
    np.testing.assert_allclose(r2, r1, rtol=1e-12, atol=1e-12)
    a = load_checkpoint(full / "final.ckpt")
    b = load_checkpoint(part / "final.ckpt")
    assert np.max(np.abs(a.alpha.data - b.alpha.data)) < 1e-12


def test_resume_without_checkpoint(tmp_path):
    cfg = write_config(tmp_path / "c.json", **{"grid.N": 8, "output.dir": str(tmp_path / "nothing")})
    assert main(["run", cfg, "--resume"]) == 74


def _late_extension(tmp_path):
    g = make_grid(16)
    c = oracles.closed_form_modulus(2.5e5)
    path = tmp_path / "late.ckpt"
    save_checkpoint(path, HiggsPair.constant(g, descriptor("SL", 2), alpha=c * E12))
    return path


def test_classify_pass_with_h0(tmp_path, capsys):
    path = _late_extension(tmp_path)
    report = tmp_path / "report.json"
    assert main(["classify", str(path), "S2", "--report", str(report)]) == 0
    doc = json.loads(report.read_text())
    assert doc["verdict"] == "PASS" and doc["report"]["h0"] == 2
    assert json.loads(capsys.readouterr().out) == doc


def test_classify_fail_and_inconclusive(tmp_path):
    path = _late_extension(tmp_path)
    assert main(["classify", str(path), "S5"]) == 1
    g = make_grid(16)
    near = tmp_path / "near.ckpt"
    save_checkpoint(near, HiggsPair.constant(g, descriptor("SL", 2), alpha=0.01 * np.diag([1.0, -1.0])))
    assert main(["classify", str(near), "S2"]) == 4


def test_classify_params_and_errors(tmp_path):
    path = _late_extension(tmp_path)
    assert main(["classify", str(path), "S2", "--param", "c0=0.5"]) == 0
    assert main(["classify", str(path), "S2", "--param", "radius=1"]) == 64
    assert main(["classify", str(path), "S2", "--param", "novalue"]) == 64
    assert main(["classify", str(path), "S42"]) == 64
    truncated = tmp_path / "trunc.ckpt"
    truncated.write_bytes(path.read_bytes()[:-50])
    assert main(["classify", str(truncated), "S2"]) == 65
    assert main(["classify", str(tmp_path / "absent.ckpt"), "S2"]) == 74


def test_resume_with_corrupt_checkpoint(tmp_path):
    out = tmp_path / "r"
    cfg = write_config(tmp_path / "c.json", **{"grid.N": 8, "scenario.name": "S2", "flow.t_max": 0.05,
                                               "output.dir": str(out)})
    main(["run", cfg])
    blob = (out / "final.ckpt").read_bytes()
    (out / "final.ckpt").write_bytes(blob[: len(blob) // 2])
    assert main(["run", cfg, "--resume"]) == 65


def test_sweep_dt_decay_exponent(tmp_path):
    """|c(t)| = (1 + 4t)^(-1/2): the fitted exponent approaches -1/2 as dt shrinks."""
    out = tmp_path / "sw"
    cfg = write_config(tmp_path / "c.json", **{
        "grid.N": 8, "scenario.name": "S2", "flow.t_max": 10.0, "flow.tol_grad": 0.0,
        "flow.monitor_every": 1, "deterministic": True, "output.dir": str(out),
        "sweep.flow.dt": [0.2, 0.1, 0.05]})
    assert main(["sweep", cfg]) == 0
    with open(out / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["run"] for r in rows] == ["0", "1", "2"]
    errs = []
    for i in range(3):
        _, tr = read_trace(out / f"run_{i:03d}" / "trace.csv")
        t, modulus = tr[:, 1], (tr[:, 2] / 2) ** 0.25
        late = t >= 1.0
        slope = np.polyfit(np.log1p(4 * t[late]), np.log(modulus[late]), 1)[0]
        errs.append(abs(slope + 0.5))
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 1e-4


def test_sweep_exit_codes(tmp_path):
    cfg = write_config(tmp_path / "e.json", **{"sweep.flow.dt": []})
    assert main(["sweep", cfg]) == 64
    cfg = write_config(tmp_path / "n.json", **{"grid.N": 8})
    assert main(["sweep", cfg]) == 64
    out = tmp_path / "mixed"
    cfg = write_config(tmp_path / "m.json", **{
        "grid.N": 8, "scenario.name": "S2", "flow.t_max": 20.0, "deterministic": True,
        "output.dir": str(out), "sweep.flow.dt": [0.01, 3.0]})
    assert main(["sweep", cfg]) == 3
    with open(out / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[1]["exit_code"] == "3"


def test_sweep_parallel(tmp_path):
    out = tmp_path / "par"
    cfg = write_config(tmp_path / "p.json", **{
        "grid.N": 8, "scenario.name": "S3", "flow.t_max": 0.1, "flow.tol_grad": 0.0, "output.dir": str(out),
        "sweep.scenario.params.eps": [0.5, 1.0]})
    assert main(["sweep", cfg]) == 0
    assert (out / "run_000" / "summary.json").exists() and (out / "run_001" / "summary.json").exists()


def test_catalog(capsys):
    assert main(["catalog"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert [ln.split()[0] for ln in lines] == [f"S{i}" for i in range(1, 9)]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ymhflow", "catalog"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("S1")
    res = subprocess.run([sys.executable, "-m", "ymhflow", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for sub in ("run", "verify", "classify", "sweep", "catalog"):
        assert sub in res.stdout
