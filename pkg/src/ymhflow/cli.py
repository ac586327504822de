"""Command-line harness: ``python -m ymhflow {run,verify,classify,sweep,catalog}``.

Exit codes
----------
0   success (run converged, verify passed, classify PASS)
1   verify suite failed, classify FAIL
2   run stopped at ``t_max`` before converging
3   run diverged or failed numerically (or a sweep member did)
4   classify INCONCLUSIVE (no spectral gap in the section count)
64  configuration error
65  unreadable checkpoint
74  I/O error
"""
from __future__ import annotations

import argparse
import contextlib
import itertools
import json
import os
import sys
import time
from pathlib import Path

from .errors import CheckpointError, YMHError
from .flow import FlowTrace, StopReason, run_flow
from .groups import descriptor
from .limits import classify, moment_spectrum, KAPPA
from .persist import ConfigError, RunConfig, load_checkpoint, load_config, save_checkpoint
from .scenarios import catalog, get_scenario
from .torus import make_grid

__all__ = ["main", "cmd_run", "cmd_verify", "cmd_classify", "cmd_sweep", "cmd_catalog", "execute_run"]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_MAXTIME = 2
EXIT_RUN_FAILED = 3
EXIT_INCONCLUSIVE = 4
EXIT_CONFIG = 64
EXIT_DATA = 65
EXIT_IO = 74

_REASON_EXIT = {
    StopReason.CONVERGED: EXIT_OK,
    StopReason.MAX_TIME: EXIT_MAXTIME,
    StopReason.DIVERGED: EXIT_RUN_FAILED,
    StopReason.NUMERICAL_FAILURE: EXIT_RUN_FAILED,
}


def _err(msg: str) -> None:
    print(f"ymhflow: {msg}", file=sys.stderr)


@contextlib.contextmanager
def _threads(deterministic: bool):
    """Pin BLAS/OpenMP pools to one thread in deterministic mode."""
    if not deterministic:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=1):
        yield


def _coerce_param(value):
    return tuple(value) if isinstance(value, list) else value


def build_initial(cfg: RunConfig):
    """Scenario and initial pair described by ``cfg``; ConfigError on bad names or parameters."""
    try:
        grid = make_grid(cfg.N)
    except ValueError as exc:
        raise ConfigError("grid.N", str(exc)) from exc
    params = {k: _coerce_param(v) for k, v in cfg.params.items()}
    try:
        sc = get_scenario(cfg.scenario, **params)
    except KeyError as exc:
        key = "scenario.name" if "unknown scenario" in str(exc) else "scenario.params"
        raise ConfigError(key, str(exc.args[0])) from exc
    try:
        pair = sc.build(grid)
        if cfg.group is not None and cfg.group != pair.group.name:
            pair = pair.as_group(descriptor(cfg.group, pair.n))
    except (TypeError, ValueError, YMHError) as exc:
        raise ConfigError("scenario.params", str(exc)) from exc
    return sc, pair


def _summary(cfg: RunConfig, sc, limit, trace: FlowTrace, reason: StopReason, wall: float) -> dict:
    means, stds = moment_spectrum(limit)
    last = trace.last
    out = {
        "scenario": sc.name,
        "stop_reason": reason.value,
        "exit_code": _REASON_EXIT[reason],
        "steps": int(last["step"]),
        "t": last["t"],
        "ymh": last["ymh"],
        "grad_norm": last["grad_norm"],
        "higgs_residual": last["higgs_residual"],
        "offalg_residual": last["offalg_residual"],
        "hitchin_drift": float(trace.column("hitchin_drift").max()),
        "slopes": [float(v) for v in means / KAPPA],
        "eig_spatial_std": [float(v) for v in stds],
        "expected_hn": list(sc.expected_hn),
        "config": cfg.to_mapping(),
    }
    if not cfg.deterministic:
        out["wall_time_s"] = wall
    return out


def execute_run(cfg: RunConfig, resume: bool = False):
    """Run one configured trajectory and write its artifacts.

    Returns
    -------
    code : int
        Exit code.
    summary : dict or None
    """
    out = Path(cfg.output_dir)
    sc, initial = build_initial(cfg)
    start = time.perf_counter()
    with _threads(cfg.deterministic):
        if resume:
            try:
                state = load_checkpoint(out / "final.ckpt")
                reference = load_checkpoint(out / "initial.ckpt")
                previous = FlowTrace.from_csv(out / "trace.csv")
            except FileNotFoundError as exc:
                raise OSError(f"cannot resume: {exc}") from exc
            last = previous.last
            limit, trace, reason = run_flow(
                state, cfg.flow, t0=last["t"], step0=int(last["step"]), reference=reference,
                ymh_min=float(previous.column("ymh").min()),
            )
            for row in trace.rows:
                previous.append(row)
            trace = previous
        else:
            out.mkdir(parents=True, exist_ok=True)
            limit, trace, reason = run_flow(initial, cfg.flow)
            if "ckpt" in cfg.formats:
                save_checkpoint(out / "initial.ckpt", initial)
    wall = time.perf_counter() - start
    summary = _summary(cfg, sc, limit, trace, reason, wall)
    if "csv" in cfg.formats:
        trace.to_csv(out / "trace.csv")
    if "json" in cfg.formats:
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if "ckpt" in cfg.formats:
        save_checkpoint(out / "final.ckpt", limit)
    return _REASON_EXIT[reason], summary


def cmd_run(config_path, resume: bool = False, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = load_config(config_path)
        code, summary = execute_run(cfg, resume=resume)
    except ConfigError as exc:
        _err(f"config error in key {exc.key!r}: {exc}")
        return EXIT_CONFIG
    except CheckpointError as exc:
        _err(f"bad checkpoint: {exc}")
        return EXIT_DATA
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    except (ValueError, YMHError) as exc:
        _err(f"run failed: {exc}")
        return EXIT_RUN_FAILED
    print(f"{summary['scenario']}: {summary['stop_reason']} at t={summary['t']:.6g}, "
          f"ymh={summary['ymh']:.6e}, grad_norm={summary['grad_norm']:.3e}", file=out)
    return code


def cmd_verify(out=None) -> int:
    from .verify import format_table, run_suites

    out = out or sys.stdout
    with _threads(True):
        results = run_suites()
    out.write(format_table(results))
    for name, ok, _ in results:
        if not ok:
            _err(f"suite {name!r} failed")
            out.write(f"FAILED: {name}\n")
            return EXIT_FAIL
    out.write("all suites passed\n")
    return EXIT_OK


def cmd_classify(checkpoint, scenario: str, params: dict | None = None, report_path=None, out=None) -> int:
    """Classify a limit checkpoint against a catalog scenario.

    The scenario's own initial pair, built on the checkpoint's grid, supplies
    the reference Hitchin invariants.
    """
    out = out or sys.stdout
    try:
        limit = load_checkpoint(checkpoint)
    except CheckpointError as exc:
        _err(f"bad checkpoint: {exc}")
        return EXIT_DATA
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    try:
        sc = get_scenario(scenario, **{k: _coerce_param(v) for k, v in (params or {}).items()})
        initial = sc.build(limit.grid)
    except (KeyError, TypeError, ValueError, YMHError) as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    report, verdict = classify(limit, None, sc, initial=initial)
    doc = {"scenario": sc.name, "verdict": verdict.status, "checks": verdict.checks,
           "details": verdict.details, "report": report.to_dict()}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    try:
        if report_path is not None:
            Path(report_path).write_text(text)
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    out.write(text)
    return {"PASS": EXIT_OK, "FAIL": EXIT_FAIL, "INCONCLUSIVE": EXIT_INCONCLUSIVE}[verdict.status]


def _sweep_member(args):
    raw, resume = args
    cfg = RunConfig.from_mapping(raw)
    try:
        code, summary = execute_run(cfg, resume=resume)
    except (ValueError, YMHError, OSError) as exc:
        return EXIT_RUN_FAILED, {"error": str(exc)}
    return code, summary


def sweep_members(cfg: RunConfig) -> list[dict]:
    """Flat configurations of every point of the sweep grid, each with its own output directory."""
    keys = sorted(cfg.sweep)
    if not keys or any(len(cfg.sweep[k]) == 0 for k in keys):
        raise ConfigError("sweep", "empty parameter grid")
    base = {k: v for k, v in cfg.raw.items() if not k.startswith("sweep.")}
    members = []
    for i, combo in enumerate(itertools.product(*(cfg.sweep[k] for k in keys))):
        raw = dict(base)
        raw.update(zip(keys, combo))
        raw["output.dir"] = str(Path(cfg.output_dir) / f"run_{i:03d}")
        RunConfig.from_mapping(raw)
        members.append(raw)
    return members


def cmd_sweep(config_path, out=None) -> int:
    """Run every point of a ``sweep.*`` grid and write ``sweep.csv``."""
    import csv

    out = out or sys.stdout
    try:
        cfg = load_config(config_path, allow_sweep=True)
        members = sweep_members(cfg)
    except ConfigError as exc:
        _err(f"config error in key {exc.key!r}: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    jobs = [(m, False) for m in members]
    if cfg.deterministic or len(jobs) == 1:
        results = [_sweep_member(j) for j in jobs]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(len(jobs), os.cpu_count() or 1)) as pool:
            results = list(pool.map(_sweep_member, jobs))
    keys = sorted(cfg.sweep)
    header = ["run", *keys, "exit_code", "stop_reason", "t", "ymh", "grad_norm", "slopes"]
    try:
        Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
        with open(Path(cfg.output_dir) / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i, (raw, (code, s)) in enumerate(zip(members, results)):
                w.writerow([i, *(json.dumps(raw[k]) for k in keys), code, s.get("stop_reason", "error"),
                            repr(s.get("t", float("nan"))), repr(s.get("ymh", float("nan"))),
                            repr(s.get("grad_norm", float("nan"))),
                            " ".join(repr(v) for v in s.get("slopes", []))])
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    failed = [i for i, (code, _) in enumerate(results) if code == EXIT_RUN_FAILED]
    print(f"{len(results)} runs, {len(failed)} failed", file=out)
    if failed:
        _err(f"failed runs: {failed}")
        return EXIT_RUN_FAILED
    return EXIT_OK


def cmd_catalog(out=None) -> int:
    out = out or sys.stdout
    for sc in catalog():
        h0 = "-" if sc.expected_h0 is None else sc.expected_h0
        out.write(f"{sc.name}  {sc.group}({sc.rank})  hn={list(sc.expected_hn)}  h0={h0}  "
                  f"params={json.dumps(sc.params)}  {sc.notes}\n")
    return EXIT_OK


def _parse_params(items):
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected KEY=VALUE")
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ymhflow", description="Yang-Mills-Higgs flow on the torus")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one flow from a config file")
    p.add_argument("config")
    p.add_argument("--resume", action="store_true", help="continue from output.dir/final.ckpt")
    sub.add_parser("verify", help="run the self-check suites at N = 16")
    p = sub.add_parser("classify", help="classify a limit checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("scenario")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--report", help="also write the report to this file")
    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("config")
    sub.add_parser("catalog", help="list the built-in scenarios")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "run":
        return cmd_run(args.config, resume=args.resume)
    if args.command == "verify":
        return cmd_verify()
    if args.command == "classify":
        try:
            params = _parse_params(args.param)
        except ConfigError as exc:
            _err(str(exc))
            return EXIT_CONFIG
        return cmd_classify(args.checkpoint, args.scenario, params, args.report)
    if args.command == "sweep":
        return cmd_sweep(args.config)
    return cmd_catalog()
