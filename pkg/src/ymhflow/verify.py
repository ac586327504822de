"""Self-check suites run by ``python -m ymhflow verify``.

Every suite works at ``N = 16`` with a fixed seed, finishes in seconds and
returns ``(passed, detail)``.  The order of :data:`SUITES` is the order in
which failures are reported.
"""
from __future__ import annotations

import numpy as np

from . import higgs
from .embedding import check_tangency, ymh_intrinsic
from .flow import FlowConfig, flow_invariant_report, run_flow, step
from .groups import descriptor, offalg_residual
from .higgs import HiggsPair, ymh
from .scenarios import get_scenario
from .torus import Kind, MatrixField, make_grid

__all__ = ["SUITES", "random_pair", "run_suites", "format_table"]

VERIFY_N = 16
SEED = 20240601


def random_pair(grid, group, rng, bandlimit: int = 4, scale: float = 0.5, with_phi: bool = True) -> HiggsPair:
    """Smooth random pair with values in ``group``'s subalgebra (not a Higgs pair in general)."""
    n = group.n
    a = MatrixField.random(grid, n, Kind.FORM01, rng, bandlimit=bandlimit).data
    f = MatrixField.random(grid, n, Kind.FORM10, rng, bandlimit=bandlimit).data
    a = scale * group.project(a)
    f = scale * group.project(f) if with_phi else np.zeros_like(f)
    return HiggsPair.from_arrays(grid, a, f, group)


def fd_relative_error(pair: HiggsPair, rng, h: float = 1e-5) -> float:
    """Relative mismatch between the descent-field prediction and a central difference."""
    grid, n = pair.grid, pair.n
    va = MatrixField.random(grid, n, Kind.FORM01, rng, bandlimit=4)
    vf = MatrixField.random(grid, n, Kind.FORM10, rng, bandlimit=4)
    plus = pair.replace(pair.alpha + va * h, pair.phi + vf * h).ambient()
    minus = pair.replace(pair.alpha - va * h, pair.phi - vf * h).ambient()
    fd = (ymh(plus) - ymh(minus)) / (2 * h)
    pred = higgs.directional_derivative(pair, va, vf)
    return abs(fd - pred) / max(abs(fd), 1e-300)


def suite_gradient_oracle(grid, rng):
    errs = []
    for n in (2, 2, 3, 3):
        pair = random_pair(grid, descriptor("GL", n), rng)
        errs.append(fd_relative_error(pair, rng))
    worst = max(errs)
    return worst < 1e-6, f"max relative FD error {worst:.2e}"


def suite_tangency(grid, rng):
    worst = 0.0
    for name, n in (("SL", 2), ("SO", 3), ("SP", 2)):
        worst = max(worst, check_tangency(random_pair(grid, descriptor(name, n), rng)))
    return worst < 1e-12, f"max normal gradient {worst:.2e}"


def suite_isometry(grid, rng):
    worst, worst_step = 0.0, 0.0
    for name, n in (("SL", 2), ("SO", 3), ("SP", 2), ("SL", 3)):
        pair = random_pair(grid, descriptor(name, n), rng)
        e = ymh(pair)
        worst = max(worst, abs(ymh_intrinsic(pair) - e) / e)
        nxt = step(pair.ambient(), 1e-4)
        worst_step = max(worst_step, offalg_residual(pair.group, nxt.alpha.data, nxt.phi.data))
    ok = worst < 1e-14 and worst_step < 1e-11
    return ok, f"intrinsic/ambient mismatch {worst:.2e}, closure after one step {worst_step:.2e}"


def _short_run(pair, t_max=0.25):
    cfg = FlowConfig(t_max=t_max, tol_grad=0.0, monitor_every=20)
    return run_flow(pair, cfg)[1]


def _mixed_pair(grid):
    """Constant non-normal pair with ``phi = alpha``: Higgs, not critical, ``trace(phi^2) != 0``."""
    A = np.array([[0.3, 0.6], [0.0, -0.3]], dtype=complex)
    return HiggsPair.constant(grid, descriptor("SL", 2), alpha=A, phi=A)


def suite_higgs_preservation(grid, rng):
    worst = 0.0
    for pair in (get_scenario("S2").build(grid), get_scenario("S3").build(grid), _mixed_pair(grid)):
        worst = max(worst, flow_invariant_report(_short_run(pair)).max_higgs_residual)
    return worst < 1e-8, f"max Higgs residual {worst:.2e}"


def suite_monotonicity(grid, rng):
    worst = 0.0
    for pair in (get_scenario("S5").build(grid), _mixed_pair(grid)):
        worst = max(worst, flow_invariant_report(_short_run(pair)).max_ymh_increase)
    return worst <= 1e-10, f"max per-step YMH increase {worst:.2e}"


def suite_hitchin(grid, rng):
    worst = 0.0
    for pair in (_mixed_pair(grid), get_scenario("S4").build(grid)):
        worst = max(worst, flow_invariant_report(_short_run(pair)).max_hitchin_drift)
    return worst < 1e-8, f"max Hitchin drift {worst:.2e}"


SUITES = (
    ("gradient-oracle", suite_gradient_oracle),
    ("tangency", suite_tangency),
    ("isometry", suite_isometry),
    ("higgs-preservation", suite_higgs_preservation),
    ("monotonicity", suite_monotonicity),
    ("hitchin-conservation", suite_hitchin),
)


def run_suites(N: int = VERIFY_N, seed: int = SEED):
    """Run every suite; returns a list of ``(name, passed, detail)``."""
    grid = make_grid(N)
    results = []
    for name, fn in SUITES:
        rng = np.random.default_rng(seed)
        try:
            ok, detail = fn(grid, rng)
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results


def format_table(results) -> str:
    width = max(len(r[0]) for r in results)
    lines = [f"{'suite'.ljust(width)}  result  detail"]
    for name, ok, detail in results:
        lines.append(f"{name.ljust(width)}  {'PASS' if ok else 'FAIL':6}  {detail}")
    return "\n".join(lines) + "\n"
