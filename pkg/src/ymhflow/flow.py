"""Time integration of the Yang-Mills-Higgs gradient flow.

The flow is

    d alpha/dt = d_zbar m + [alpha, m],     d phi/dt = [phi, m],

with ``m`` the moment density of :mod:`ymhflow.higgs`.  Two integrators are
provided:

``RK4``
    classical four-stage Runge-Kutta; explicit, so ``dt`` must respect the
    diffusive bound ``dt ~ 1/N^2`` (``dt="auto"`` picks ``2/(pi^2 N^2)``).
``ETD-Euler``
    exponential Euler.  The linear part of the alpha equation at
    ``alpha = 0``, ``d_zbar (d_z alpha + d_zbar alpha^*)``, couples the mode
    ``k`` of ``alpha`` with the mode ``k`` of ``alpha^*``; on each such pair it
    has eigenvalues ``0`` (gauge directions) and ``-2 pi^2 |k|^2`` and is
    integrated exactly.  Everything else is stepped with explicit Euler, so
    the step size is limited by the nonlinear terms only.

Long runs near non-minimal critical points converge slowly: for the constant
extension class the gradient decays like ``t^(-3/2)``.
"""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import NumericalFailure
from .higgs import HiggsPair
from .torus import TorusGrid, dealias_mask, norm2_array

log = logging.getLogger(__name__)

__all__ = [
    "FlowConfig",
    "FlowTrace",
    "StopReason",
    "InvariantReport",
    "TRACE_COLUMNS",
    "auto_dt",
    "step",
    "run_flow",
    "flow_invariant_report",
    "hitchin_invariants",
]

TRACE_COLUMNS = ("step", "t", "ymh", "grad_norm", "higgs_residual", "offalg_residual", "hitchin_drift")
INTEGRATORS = ("RK4", "ETD-Euler")
DIVERGENCE_FACTOR = 1.10
HIGGS_PRECONDITION = 1e-6


class StopReason(enum.Enum):
    CONVERGED = "Converged"
    MAX_TIME = "MaxTime"
    DIVERGED = "Diverged"
    NUMERICAL_FAILURE = "NumericalFailure"


def auto_dt(N: int) -> float:
    """Explicit stability bound ``4/(pi^2 N^2)`` times a safety factor 0.5."""
    return 0.5 * 4.0 / (math.pi ** 2 * N ** 2)


@dataclass
class FlowConfig:
    dt: float | str = "auto"
    t_max: float = 200.0
    tol_grad: float = 1e-5
    integrator: str = "RK4"
    monitor_every: int = 100
    dealias: bool = False
    allow_non_higgs: bool = False
    max_steps: int | None = None

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ValueError(f"dt must be 'auto' or a positive number, got {self.dt!r}")
        if not self.t_max >= 0:
            raise ValueError("t_max must be non-negative")
        if self.tol_grad < 0:
            raise ValueError("tol_grad must be non-negative")
        if int(self.monitor_every) != self.monitor_every or self.monitor_every < 1:
            raise ValueError("monitor_every must be a positive integer")

    def resolved_dt(self, N: int) -> float:
        return auto_dt(N) if self.dt == "auto" else float(self.dt)


@dataclass
class FlowTrace:
    """Monitor rows ``(step, t, ymh, grad_norm, higgs_residual, offalg_residual,
    hitchin_drift, monotonicity_violation)``.

    ``monotonicity_violation`` is the largest single-step increase of ``ymh``
    since the previous row.  It is kept in memory but not written to CSV.
    """

    rows: list = field(default_factory=list)
    running_min: float = math.inf

    columns = TRACE_COLUMNS + ("monotonicity_violation",)

    def append(self, row):
        if self.rows and not row[1] > self.rows[-1][1]:
            if row[0] == self.rows[-1][0]:
                return
            raise ValueError("trace times must be strictly increasing")
        self.rows.append(tuple(row))

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    @property
    def last(self) -> dict:
        return dict(zip(self.columns, self.rows[-1]))

    def to_csv(self, path_or_buf=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.rows:
            w.writerow([int(r[0])] + [repr(float(v)) for v in r[1:7]])
        text = buf.getvalue()
        if path_or_buf is not None:
            if hasattr(path_or_buf, "write"):
                path_or_buf.write(text)
            else:
                with open(path_or_buf, "w", newline="") as fh:
                    fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "FlowTrace":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != TRACE_COLUMNS:
                raise ValueError(f"unexpected trace header {header}")
            rows = [(int(r[0]),) + tuple(float(v) for v in r[1:]) + (0.0,) for r in reader]
        return cls(rows)


def hitchin_invariants(phi: np.ndarray) -> np.ndarray:
    """Pointwise ``trace(phi^k)`` for ``k = 2..n``; shape (n-1, N, N)."""
    n = phi.shape[-1]
    out = []
    power = phi
    for _ in range(2, n + 1):
        power = power @ phi
        out.append(np.trace(power, axis1=-2, axis2=-1))
    if not out:
        return np.zeros((0,) + phi.shape[:2], complex)
    return np.stack(out)


# ---------------------------------------------------------------------------


class _Flow:
    """Right-hand side and integrators on fibre-first ``(n, n, N, N)`` arrays."""

    def __init__(self, grid: TorusGrid, dealias: bool = False):
        self.grid = grid
        self.mask = dealias_mask(grid).astype(float) if dealias else None
        self._etd_cache: dict = {}

    def rhs(self, a, f):
        m, M, A, B = K.moment(self.grid, a, f, self.mask)
        da, df = K.descent(self.grid, a, f, m, M, self.mask)
        return da, df, m, A, B

    def rk4(self, a, f, h, k1=None):
        if k1 is None:
            k1 = self.rhs(a, f)
        a1, f1 = k1[0], k1[1]
        a2, f2 = self.rhs(a + 0.5 * h * a1, f + 0.5 * h * f1)[:2]
        a3, f3 = self.rhs(a + 0.5 * h * a2, f + 0.5 * h * f2)[:2]
        a4, f4 = self.rhs(a + h * a3, f + h * f3)[:2]
        a_new = a + (h / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
        f_new = f + (h / 6.0) * (f1 + 2 * f2 + 2 * f3 + f4)
        return a_new, f_new

    def _etd_coeffs(self, h):
        key = float(h)
        if key not in self._etd_cache:
            g = self.grid
            s = np.abs(g.sigma) ** 2
            z = 2.0 * s * h
            em1 = -np.expm1(-z)                        # 1 - exp(-z)
            safe_z = np.where(z > 0, z, 1.0)
            phi1 = np.where(z > 0, em1 / safe_z, 1.0)   # (1 - exp(-z)) / z
            one_minus_phi1 = np.where(z < 1e-4, z / 2 - z ** 2 / 6 + z ** 3 / 24, 1.0 - phi1)
            safe_s = np.where(s > 0, s, 1.0)
            tau2 = g.tau ** 2
            c_self = 1.0 - 0.5 * em1                   # (1 + exp(-z)) / 2
            c_cross = np.where(s > 0, em1 / (2 * safe_s), 0.0) * tau2
            p_self = 0.5 * h * (1.0 + phi1)
            p_cross = np.where(s > 0, 0.5 * h * one_minus_phi1 / safe_s, 0.0) * tau2
            self._etd_cache = {key: (c_self, c_cross, p_self, p_cross)}
        return self._etd_cache[key]

    def etd_euler(self, a, f, h, k1=None):
        """Exact propagation of the linearized alpha equation, Euler for the rest.

        Per mode, ``(a_k, b_k)`` with ``b = a^*`` obeys ``d/dt (a, b) = L (a, b)``,
        ``L = [[-s, tau^2], [sigma^2, -s]]``, ``s = |sigma|^2``; ``L`` has the
        eigenvalues ``0`` and ``-2s``, so ``exp(hL)`` and ``phi_1(hL)`` reduce to
        the scalar coefficients cached in ``_etd_coeffs``.
        """
        g = self.grid
        if k1 is None:
            k1 = self.rhs(a, f)
        da, df, _, A, B = k1
        lin = g.tau * (g.sigma * A + g.tau * B)
        nl = K.fft(da) - lin
        nl_adj = K.spectral_dagger(nl)
        c_self, c_cross, p_self, p_cross = self._etd_coeffs(h)
        a_new = K.ifft(c_self * A + c_cross * B + p_self * nl + p_cross * nl_adj)
        return a_new, f + h * df


def step(state: HiggsPair, dt: float, integrator: str = "RK4", dealias: bool = False) -> HiggsPair:
    """Advance the pair by one time step.

    Raises
    ------
    NumericalFailure
        If the new state contains NaN or Inf.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if integrator not in INTEGRATORS:
        raise ValueError(f"unknown integrator {integrator!r}")
    fl = _Flow(state.grid, dealias)
    a, f = K.to_fl(state.alpha.data), K.to_fl(state.phi.data)
    with np.errstate(over="ignore", invalid="ignore"):
        a, f = (fl.rk4 if integrator == "RK4" else fl.etd_euler)(a, f, dt)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(f))):
        raise NumericalFailure("non-finite values after step")
    return state.replace(alpha=K.to_pl(a), phi=K.to_pl(f))


# ---------------------------------------------------------------------------


def run_flow(pair: HiggsPair, config: FlowConfig, *, t0: float = 0.0, step0: int = 0,
             reference: HiggsPair | None = None, ymh_min: float | None = None):
    """Integrate until ``grad_norm < tol_grad`` or ``t_max``.

    Parameters
    ----------
    pair : HiggsPair
        Initial state.  Its Higgs residual must be below 1e-6 unless
        ``config.allow_non_higgs`` is set.
    config : FlowConfig
    t0, step0 : float, int
        Starting time and step counter, for resuming an interrupted run.
    reference : HiggsPair, optional
        State whose ``trace(phi^k)`` defines zero Hitchin drift (defaults to
        ``pair``; pass the original initial state when resuming).
    ymh_min : float, optional
        Running energy minimum carried over from an interrupted run.

    Returns
    -------
    limit : HiggsPair
        Final state.  After ``Diverged`` or ``NumericalFailure`` this is the
        last state that passed the divergence guard, while the trace keeps
        the offending row.
    trace : FlowTrace
    reason : StopReason
        ``NumericalFailure`` is reported here rather than raised.
    """
    from .higgs import higgs_residual

    if not config.allow_non_higgs:
        res = higgs_residual(pair)
        if res >= HIGGS_PRECONDITION:
            raise ValueError(
                f"initial pair is not a Higgs pair (residual {res:.2e}); "
                "set allow_non_higgs to flow it anyway"
            )
    grid = pair.grid
    G = pair.group
    dt = config.resolved_dt(grid.N)
    fl = _Flow(grid, config.dealias)
    integrate = fl.rk4 if config.integrator == "RK4" else fl.etd_euler
    ref = hitchin_invariants((reference or pair).phi.data)

    a, f = K.to_fl(pair.alpha.data), K.to_fl(pair.phi.data)
    last_good = (a, f)
    trace = FlowTrace()
    k = step0
    t = t0
    running_min = math.inf if ymh_min is None else ymh_min
    prev_energy = None
    worst_increase = 0.0
    reason = StopReason.MAX_TIME

    def monitor(a, f, k, t, energy, gnorm):
        nonlocal worst_increase
        hres = math.sqrt(K.norm2(K.residual(grid, a, f)))
        ap, fp = K.pl_view(a), K.pl_view(f)
        if G.is_proper:
            off = math.sqrt(norm2_array(G.normal(ap)) + norm2_array(G.normal(fp)))
        else:
            off = 0.0
        inv = hitchin_invariants(fp)
        drift = float(np.max(np.abs(inv - ref))) if inv.size else 0.0
        trace.append((k, t, energy, gnorm, hres, off, drift, worst_increase))
        worst_increase = 0.0

    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            k1 = fl.rhs(a, f)
            energy = K.norm2(k1[2])
            gnorm = math.sqrt(K.norm2(k1[0]) + K.norm2(k1[1]))
            if not (math.isfinite(energy) and math.isfinite(gnorm)):
                reason = StopReason.NUMERICAL_FAILURE
                a, f = last_good
                break
            if prev_energy is not None:
                worst_increase = max(worst_increase, energy - prev_energy)
            prev_energy = energy
            running_min = min(running_min, energy)
            stop = None
            if gnorm < config.tol_grad:
                stop = StopReason.CONVERGED
            elif energy > DIVERGENCE_FACTOR * running_min + 1e-12:
                stop = StopReason.DIVERGED
            elif t >= config.t_max - 1e-12 * max(1.0, dt):
                stop = StopReason.MAX_TIME
            elif config.max_steps is not None and k - step0 >= config.max_steps:
                stop = StopReason.MAX_TIME
            if stop is not None or k == step0 or k % config.monitor_every == 0:
                monitor(a, f, k, t, energy, gnorm)
            if stop is not None:
                reason = stop
                if stop is StopReason.DIVERGED:
                    a, f = last_good
                break
            last_good = (a, f)
            h = min(dt, config.t_max - t)
            a_new, f_new = integrate(a, f, h, k1)
            if not (np.all(np.isfinite(a_new)) and np.all(np.isfinite(f_new))):
                log.warning("non-finite state at step %d, t=%.6g", k + 1, t + h)
                reason = StopReason.NUMERICAL_FAILURE
                break
            a, f = a_new, f_new
            k += 1
            t = t0 + (k - step0) * dt if h == dt else config.t_max

    limit = pair.replace(alpha=K.to_pl(a), phi=K.to_pl(f))
    log.info("flow stopped: %s at step %d, t=%.6g", reason.value, k, t)
    trace.running_min = running_min
    return limit, trace, reason


@dataclass
class InvariantReport:
    max_higgs_residual: float
    max_offalg_residual: float
    max_ymh_increase: float
    max_hitchin_drift: float
    tolerances: dict
    passed: dict

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


DEFAULT_INVARIANT_TOLS = {
    "higgs_residual": 1e-8,
    "offalg_residual": 1e-11,
    "ymh_increase": 1e-10,
    "hitchin_drift": 1e-8,
}


def flow_invariant_report(trace: FlowTrace, tolerances: dict | None = None) -> InvariantReport:
    """Worst-case invariant violations along a trace, with pass/fail per item."""
    if not len(trace):
        raise ValueError("empty trace")
    tol = {**DEFAULT_INVARIANT_TOLS, **(tolerances or {})}
    vals = {
        "higgs_residual": float(trace.column("higgs_residual").max()),
        "offalg_residual": float(trace.column("offalg_residual").max()),
        "ymh_increase": max(0.0, float(trace.column("monotonicity_violation").max())),
        "hitchin_drift": float(trace.column("hitchin_drift").max()),
    }
    passed = {k: vals[k] <= tol[k] for k in vals}
    return InvariantReport(
        vals["higgs_residual"], vals["offalg_residual"], vals["ymh_increase"],
        vals["hitchin_drift"], tol, passed,
    )
