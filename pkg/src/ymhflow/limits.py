"""Classification of flow limits through gauge-invariant data.

At a critical point the moment density is covariantly constant, so its
pointwise eigenvalues are constant across the torus.  Integrating the
curvature gives ``integral of (eigenvalue) = pi * degree`` on the unit-area
torus, hence the slope vector of the Harder-Narasimhan type is the vector of
spatial eigenvalue means divided by ``KAPPA = pi``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NoSpectralGap, NotCritical
from .flow import FlowTrace, hitchin_invariants
from .higgs import HiggsPair, MomentField, chern_moment, grad_norm, higgs_residual, holo_section_count

log = logging.getLogger(__name__)

__all__ = [
    "KAPPA",
    "CRITICAL_THRESHOLD",
    "LimitReport",
    "moment_spectrum",
    "hn_type",
    "snap_slopes",
    "classify",
    "Verdict",
]

KAPPA = np.pi
CRITICAL_THRESHOLD = 1e-5
HARD_FACTOR = 100.0
SNAP_RESIDUAL = 0.05

SLOPE_TOL = 0.02
STD_TOL = 1e-2
HIGGS_TOL = 1e-6
HITCHIN_TOL = 1e-6


def moment_spectrum(pair: HiggsPair):
    """Spatial mean and standard deviation of each descending eigenvalue band of ``m``.

    Returns
    -------
    means, stds : ndarray of shape (n,)
    """
    w = MomentField(chern_moment(pair).m).eigenvalues()
    return w.mean(axis=(0, 1)), w.std(axis=(0, 1))


def snap_slopes(slopes, max_den: int, residual: float = SNAP_RESIDUAL) -> np.ndarray:
    """Replace each slope by the nearest rational with denominator <= ``max_den``
    when it lies within ``residual``; other entries are left as they are."""
    out = np.array(slopes, dtype=float)
    for i, s in enumerate(out):
        r = Fraction(float(s)).limit_denominator(max_den)
        if abs(float(r) - s) < residual:
            out[i] = float(r)
    return out


def hn_type(pair: HiggsPair, snap: bool = False, threshold: float = CRITICAL_THRESHOLD) -> np.ndarray:
    """Estimated Harder-Narasimhan slope vector (descending) of a near-critical pair.

    Raises
    ------
    NotCritical
        If the gradient norm exceeds ``100 * threshold``; between
        ``threshold`` and that bound a warning is issued instead.
    """
    g = grad_norm(pair)
    if g > HARD_FACTOR * threshold:
        raise NotCritical(f"gradient norm {g:.3e} exceeds {HARD_FACTOR * threshold:.1e}")
    if g > threshold:
        warnings.warn(f"pair is only near-critical (gradient norm {g:.3e})", stacklevel=2)
    means, _ = moment_spectrum(pair)
    slopes = means / KAPPA
    return snap_slopes(slopes, pair.n) if snap else slopes


@dataclass
class LimitReport:
    """Gauge-invariant summary of a flow limit."""

    slope_vector: np.ndarray
    eig_spatial_std: np.ndarray
    residuals: dict
    invariants_snapshot: np.ndarray
    h0: int | None = None

    def to_dict(self) -> dict:
        inv = np.asarray(self.invariants_snapshot)
        return {
            "slope_vector": [float(s) for s in self.slope_vector],
            "eig_spatial_std": [float(s) for s in self.eig_spatial_std],
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "invariants_snapshot": [[float(v.real), float(v.imag)] for v in inv],
            "h0": self.h0,
        }


@dataclass
class Verdict:
    """Outcome of :func:`classify`; ``status`` is PASS, FAIL or INCONCLUSIVE."""

    status: str
    checks: dict = field(default_factory=dict)
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "PASS"


def _mean_invariants(phi: np.ndarray) -> np.ndarray:
    inv = hitchin_invariants(phi)
    return inv.reshape(inv.shape[0], -1).mean(axis=1) if inv.size else np.zeros(0, complex)


def classify(limit: HiggsPair, trace: FlowTrace | None, expected, initial: HiggsPair | None = None,
             slope_tol: float = SLOPE_TOL, std_tol: float = STD_TOL):
    """Compare a flow limit with the data a scenario predicts.

    Checks (a) slopes against ``expected.expected_hn`` within ``slope_tol``
    (absolute, per entry), (b) per-band spatial stds below ``std_tol``,
    (c) small Higgs residual, (d) Hitchin invariants conserved relative to
    ``initial`` (or, without it, the drift recorded in ``trace``), and
    (e) the holomorphic section count when the scenario fixes one.

    Returns
    -------
    report : LimitReport
    verdict : Verdict
        INCONCLUSIVE when the section count has no spectral gap.
    """
    means, stds = moment_spectrum(limit)
    slopes = means / KAPPA
    g = grad_norm(limit)
    hres = higgs_residual(limit)
    inv = _mean_invariants(limit.phi.data)
    checks, details = {}, []
    status = "PASS"

    exp = np.asarray(expected.expected_hn, dtype=float)
    if exp.shape != slopes.shape:
        checks["slopes"] = False
        details.append(f"expected {len(exp)} slopes, limit has rank {len(slopes)}")
    else:
        err = float(np.max(np.abs(slopes - exp), initial=0.0))
        checks["slopes"] = err <= slope_tol
        if not checks["slopes"]:
            details.append(f"slopes {np.round(slopes, 6).tolist()} differ from {exp.tolist()} by {err:.3e}")

    checks["constant_bands"] = bool(np.all(stds < std_tol))
    if not checks["constant_bands"]:
        details.append(f"eigenvalue band stds {stds.tolist()} exceed {std_tol:g}")

    checks["higgs_residual"] = hres < HIGGS_TOL
    if not checks["higgs_residual"]:
        details.append(f"higgs residual {hres:.3e}")

    if initial is not None:
        drift = float(np.max(np.abs(hitchin_invariants(limit.phi.data) - hitchin_invariants(initial.phi.data)),
                             initial=0.0))
    elif trace is not None and len(trace):
        drift = float(np.max(trace.column("hitchin_drift")))
    else:
        drift = 0.0
    checks["hitchin"] = drift < HITCHIN_TOL
    if not checks["hitchin"]:
        details.append(f"Hitchin invariants drift by {drift:.3e}")

    h0 = None
    if expected.expected_h0 is not None:
        try:
            h0 = holo_section_count(limit.alpha)
            checks["h0"] = h0 == expected.expected_h0
            if not checks["h0"]:
                details.append(f"h0 = {h0}, expected {expected.expected_h0}")
        except NoSpectralGap as exc:
            checks["h0"] = None
            details.append(f"h0 undetermined: {exc}")
            status = "INCONCLUSIVE"

    if any(v is False for v in checks.values()):
        status = "FAIL"
    report = LimitReport(slopes, stds, {"grad_norm": g, "higgs_residual": hres}, inv, h0)
    return report, Verdict(status, checks, details)
