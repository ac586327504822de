"""Initial Higgs pairs with known Harder-Narasimhan and socle data.

Degree-``d`` line subbundles of the trivial rank-2 bundle are built from a
bump map ``n: T^2 -> S^2`` that equals the north pole outside a disk and
wraps the sphere ``d`` times inside it.  The rank-one projector
``P = (I + n.sigma)/2`` then has Chern number ``d``, and

    alpha = (2P - I) d_zbar P

is a holomorphic structure for which both ``im P`` and ``ker P`` are
holomorphic, so the bundle splits as ``O(d) + O(-d)`` with respect to it.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import YMHError
from .groups import adjoint_rep, descriptor
from .higgs import HiggsPair, near_kernel_projection
from .torus import Kind, MatrixField, TorusGrid, apply_multiplier, dzbar_array

__all__ = [
    "Scenario",
    "PAULI",
    "CHERN_SIGN",
    "smoothstep",
    "bump_unit_vector",
    "bump_projector",
    "map_degree",
    "chern_number",
    "split_structure",
    "catalog",
    "get_scenario",
]

PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)

# The raw integral (1/2 pi i) * integral trace(P dP ^ dP) equals the map degree
# of the bump, which is -d: the bump runs from the south pole at its centre to
# the north pole at its rim and so reverses orientation.  The first Chern class
# of im P is the opposite, +d; it matches the moment-map degree
# (1/pi) * integral trace(P m) of the split structure.  Calibrated at d = 1.
CHERN_SIGN = -1.0

PROJECTOR_TOL = 1e-10


def smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, built from exp(-1/u)."""
    u = np.asarray(u, dtype=float)

    def sig(v):
        out = np.zeros_like(v)
        pos = v > 0
        out[pos] = np.exp(-1.0 / v[pos])
        return out

    a, b = sig(u), sig(1.0 - u)
    return a / (a + b)


def _check_bump(center, R, d):
    if not 0.0 < R < 0.5:
        raise ValueError(f"bump radius must satisfy 0 < R < 1/2, got {R}")
    if int(d) != d:
        raise ValueError(f"degree must be an integer, got {d}")
    if len(center) != 2:
        raise ValueError("center must be an (x, y) pair")


def bump_unit_vector(grid: TorusGrid, center=(0.5, 0.5), R: float = 0.45, d: int = 1) -> np.ndarray:
    """Unit vector field ``n`` of shape (N, N, 3) wrapping the sphere ``d`` times."""
    _check_bump(center, R, d)
    x, y = grid.coordinates()
    dx = (x - center[0] + 0.5) % 1.0 - 0.5
    dy = (y - center[1] + 0.5) % 1.0 - 0.5
    r = np.hypot(dx, dy)
    psi = np.arctan2(dy, dx)
    theta = np.where(r < R, np.pi * (1.0 - smoothstep(r / R)), 0.0)
    return np.stack(
        [np.sin(theta) * np.cos(d * psi), np.sin(theta) * np.sin(d * psi), np.cos(theta)],
        axis=-1,
    )


def bump_projector(grid: TorusGrid, center=(0.5, 0.5), R: float = 0.45, d: int = 1) -> MatrixField:
    """Hermitian rank-one projector field ``(I + n.sigma)/2`` of the bump map.

    ``d = 0`` returns the constant projector ``diag(1, 0)``.
    """
    _check_bump(center, R, d)
    if d == 0:
        return MatrixField.constant(grid, np.diag([1.0, 0.0]))
    nvec = bump_unit_vector(grid, center, R, d)
    P = 0.5 * (np.eye(2) + np.einsum("xya,aij->xyij", nvec, PAULI))
    return MatrixField(grid, P, Kind.FUNCTION)


def _dx(grid: TorusGrid, a):
    p = grid.wavenumbers[..., 0]
    mult = np.where(p == -grid.N // 2, 0.0, 2j * np.pi * p)
    return apply_multiplier(mult, a)


def _dy(grid: TorusGrid, a):
    q = grid.wavenumbers[..., 1]
    mult = np.where(q == -grid.N // 2, 0.0, 2j * np.pi * q)
    return apply_multiplier(mult, a)


def map_degree(grid: TorusGrid, nvec: np.ndarray) -> float:
    """``(1/4 pi) * integral of n . (d_x n x d_y n)`` with spectral derivatives."""
    nx = _dx(grid, nvec).real
    ny = _dy(grid, nvec).real
    density = np.einsum("xya,xya->xy", nvec, np.cross(nx, ny))
    return float(density.mean() / (4.0 * np.pi))


def _check_projector(P: MatrixField):
    d = P.data
    herm = np.max(np.abs(d - np.conj(np.swapaxes(d, -1, -2))))
    idem = np.max(np.abs(d @ d - d))
    if herm > PROJECTOR_TOL or idem > PROJECTOR_TOL:
        raise YMHError(f"not a Hermitian projector field (herm {herm:.1e}, idem {idem:.1e})")


def chern_number(P: MatrixField) -> float:
    """First Chern number of ``im P``: ``(1/2 pi i) * integral trace(P dP ^ dP)``."""
    _check_projector(P)
    grid = P.grid
    Px, Py = _dx(grid, P.data), _dy(grid, P.data)
    density = np.trace(P.data @ (Px @ Py - Py @ Px), axis1=-2, axis2=-1)
    return CHERN_SIGN * float((density.mean() / (2j * np.pi)).real)


def split_structure(P: MatrixField) -> MatrixField:
    """``alpha = (2P - I) d_zbar P``; makes ``im P`` and ``ker P`` holomorphic.

    Only the part of ``d_zbar P`` that is off-diagonal with respect to
    ``P`` is used.  For an exact derivative of a projector that is all of
    it; for the spectral derivative the diagonal blocks are pure
    discretization error, and dropping them makes ``alpha`` exactly
    traceless and both subbundles exactly holomorphic on the grid.
    """
    n = P.n
    I = np.eye(n)
    p = P.data
    dP = dzbar_array(P.grid, p)
    off = p @ dP @ (I - p) + (I - p) @ dP @ p
    alpha = (2.0 * p - I) @ off
    return MatrixField(P.grid, alpha, Kind.FORM01)


def subbundle_defect(P: MatrixField, alpha: MatrixField) -> float:
    """Sup norm of ``(I - P)(d_zbar P + alpha P) P`` (second fundamental form of im P)."""
    I = np.eye(P.n)
    dP = dzbar_array(P.grid, P.data)
    r = (I - P.data) @ (dP + alpha.data @ P.data) @ P.data
    return float(np.max(np.abs(r)))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """A named initial pair together with the data its flow limit should carry.

    ``expected_hn`` is the slope vector (descending) of the limit and
    ``expected_h0`` the number of holomorphic sections of the limit, when
    known.  ``provenance`` records where each expected value comes from.
    """

    name: str
    rank: int
    group: str
    params: dict
    expected_hn: tuple
    builder: Callable = field(repr=False, compare=False)
    expected_h0: int | None = None
    initial_h0: int | None = None
    stationary: bool = False
    notes: str = ""
    provenance: dict = field(default_factory=dict)

    def build(self, grid: TorusGrid) -> HiggsPair:
        return self.builder(grid, **self.params)

    def with_params(self, **params) -> "Scenario":
        unknown = set(params) - set(self.params)
        if unknown:
            raise KeyError(f"unknown parameter(s) for {self.name}: {sorted(unknown)}")
        return replace(self, params={**self.params, **params})


def _zero(grid, group="SL"):
    return HiggsPair.zero(grid, descriptor(group, 2))


def _extension(grid, c0=1.0):
    return HiggsPair.constant(grid, descriptor("SL", 2), alpha=complex(c0) * E12)


def _nilpotent(grid, eps=1.0):
    return HiggsPair.constant(grid, descriptor("SL", 2), phi=complex(eps) * E12)


def _diagonal(grid, a=0.5):
    return HiggsPair.constant(grid, descriptor("SL", 2), phi=np.diag([a, -a]))


def _projector_pair(grid, center=(0.5, 0.5), R=0.45, d=1):
    P = bump_projector(grid, tuple(center), R, d)
    alpha = split_structure(P)
    return HiggsPair(alpha, MatrixField.zeros(grid, 2, Kind.FORM10), descriptor("SL", 2))


def _block3(grid, center=(0.5, 0.5), R=0.45, d=1):
    P = bump_projector(grid, tuple(center), R, d)
    a2 = split_structure(P).data
    a3 = np.zeros((grid.N, grid.N, 3, 3), complex)
    idx = np.ix_([0, 2], [0, 2])
    a3[:, :, idx[0], idx[1]] = a2
    return HiggsPair.from_arrays(grid, a3, np.zeros_like(a3), descriptor("SL", 3))


def _projector_higgs(grid, center=(0.5, 0.5), R=0.45, d=1, higgs_scale=0.5):
    base = _projector_pair(grid, center, R, d)
    P = bump_projector(grid, tuple(center), R, d).data
    I = np.eye(2)
    # strictly upper triangular for the splitting: Hom(ker P, im P) = O(2d)
    upper = P @ E12 @ (I - P)
    phi0 = MatrixField(grid, upper, Kind.FORM10)
    phi = near_kernel_projection(base.alpha, phi0)
    nrm = np.sqrt(np.vdot(phi.data, phi.data).real / grid.sites)
    if nrm < 1e-8:
        raise YMHError("projected Higgs field vanished")
    phi = phi * (higgs_scale / nrm)
    # the projection is exact only up to the trace part; remove it
    tr = np.trace(phi.data, axis1=-2, axis2=-1)[..., None, None] * I / 2
    return base.replace(phi=phi.data - tr)


def _adjoint_induced(grid, base="S4"):
    from .embedding import induce_representation

    pair = get_scenario(base).build(grid)
    return induce_representation(pair, adjoint_rep(pair.group))


_ORACLE_CLOSED = "oracle: closed-form reduced ODE dc/dt = -2|c|^2 c"
_ORACLE_KERNEL = "oracle: dense kernel count of dbar + alpha"
_ORACLE_DEGREE = "oracle: map-degree integral and moment/degree constant pi"


def catalog() -> list[Scenario]:
    """The built-in scenarios S1-S8."""
    return [
        Scenario(
            "S1", 2, "SL", {"group": "SL"}, (0.0, 0.0), _zero,
            expected_h0=2, initial_h0=2, stationary=True,
            notes="zero pair; flat trivial bundle O+O",
            provenance={"expected_hn": "exact: m = 0", "expected_h0": "exact: constant sections"},
        ),
        Scenario(
            "S2", 2, "SL", {"c0": 1.0}, (0.0, 0.0), _extension,
            expected_h0=2, initial_h0=1,
            notes="non-split self-extension I2 of O; limit is the socle-graded O+O",
            provenance={"expected_hn": "exact: semistable bundle", "expected_h0": _ORACLE_KERNEL,
                        "flow": _ORACLE_CLOSED},
        ),
        Scenario(
            "S3", 2, "SL", {"eps": 1.0}, (0.0, 0.0), _nilpotent,
            expected_h0=2, initial_h0=2,
            notes="nilpotent Higgs field on O+O; limit phi = 0",
            provenance={"expected_hn": "exact: semistable bundle", "flow": _ORACLE_CLOSED},
        ),
        Scenario(
            "S4", 2, "SL", {"a": 0.5}, (0.0, 0.0), _diagonal,
            expected_h0=2, initial_h0=2, stationary=True,
            notes="commuting normal Higgs field; polystable and critical",
            provenance={"expected_hn": "exact: m = 0"},
        ),
        Scenario(
            "S5", 2, "SL", {"center": (0.5, 0.5), "R": 0.45, "d": 1}, (1.0, -1.0), _projector_pair,
            expected_h0=1, initial_h0=1,
            notes="O(1)+O(-1) from a degree-1 bump projector",
            provenance={"expected_hn": _ORACLE_DEGREE, "expected_h0": _ORACLE_KERNEL},
        ),
        Scenario(
            "S6", 3, "SL", {"center": (0.5, 0.5), "R": 0.45, "d": 1}, (1.0, 0.0, -1.0), _block3,
            notes="O(1)+O+O(-1): S5 placed in rows/columns 0 and 2",
            provenance={"expected_hn": _ORACLE_DEGREE},
        ),
        Scenario(
            "S7", 2, "SL", {"center": (0.5, 0.5), "R": 0.45, "d": 1, "higgs_scale": 0.5},
            (1.0, -1.0), _projector_higgs,
            notes="S5 with a holomorphic Higgs field mapping O(-1) into O(1)",
            provenance={"expected_hn": "oracle: Hom-degree argument, O(1) is theta-invariant"},
        ),
        Scenario(
            "S8", 3, "GL", {"base": "S4"}, (0.0, 0.0, 0.0), _adjoint_induced,
            stationary=True,
            notes="adjoint-induced pair of S2/S3/S4 (set base); semistable",
            provenance={"expected_hn": "oracle: adjoint of a semistable pair is semistable"},
        ),
    ]


def get_scenario(name: str, **params) -> Scenario:
    for sc in catalog():
        if sc.name == name:
            if name == "S8" and params.get("base", "S4") not in ("S4",):
                sc = replace(sc, stationary=False)
            return sc.with_params(**params) if params else sc
    raise KeyError(f"unknown scenario {name!r}")
