"""Higgs pairs on the torus: moment map, YMH energy and its gradient.

A pair ``(alpha, phi)`` stands for the holomorphic structure
``dbar + alpha dzbar`` and the Higgs field ``theta = phi dz`` on the trivial
rank-``n`` bundle with the standard fibre metric.  The Chern connection is
``d + alpha dzbar - alpha^* dz`` and the coefficient of ``dz ^ dzbar`` in
``F + [theta, theta^*]`` is the Hermitian moment density

    m = d_z alpha + d_zbar alpha^* + [alpha, alpha^*] + [phi, phi^*].

``ymh(pair) = <m, m>``.  Writing ``m = m(x)`` the first variation is
``d ymh(v) = -4 Re <descent, v>`` with

    descent_alpha = d_zbar m + [alpha, m],   descent_phi = [phi, m],

so the flow ``d(alpha, phi)/dt = descent`` is the gradient flow of ``ymh/4``
for the real inner product ``Re <., .>``.  The factor only rescales time.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import GridError, KindError, NonConvergence, NoSpectralGap, NotInSubalgebra
from .groups import GroupDescriptor, descriptor, offalg_residual
from . import _kernels as K
from .torus import (
    Kind,
    MatrixField,
    TorusGrid,
    apply_multiplier,
    bracket,
    dagger,
    dealias_mask,
    dzbar_array,
    ifft,
    inner_array,
    norm2_array,
)

log = logging.getLogger(__name__)

__all__ = [
    "HiggsPair",
    "MomentField",
    "chern_moment",
    "ymh",
    "ymh_gradient",
    "directional_derivative",
    "GRADIENT_SCALE",
    "grad_norm",
    "higgs_residual",
    "project_to_higgs",
    "near_kernel_projection",
    "holo_section_count",
    "section_singular_values",
    "dbar_operator",
]

# d ymh(v) = -GRADIENT_SCALE * Re <descent, v>
GRADIENT_SCALE = 4.0
SUBALGEBRA_TOL = 1e-8
DEFAULT_GAP_TOL = (1e-3, 1e-1)
DENSE_LIMIT = 6144


# ---------------------------------------------------------------------------
# position-layout wrappers around the fibre-first kernels

def _dealias_mask(grid: TorusGrid, dealiased: bool):
    return dealias_mask(grid).astype(float) if dealiased else None


def moment_array(grid: TorusGrid, a: np.ndarray, f: np.ndarray, dealiased: bool = False) -> np.ndarray:
    """Moment density of ``(N, N, n, n)`` arrays, same layout out."""
    m = K.moment(grid, K.to_fl(a), K.to_fl(f), _dealias_mask(grid, dealiased))[0]
    return K.to_pl(m)


def descent_arrays(grid: TorusGrid, a: np.ndarray, f: np.ndarray, dealiased: bool = False):
    mask = _dealias_mask(grid, dealiased)
    a, f = K.to_fl(a), K.to_fl(f)
    m, M, _, _ = K.moment(grid, a, f, mask)
    da, df = K.descent(grid, a, f, m, M, mask)
    return K.to_pl(da), K.to_pl(df), K.to_pl(m)


def residual_array(grid: TorusGrid, a: np.ndarray, f: np.ndarray) -> np.ndarray:
    return K.to_pl(K.residual(grid, K.to_fl(a), K.to_fl(f)))


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HiggsPair:
    """``(alpha, phi)``: Form01 and Form10 fields valued in ``group``'s subalgebra.

    Values leaving the subalgebra by more than ``SUBALGEBRA_TOL`` are
    rejected rather than projected away.
    """

    alpha: MatrixField
    phi: MatrixField
    group: GroupDescriptor

    def __post_init__(self):
        if self.alpha.kind is not Kind.FORM01:
            raise KindError(f"alpha must be Form01, got {self.alpha.kind.value}")
        if self.phi.kind is not Kind.FORM10:
            raise KindError(f"phi must be Form10, got {self.phi.kind.value}")
        if not self.alpha.grid.same_as(self.phi.grid):
            raise GridError("alpha and phi live on different grids")
        if not self.alpha.n == self.phi.n == self.group.n:
            raise GridError(
                f"rank mismatch: alpha {self.alpha.n}, phi {self.phi.n}, group {self.group.n}"
            )
        off = self.offalg_residual()
        if off > SUBALGEBRA_TOL:
            raise NotInSubalgebra(
                f"pair leaves {self.group.name}({self.group.n}) by {off:.3e}"
            )

    @classmethod
    def from_arrays(cls, grid: TorusGrid, alpha, phi, group: GroupDescriptor) -> "HiggsPair":
        return cls(MatrixField(grid, alpha, Kind.FORM01), MatrixField(grid, phi, Kind.FORM10), group)

    @classmethod
    def zero(cls, grid: TorusGrid, group: GroupDescriptor) -> "HiggsPair":
        z = np.zeros((grid.N, grid.N, group.n, group.n), complex)
        return cls.from_arrays(grid, z, z.copy(), group)

    @classmethod
    def constant(cls, grid: TorusGrid, group: GroupDescriptor, alpha=None, phi=None) -> "HiggsPair":
        n = group.n
        alpha = np.zeros((n, n)) if alpha is None else alpha
        phi = np.zeros((n, n)) if phi is None else phi
        return cls(
            MatrixField.constant(grid, alpha, Kind.FORM01),
            MatrixField.constant(grid, phi, Kind.FORM10),
            group,
        )

    @property
    def grid(self) -> TorusGrid:
        return self.alpha.grid

    @property
    def n(self) -> int:
        return self.group.n

    def offalg_residual(self) -> float:
        return offalg_residual(self.group, self.alpha.data, self.phi.data)

    def as_group(self, group: GroupDescriptor) -> "HiggsPair":
        return HiggsPair(self.alpha, self.phi, group)

    def ambient(self) -> "HiggsPair":
        """The same fields viewed as a ``GL(n)`` pair."""
        return self.as_group(descriptor("GL", self.n))

    def replace(self, alpha=None, phi=None) -> "HiggsPair":
        a = self.alpha if alpha is None else alpha
        f = self.phi if phi is None else phi
        if isinstance(a, np.ndarray):
            a = MatrixField(self.grid, a, Kind.FORM01)
        if isinstance(f, np.ndarray):
            f = MatrixField(self.grid, f, Kind.FORM10)
        return HiggsPair(a, f, self.group)

    def __add__(self, other: "HiggsPair") -> "HiggsPair":
        return self.replace(self.alpha + other.alpha, self.phi + other.phi)

    def scaled(self, s: complex) -> "HiggsPair":
        return self.replace(self.alpha * s, self.phi * s)

    def __repr__(self):
        return f"HiggsPair(N={self.grid.N}, group={self.group.name}({self.n}))"


@dataclass(frozen=True, eq=False)
class MomentField:
    """Hermitian Density11 field ``m``; vanishes exactly on Hitchin solutions."""

    m: MatrixField

    def hermitian_defect(self) -> float:
        d = self.m.data
        return float(np.max(np.abs(d - dagger(d)), initial=0.0))

    def eigenvalues(self) -> np.ndarray:
        """Pointwise eigenvalues, sorted descending; shape (N, N, n)."""
        d = self.m.data
        w = np.linalg.eigvalsh(0.5 * (d + dagger(d)))
        return w[..., ::-1]


def chern_moment(pair: HiggsPair) -> MomentField:
    """Moment density of the Chern connection plus the Higgs bracket."""
    m = moment_array(pair.grid, pair.alpha.data, pair.phi.data)
    return MomentField(MatrixField(pair.grid, m, Kind.DENSITY11))


def ymh(pair: HiggsPair) -> float:
    return norm2_array(moment_array(pair.grid, pair.alpha.data, pair.phi.data))


def ymh_gradient(pair: HiggsPair):
    """Descent direction ``(dalpha, dphi)`` of the YMH flow (minus the gradient)."""
    da, df, _ = descent_arrays(pair.grid, pair.alpha.data, pair.phi.data)
    return MatrixField(pair.grid, da, Kind.FORM01), MatrixField(pair.grid, df, Kind.FORM10)


def grad_norm(pair: HiggsPair) -> float:
    da, df = ymh_gradient(pair)
    return float(np.sqrt(norm2_array(da.data) + norm2_array(df.data)))


def directional_derivative(pair: HiggsPair, v_alpha: MatrixField, v_phi: MatrixField,
                           descent=None) -> float:
    """First-order change of ``ymh`` along ``(v_alpha, v_phi)`` predicted by the descent field."""
    da, df = ymh_gradient(pair) if descent is None else descent
    pairing = inner_array(da.data, v_alpha.data) + inner_array(df.data, v_phi.data)
    return -GRADIENT_SCALE * pairing.real


def higgs_residual(pair: HiggsPair) -> float:
    """L2 norm of ``d_zbar phi + [alpha, phi]``."""
    return float(np.sqrt(norm2_array(residual_array(pair.grid, pair.alpha.data, pair.phi.data))))


# ---------------------------------------------------------------------------
# dbar_A on End(W) and the projection onto its kernel


def _resolved_mask(grid: TorusGrid) -> np.ndarray:
    """Modes off the Nyquist row and column (those carry a zero derivative)."""
    N = grid.N
    p, q = grid.wavenumbers[..., 0], grid.wavenumbers[..., 1]
    return (p != -N // 2) & (q != -N // 2)


class _AdjointDbar:
    """``phi -> d_zbar phi + [alpha, phi]`` and its L2 adjoint."""

    def __init__(self, alpha: MatrixField):
        self.grid = alpha.grid
        self.a = alpha.data
        self.ad = dagger(alpha.data)

    def __call__(self, f):
        return dzbar_array(self.grid, f) + bracket(self.a, f)

    def adjoint(self, w):
        # <d_zbar f, w> = <f, -d_z w>,  <[a, f], w> = <f, [a^*, w]>
        return -apply_multiplier(self.grid.sigma, w) + bracket(self.ad, w)

    def normal(self, f):
        return self.adjoint(self(f))


def project_to_higgs(alpha: MatrixField, phi0: MatrixField, tol: float = 1e-10,
                     max_iter: int = 2000) -> MatrixField:
    """Orthogonal projection of ``phi0`` onto the kernel of ``dbar_alpha``.

    This is the ``s -> infinity`` limit of the linear descent
    ``dphi/ds = -D^* D phi`` started at ``phi0``.  It is computed with
    preconditioned conjugate gradients on ``D^* D x = D^* D phi0`` started at
    ``x = 0``, which keeps ``x`` orthogonal to the kernel; the result is
    ``phi0 - x``.

    Raises
    ------
    NonConvergence
        If ``||D phi|| >= tol`` after ``max_iter`` iterations.
    """
    if alpha.kind is not Kind.FORM01:
        raise KindError("alpha must be Form01")
    if phi0.kind is not Kind.FORM10:
        raise KindError("phi0 must be Form10")
    if not alpha.grid.same_as(phi0.grid) or alpha.n != phi0.n:
        raise GridError("alpha and phi0 do not match")
    grid = alpha.grid
    D = _AdjointDbar(alpha)
    keep = _resolved_mask(grid).astype(float)
    precond = keep / (np.abs(grid.tau) ** 2 + 1.0)

    def M(r):
        return apply_multiplier(precond, r)

    def normal(f):
        return apply_multiplier(keep, D.normal(f))

    # Nyquist modes have no derivative and are dropped from the start
    phi = apply_multiplier(keep, phi0.data)
    res = np.sqrt(norm2_array(D(phi)))
    if res < tol:
        return phi0.with_data(phi)
    # CG on A x = A phi0 from x = 0, tracking phi = phi0 - x; then r = A phi
    r = normal(phi)
    z = M(r)
    p = z.copy()
    rz = np.vdot(r, z).real
    for it in range(1, max_iter + 1):
        Ap = normal(p)
        pAp = np.vdot(p, Ap).real
        if pAp <= 0:
            break
        step = rz / pAp
        phi -= step * p
        r = r - step * Ap
        res = np.sqrt(norm2_array(D(phi)))
        if res < tol:
            log.debug("project_to_higgs converged in %d iterations (res %.2e)", it, res)
            return phi0.with_data(phi)
        z = M(r)
        rz_new = np.vdot(r, z).real
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergence(
        f"kernel projection stalled at residual {res:.3e} (tol {tol:.1e}) after {max_iter} iterations"
    )


def near_kernel_projection(alpha: MatrixField, phi0: MatrixField, mu: float = 1e-3,
                           passes: int = 4, tol: float = 1e-12, max_iter: int = 2000) -> MatrixField:
    """Project ``phi0`` onto the span of the small singular vectors of ``dbar_alpha``.

    On a grid the Leibniz rule holds only to spectral accuracy, so sections
    that are holomorphic in the continuum show up as singular values of
    ``D = dbar_alpha`` of the size of the discretization error, far below the
    rest of the spectrum.  Each pass applies the resolvent filter
    ``phi -> mu (D^* D + mu)^{-1} phi``, which multiplies a singular component
    ``sigma`` by ``mu / (sigma^2 + mu)``; ``passes`` of them keep components
    with ``sigma^2 << mu`` and remove those with ``sigma^2 >> mu``.

    Raises
    ------
    NonConvergence
        If an inner conjugate-gradient solve does not reach ``tol``.
    """
    if alpha.kind is not Kind.FORM01:
        raise KindError("alpha must be Form01")
    if phi0.kind is not Kind.FORM10:
        raise KindError("phi0 must be Form10")
    if not alpha.grid.same_as(phi0.grid) or alpha.n != phi0.n:
        raise GridError("alpha and phi0 do not match")
    grid = alpha.grid
    D = _AdjointDbar(alpha)
    keep = _resolved_mask(grid).astype(float)
    precond = keep / (np.abs(grid.tau) ** 2 + mu)

    def A(f):
        return apply_multiplier(keep, D.normal(f)) + mu * f

    phi = apply_multiplier(keep, phi0.data)
    for _ in range(passes):
        b = mu * phi
        bnorm = np.sqrt(np.vdot(b, b).real)
        if bnorm == 0.0:
            break
        x = apply_multiplier(precond, b) * mu
        r = b - A(x)
        z = apply_multiplier(precond, r)
        p = z.copy()
        rz = np.vdot(r, z).real
        for it in range(max_iter):
            if np.sqrt(np.vdot(r, r).real) < tol * bnorm:
                break
            Ap = A(p)
            step = rz / np.vdot(p, Ap).real
            x += step * p
            r -= step * Ap
            z = apply_multiplier(precond, r)
            rz_new = np.vdot(r, z).real
            p = z + (rz_new / rz) * p
            rz = rz_new
        else:
            raise NonConvergence(f"resolvent solve did not reach {tol:.1e} in {max_iter} iterations")
        phi = x
    return phi0.with_data(phi)


# ---------------------------------------------------------------------------
# holomorphic sections of W


def dbar_operator(alpha: MatrixField) -> np.ndarray:
    """Dense matrix of ``v -> d_zbar v + alpha v`` on Nyquist-free sections.

    Columns are indexed by an orthonormal plane-wave basis of the resolved
    modes; rows are position-space values (site-major, fibre-minor), both
    with the plain l2 normalization.
    """
    grid, n = alpha.grid, alpha.n
    keep = np.argwhere(_resolved_mask(grid))
    cols = len(keep) * n
    spec = np.zeros((grid.N, grid.N, n, cols), complex)
    c = np.arange(cols)
    spec[np.repeat(keep[:, 0], n), np.repeat(keep[:, 1], n), np.tile(np.arange(n), len(keep)), c] = grid.N
    basis = ifft(spec)
    out = dzbar_array(grid, basis) + np.einsum("xyij,xyjb->xyib", alpha.data, basis)
    return out.reshape(grid.sites * n, cols)


def section_singular_values(alpha: MatrixField, k: int | None = None) -> np.ndarray:
    """Smallest singular values (ascending) of ``dbar + alpha`` on sections."""
    grid, n = alpha.grid, alpha.n
    dim = grid.sites * n
    if dim <= 1024 or (k is None and dim <= DENSE_LIMIT):
        from scipy.linalg import svdvals

        s = np.sort(svdvals(dbar_operator(alpha)))
        return s if k is None else s[:k]
    if dim <= DENSE_LIMIT:
        # bottom of the spectrum of A^*A; absolute accuracy ~ sqrt(eps) * ||A||
        from scipy.linalg import eigh

        A = dbar_operator(alpha)
        w = eigh(A.conj().T @ A, eigvals_only=True, subset_by_index=[0, k - 1])
        return np.sqrt(np.clip(w, 0.0, None))
    from scipy.sparse.linalg import LinearOperator, eigsh

    a, ad = alpha.data, dagger(alpha.data)
    keep = _resolved_mask(grid).astype(float)

    big = 1e3 * float(np.max(np.abs(grid.tau))) ** 2

    def normal(v):
        v = v.reshape(grid.N, grid.N, n)
        vk = apply_multiplier(keep, v)
        w = dzbar_array(grid, vk) + np.einsum("xyij,xyj->xyi", a, vk)
        u = -apply_multiplier(grid.sigma, w) + np.einsum("xyij,xyj->xyi", ad, w)
        # Nyquist block pushed to the top of the spectrum
        u = apply_multiplier(keep, u) + big * (v - vk)
        return u.reshape(-1)

    op = LinearOperator((dim, dim), matvec=normal, dtype=complex)
    k = k or 8
    w = eigsh(op, k=k, which="SA", return_eigenvectors=False, tol=1e-12, maxiter=20 * dim)
    return np.sqrt(np.clip(np.sort(w.real), 0.0, None))


def holo_section_count(alpha: MatrixField, gap_tol=DEFAULT_GAP_TOL) -> int:
    """Number of numerically holomorphic sections of ``(W, dbar + alpha)``.

    Counts singular values below ``gap_tol[0]`` and requires the next one to
    exceed ``gap_tol[1]``.

    Raises
    ------
    NoSpectralGap
        If some singular value falls between the two thresholds.
    """
    if alpha.kind is not Kind.FORM01:
        raise KindError("alpha must be Form01")
    low, high = gap_tol
    s = section_singular_values(alpha, k=max(8, 2 * alpha.n + 2))
    count = int(np.sum(s < low))
    if count >= len(s) or s[count] <= high:
        nxt = s[count] if count < len(s) else float("nan")
        raise NoSpectralGap(
            f"{count} singular values below {low:g} but the next one is {nxt:.3e} <= {high:g}"
        )
    return count
