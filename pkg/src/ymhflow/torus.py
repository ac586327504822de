"""Flat square torus, spectral Dolbeault calculus and matrix-valued fields.

The base surface is the unit-area torus ``C / (Z + iZ)`` with coordinate
``z = x + iy``.  A grid of ``N x N`` sites carries the values ``data[j, k]``
at ``(x, y) = (j/N, k/N)``.  Fourier mode ``exp(2 pi i (p x + q y))`` sits at
FFT index ``(p mod N, q mod N)``.

Derivatives are spectral:

    d/dz     multiplies mode (p, q) by  pi*i*(p - i q)
    d/dzbar  multiplies mode (p, q) by  pi*i*(p + i q)

and every mode with ``p == -N/2`` or ``q == -N/2`` is dropped.  With the
Nyquist row and column removed the two multipliers satisfy
``tau(-k) = -tau(k)`` and ``tau(k) = -conj(sigma(k))``, which is what makes
``dbar(f*) == (d f)*`` and the integration-by-parts identity hold exactly in
floating point arithmetic.

All field data is stored in position space.  Transforms are computed on
demand inside each call and never cached across calls.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, KindError

__all__ = [
    "Kind",
    "TorusGrid",
    "MatrixField",
    "SectionField",
    "make_grid",
    "d_z",
    "d_zbar",
    "adjoint_field",
    "hodge_star",
    "inner",
    "norm2",
    "commutator",
    "dealias",
]

MIN_N = 8
MAX_N = 512


class Kind(enum.Enum):
    """Form type of a matrix field."""

    FUNCTION = "Function"
    FORM01 = "Form01"
    FORM10 = "Form10"
    DENSITY11 = "Density11"


_ADJOINT_KIND = {
    Kind.FUNCTION: Kind.FUNCTION,
    Kind.DENSITY11: Kind.DENSITY11,
    Kind.FORM01: Kind.FORM10,
    Kind.FORM10: Kind.FORM01,
}
_DZ_KIND = {Kind.FUNCTION: Kind.FORM10, Kind.FORM01: Kind.DENSITY11}
_DZBAR_KIND = {Kind.FUNCTION: Kind.FORM01, Kind.FORM10: Kind.DENSITY11}


def _bracket_kind(a: Kind, b: Kind) -> Kind:
    if a is Kind.FUNCTION:
        return b
    if b is Kind.FUNCTION:
        return a
    if {a, b} == {Kind.FORM01, Kind.FORM10}:
        return Kind.DENSITY11
    raise KindError(f"cannot bracket {a.value} with {b.value}")


@dataclass(frozen=True, eq=False)
class TorusGrid:
    """Unit-area square torus sampled on an ``N x N`` grid.

    Attributes
    ----------
    N : int
        Grid points per side (even, 8 <= N <= 512).
    wavenumbers : ndarray, shape (N, N, 2), int
        Integer pair ``(p, q)`` stored at each FFT index.
    sigma, tau : ndarray, shape (N, N), complex
        Fourier multipliers of d/dz and d/dzbar with the Nyquist modes zeroed.
    """

    N: int
    area: float = field(default=1.0, init=False)
    tau_modulus: complex = field(default=1j, init=False)
    wavenumbers: np.ndarray = field(init=False, repr=False)
    sigma: np.ndarray = field(init=False, repr=False)
    tau: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        N = self.N
        k = np.fft.fftfreq(N, d=1.0 / N).round().astype(np.int64)
        p, q = np.meshgrid(k, k, indexing="ij")
        nyquist = (p == -N // 2) | (q == -N // 2)
        sigma = np.pi * 1j * (p - 1j * q)
        tau = np.pi * 1j * (p + 1j * q)
        sigma[nyquist] = 0.0
        tau[nyquist] = 0.0
        wn = np.stack([p, q], axis=-1)
        for arr in (wn, sigma, tau):
            arr.setflags(write=False)
        object.__setattr__(self, "wavenumbers", wn)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "tau", tau)

    @property
    def sites(self) -> int:
        return self.N * self.N

    @property
    def h(self) -> float:
        return 1.0 / self.N

    def coordinates(self):
        """Return ``(x, y)`` arrays of shape ``(N, N)``."""
        s = np.arange(self.N) / self.N
        return np.meshgrid(s, s, indexing="ij")

    def k2(self) -> np.ndarray:
        """``p**2 + q**2`` per FFT index, zero on the Nyquist row/column."""
        return (np.abs(self.sigma) / np.pi) ** 2

    def same_as(self, other: "TorusGrid") -> bool:
        return self is other or self.N == other.N

    def __eq__(self, other):
        return isinstance(other, TorusGrid) and other.N == self.N

    def __hash__(self):
        return hash(("TorusGrid", self.N))


def make_grid(N: int) -> TorusGrid:
    """Build the unit-area square torus grid with ``N`` points per side."""
    if isinstance(N, bool) or int(N) != N:
        raise GridError(f"N must be an integer, got {N!r}")
    N = int(N)
    if N % 2 or not MIN_N <= N <= MAX_N:
        raise GridError(f"N must be even with {MIN_N} <= N <= {MAX_N}, got {N}")
    return TorusGrid(N)


# ---------------------------------------------------------------------------
# array-level kernels; leading two axes are the grid, the rest is fibre

def fft(a: np.ndarray) -> np.ndarray:
    return np.fft.fft2(a, axes=(0, 1))


def ifft(a: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(a, axes=(0, 1))


def _bcast(mult: np.ndarray, ndim: int) -> np.ndarray:
    return mult.reshape(mult.shape + (1,) * (ndim - 2))


def apply_multiplier(mult: np.ndarray, a: np.ndarray) -> np.ndarray:
    return ifft(_bcast(mult, a.ndim) * fft(a))


def dz_array(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    return apply_multiplier(grid.sigma, a)


def dzbar_array(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    return apply_multiplier(grid.tau, a)


def dagger(a: np.ndarray) -> np.ndarray:
    """Pointwise conjugate transpose of an ``(N, N, n, n)`` array."""
    return np.conj(np.swapaxes(a, -1, -2))


def bracket(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def dealias_mask(grid: TorusGrid) -> np.ndarray:
    """Boolean mask of modes kept by the 2/3 rule."""
    p, q = grid.wavenumbers[..., 0], grid.wavenumbers[..., 1]
    cut = grid.N // 3
    return (np.abs(p) <= cut) & (np.abs(q) <= cut)


def truncate_array(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    return apply_multiplier(dealias_mask(grid).astype(float), a)


def inner_array(a: np.ndarray, b: np.ndarray) -> complex:
    """``(1/N^2) sum_sites trace(a b^*)``."""
    N2 = a.shape[0] * a.shape[1]
    return complex(np.vdot(b, a) / N2)


def norm2_array(a: np.ndarray) -> float:
    N2 = a.shape[0] * a.shape[1]
    return float(np.vdot(a, a).real / N2)


# ---------------------------------------------------------------------------


class MatrixField:
    """Grid of ``n x n`` complex matrices tagged with a form kind.

    ``data`` has shape ``(N, N, n, n)`` and holds position-space values.  For
    the one-form kinds the stored matrix is the coefficient of ``dzbar``
    (``Form01``) or ``dz`` (``Form10``); for ``Density11`` it is the
    coefficient of ``dz ^ dzbar``.
    """

    __slots__ = ("grid", "kind", "data")
    __array_priority__ = 100

    def __init__(self, grid: TorusGrid, data, kind: Kind = Kind.FUNCTION):
        data = np.asarray(data, dtype=np.complex128)
        N = grid.N
        if data.ndim != 4 or data.shape[:2] != (N, N) or data.shape[2] != data.shape[3]:
            raise GridError(
                f"field data must have shape ({N}, {N}, n, n), got {data.shape}"
            )
        self.grid = grid
        self.kind = Kind(kind)
        self.data = data

    # construction helpers
    @classmethod
    def zeros(cls, grid: TorusGrid, n: int, kind: Kind = Kind.FUNCTION) -> "MatrixField":
        return cls(grid, np.zeros((grid.N, grid.N, n, n), complex), kind)

    @classmethod
    def constant(cls, grid: TorusGrid, matrix, kind: Kind = Kind.FUNCTION) -> "MatrixField":
        matrix = np.asarray(matrix, dtype=np.complex128)
        data = np.broadcast_to(matrix, (grid.N, grid.N) + matrix.shape).copy()
        return cls(grid, data, kind)

    @classmethod
    def from_scalar(cls, grid: TorusGrid, values, matrix, kind: Kind = Kind.FUNCTION) -> "MatrixField":
        """Field ``values(x, y) * matrix`` for a scalar array ``values``."""
        values = np.asarray(values, dtype=np.complex128)
        matrix = np.asarray(matrix, dtype=np.complex128)
        return cls(grid, values[..., None, None] * matrix, kind)

    @classmethod
    def random(cls, grid: TorusGrid, n: int, kind: Kind = Kind.FUNCTION, rng=None,
               bandlimit: int | None = None) -> "MatrixField":
        """Random field; with ``bandlimit`` only modes with ``|p|,|q| <= bandlimit`` survive."""
        rng = np.random.default_rng(rng)
        shape = (grid.N, grid.N, n, n)
        data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        if bandlimit is not None:
            p, q = grid.wavenumbers[..., 0], grid.wavenumbers[..., 1]
            keep = ((np.abs(p) <= bandlimit) & (np.abs(q) <= bandlimit)).astype(float)
            data = apply_multiplier(keep, data)
        return cls(grid, data, kind)

    @property
    def n(self) -> int:
        return self.data.shape[-1]

    def copy(self) -> "MatrixField":
        return MatrixField(self.grid, self.data.copy(), self.kind)

    def with_data(self, data, kind: Kind | None = None) -> "MatrixField":
        return MatrixField(self.grid, data, self.kind if kind is None else kind)

    def _check(self, other: "MatrixField", same_kind: bool = True):
        if not isinstance(other, MatrixField):
            raise TypeError(f"expected MatrixField, got {type(other).__name__}")
        if not self.grid.same_as(other.grid):
            raise GridError(f"grid mismatch: N={self.grid.N} vs N={other.grid.N}")
        if self.n != other.n:
            raise GridError(f"rank mismatch: {self.n} vs {other.n}")
        if same_kind and self.kind is not other.kind:
            raise KindError(f"kind mismatch: {self.kind.value} vs {other.kind.value}")

    def __add__(self, other):
        self._check(other)
        return self.with_data(self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return self.with_data(self.data - other.data)

    def __neg__(self):
        return self.with_data(-self.data)

    def __mul__(self, scalar):
        if isinstance(scalar, MatrixField):
            return NotImplemented
        return self.with_data(self.data * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self.with_data(self.data / complex(scalar))

    def adjoint(self) -> "MatrixField":
        return adjoint_field(self)

    def trace(self) -> np.ndarray:
        return np.trace(self.data, axis1=-2, axis2=-1)

    def sup_norm(self) -> float:
        """Largest entry modulus over all sites."""
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def modes(self) -> np.ndarray:
        """Normalized Fourier coefficients (mean-zero FFT divided by N^2)."""
        return fft(self.data) / self.grid.sites

    def __repr__(self):
        return f"MatrixField(N={self.grid.N}, n={self.n}, kind={self.kind.value})"


class SectionField:
    """Grid of ``n``-component complex vectors (sections of the trivial bundle)."""

    __slots__ = ("grid", "data")

    def __init__(self, grid: TorusGrid, data):
        data = np.asarray(data, dtype=np.complex128)
        if data.ndim != 3 or data.shape[:2] != (grid.N, grid.N):
            raise GridError(f"section data must have shape ({grid.N}, {grid.N}, n)")
        self.grid = grid
        self.data = data

    @property
    def n(self) -> int:
        return self.data.shape[-1]

    def apply(self, f: MatrixField) -> "SectionField":
        """Pointwise ``f(x) v(x)``."""
        if not self.grid.same_as(f.grid) or f.n != self.n:
            raise GridError("section and matrix field do not match")
        return SectionField(self.grid, np.einsum("...ij,...j->...i", f.data, self.data))

    def __repr__(self):
        return f"SectionField(N={self.grid.N}, n={self.n})"


def d_z(f: MatrixField) -> MatrixField:
    """Spectral d/dz.  Function -> Form10, Form01 -> Density11."""
    try:
        kind = _DZ_KIND[f.kind]
    except KeyError:
        raise KindError(f"d_z is not defined on {f.kind.value}") from None
    return f.with_data(dz_array(f.grid, f.data), kind)


def d_zbar(f: MatrixField) -> MatrixField:
    """Spectral d/dzbar.  Function -> Form01, Form10 -> Density11.

    The (1,1) result is reported as the coefficient of ``dz ^ dzbar``; the
    sign flip from ``dzbar ^ dz`` is left to the caller, which is where the
    curvature and moment formulas track it.
    """
    try:
        kind = _DZBAR_KIND[f.kind]
    except KeyError:
        raise KindError(f"d_zbar is not defined on {f.kind.value}") from None
    return f.with_data(dzbar_array(f.grid, f.data), kind)


def adjoint_field(f: MatrixField) -> MatrixField:
    """Pointwise conjugate transpose; swaps Form01 and Form10."""
    return f.with_data(dagger(f.data), _ADJOINT_KIND[f.kind])


def hodge_star(f: MatrixField) -> MatrixField:
    """Identify Density11 coefficients with functions (and back) on the flat torus."""
    if f.kind is Kind.DENSITY11:
        return f.with_data(f.data, Kind.FUNCTION)
    if f.kind is Kind.FUNCTION:
        return f.with_data(f.data, Kind.DENSITY11)
    raise KindError(f"hodge_star expects Function or Density11, got {f.kind.value}")


def inner(u: MatrixField, v: MatrixField) -> complex:
    """``<u, v> = (1/N^2) sum_sites trace(u v^*)``; linear in ``u``."""
    u._check(v)
    return inner_array(u.data, v.data)


def norm2(u: MatrixField) -> float:
    return norm2_array(u.data)


def commutator(u: MatrixField, v: MatrixField) -> MatrixField:
    """Pointwise ``uv - vu`` with kind tracking."""
    u._check(v, same_kind=False)
    kind = _bracket_kind(u.kind, v.kind)
    return u.with_data(bracket(u.data, v.data), kind)


def dealias(f: MatrixField) -> MatrixField:
    """Zero all modes outside the 2/3-rule box."""
    return f.with_data(truncate_array(f.grid, f.data))
