"""Matrix Lie subalgebras gl, sl, so and sp as orthogonal projectors.

A :class:`GroupDescriptor` carries the orthogonal projection of ``gl(n, C)``
onto a subalgebra ``h`` that is closed under brackets and under conjugate
transpose.  The image of the projector plays the role of the adjoint bundle
of the reduced structure group and its kernel is the orthogonal complement
inside ``End(W)``.  Every descriptor checks those properties on a full
matrix basis when it is built.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GridError, InvalidDescriptor
from .torus import MatrixField, bracket, norm2_array

__all__ = [
    "GroupDescriptor",
    "Representation",
    "descriptor",
    "split_field",
    "offalg_residual",
    "inclusion_rep",
    "adjoint_rep",
    "symplectic_form",
]

GROUP_NAMES = ("GL", "SL", "SO", "SP")
GS_TOL = 1e-12
CHECK_TOL = 1e-12


def symplectic_form(n: int) -> np.ndarray:
    """Standard block ``J = [[0, I], [-I, 0]]`` with ``J @ J = -I``."""
    m = n // 2
    J = np.zeros((n, n))
    J[:m, m:] = np.eye(m)
    J[m:, :m] = -np.eye(m)
    return J


def _transpose(a):
    return np.swapaxes(a, -1, -2)


def _make_projector(name: str, n: int, form: np.ndarray | None) -> Callable:
    if name == "GL":
        return lambda a: np.array(a, dtype=complex, copy=True)
    if name == "SL":
        eye = np.eye(n)

        def project(a):
            tr = np.trace(a, axis1=-2, axis2=-1)[..., None, None]
            return a - tr * eye / n

        return project
    if name == "SO":
        return lambda a: 0.5 * (a - _transpose(a))
    if name == "SP":
        J = form
        return lambda a: 0.5 * (a + J @ _transpose(a) @ J)
    raise InvalidDescriptor(f"unknown group {name!r}")


def _matrix_basis(n: int) -> np.ndarray:
    return np.eye(n * n, dtype=complex).reshape(n * n, n, n)


def _frobenius(a, b) -> complex:
    return complex(np.vdot(b, a))


def _gram_schmidt(candidates, tol=GS_TOL) -> list[np.ndarray]:
    """Modified Gram-Schmidt on matrices; drops vectors with residual norm < tol."""
    basis: list[np.ndarray] = []
    for c in candidates:
        v = np.array(c, dtype=complex)
        for b in basis:
            v = v - _frobenius(v, b) * b
        nv = np.sqrt(_frobenius(v, v).real)
        if nv > tol:
            basis.append(v / nv)
    return basis


@dataclass(frozen=True, eq=False)
class GroupDescriptor:
    """Subalgebra ``h`` of ``gl(n, C)`` given by its orthogonal projector.

    ``basis`` is an orthonormal basis of ``h`` made of Hermitian matrices, so
    that coefficients of ``X*`` are the complex conjugates of those of ``X``.
    """

    name: str
    n: int
    project: Callable = field(repr=False)
    form_matrix: np.ndarray | None = field(default=None, repr=False)
    basis: tuple = field(default=(), repr=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def is_proper(self) -> bool:
        return self.name != "GL"

    @property
    def traceless(self) -> bool:
        return self.name != "GL"

    def normal(self, a: np.ndarray) -> np.ndarray:
        return a - self.project(a)

    def projector_matrix(self) -> np.ndarray:
        """``n^2 x n^2`` matrix of the projector on row-major ``vec``."""
        E = _matrix_basis(self.n)
        return np.stack([self.project(e).reshape(-1) for e in E], axis=1)

    def coefficients(self, a: np.ndarray) -> np.ndarray:
        """Coordinates of ``a`` (..., n, n) in ``basis``; shape (..., dim)."""
        T = np.stack(self.basis)
        return np.einsum("...ij,aij->...a", a, T.conj())

    def __eq__(self, other):
        return isinstance(other, GroupDescriptor) and (self.name, self.n) == (other.name, other.n)

    def __hash__(self):
        return hash((self.name, self.n))


def _verify(G: GroupDescriptor):
    n = G.n
    E = _matrix_basis(n)
    PE = G.project(E)
    if np.max(np.abs(G.project(PE) - PE)) > CHECK_TOL:
        raise InvalidDescriptor(f"{G.name}({n}): projector is not idempotent")
    M = G.projector_matrix()
    if np.max(np.abs(M - M.conj().T)) > CHECK_TOL:
        raise InvalidDescriptor(f"{G.name}({n}): projector is not self-adjoint")
    adj = np.conj(_transpose(E))
    if np.max(np.abs(G.project(adj) - np.conj(_transpose(PE)))) > CHECK_TOL:
        raise InvalidDescriptor(f"{G.name}({n}): image is not closed under *")
    T = np.stack(G.basis)
    br = bracket(T[:, None], T[None, :])
    if np.max(np.abs(G.project(br) - br), initial=0.0) > CHECK_TOL:
        raise InvalidDescriptor(f"{G.name}({n}): image is not bracket-closed")
    rank = int(round(np.trace(M).real))
    if rank != len(G.basis):
        raise InvalidDescriptor(f"{G.name}({n}): basis size {len(G.basis)} != rank {rank}")


def descriptor(name: str, n: int) -> GroupDescriptor:
    """Build and self-check the descriptor of ``gl``, ``sl``, ``so`` or ``sp``.

    ``SO`` uses the symmetric form ``I`` and ``SP`` the standard block form;
    other nondegenerate forms are related to these by a constant gauge.
    """
    name = str(name).upper()
    if name not in GROUP_NAMES:
        raise InvalidDescriptor(f"unknown group {name!r}; expected one of {GROUP_NAMES}")
    if int(n) != n or n < 1:
        raise InvalidDescriptor(f"matrix size must be a positive integer, got {n!r}")
    n = int(n)
    if name == "SP" and n % 2:
        raise InvalidDescriptor(f"SP requires even n, got {n}")
    if name in ("SL", "SO") and n < 2:
        raise InvalidDescriptor(f"{name} requires n >= 2")
    form = None
    if name == "SO":
        form = np.eye(n)
    elif name == "SP":
        form = symplectic_form(n)
    project = _make_projector(name, n, form)

    hermitian = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n), complex)
            e[i, j] = e[j, i] = 1.0
            hermitian.append(e)
            if i != j:
                f = np.zeros((n, n), complex)
                f[i, j], f[j, i] = -1j, 1j
                hermitian.append(f)
    basis = _gram_schmidt([project(h) for h in hermitian])
    G = GroupDescriptor(name, n, project, form, tuple(basis))
    _verify(G)
    return G


def split_field(f: MatrixField, G: GroupDescriptor):
    """Split ``f`` pointwise into its ``h`` part and its orthogonal complement."""
    if f.n != G.n:
        raise GridError(f"rank mismatch: field n={f.n}, group n={G.n}")
    tangent = G.project(f.data)
    return f.with_data(tangent), f.with_data(f.data - tangent)


def offalg_residual(G: GroupDescriptor, *arrays) -> float:
    """L2 norm of the components of the given field arrays outside ``h``."""
    if not G.is_proper:
        return 0.0
    return float(np.sqrt(sum(norm2_array(G.normal(a)) for a in arrays)))


@dataclass(frozen=True, eq=False)
class Representation:
    """Lie algebra homomorphism ``h -> gl(dim)`` given on an orthonormal basis.

    ``images[a]`` is the image of ``source.basis[a]``.
    """

    source: GroupDescriptor
    dim: int
    images: tuple = field(repr=False)
    name: str = "rep"

    @property
    def basis(self):
        return self.source.basis

    def structure_constants(self) -> np.ndarray:
        """``f[a, b, c] = <[T_a, T_b], T_c>``."""
        T = np.stack(self.basis)
        br = bracket(T[:, None], T[None, :])
        return np.einsum("abij,cij->abc", br, T.conj())

    def bracket_defect(self) -> float:
        f = self.structure_constants()
        R = np.stack(self.images)
        lhs = bracket(R[:, None], R[None, :])
        rhs = np.einsum("abc,cij->abij", f, R)
        return float(np.max(np.abs(lhs - rhs), initial=0.0))

    def apply(self, a: np.ndarray) -> np.ndarray:
        """Push an ``h``-valued array (..., n, n) through the representation."""
        coeff = self.source.coefficients(a)
        return np.einsum("...a,aij->...ij", coeff, np.stack(self.images))


def inclusion_rep(G: GroupDescriptor) -> Representation:
    return Representation(G, G.n, tuple(G.basis), name="inclusion")


def adjoint_rep(G: GroupDescriptor) -> Representation:
    """Adjoint representation ``ad(T_a)`` written in the basis ``{T_b}``."""
    if not G.is_proper:
        raise InvalidDescriptor("adjoint_rep expects a proper subalgebra (SL/SO/SP)")
    T = np.stack(G.basis)
    br = bracket(T[:, None], T[None, :])            # [T_a, T_c]
    R = np.einsum("acij,bij->abc", br, T.conj())     # R[a][b, c] = <[T_a, T_c], T_b>
    rep = Representation(G, G.dim, tuple(R), name="adjoint")
    defect = rep.bracket_defect()
    if defect > CHECK_TOL:
        raise InvalidDescriptor(f"adjoint representation bracket defect {defect:.2e}")
    return rep
