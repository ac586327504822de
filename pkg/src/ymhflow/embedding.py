"""Subgroup pairs viewed inside the ambient ``GL(n)`` configuration space."""
from __future__ import annotations

import numpy as np

from .errors import InvalidDescriptor, NotInSubalgebra
from .groups import Representation, descriptor, offalg_residual
from .higgs import HiggsPair, moment_array, ymh_gradient
from .torus import Kind, MatrixField

__all__ = ["check_tangency", "induce_representation", "ymh_intrinsic", "TANGENCY_PRECONDITION"]

TANGENCY_PRECONDITION = 1e-12


def check_tangency(pair: HiggsPair) -> float:
    """Norm of the part of the ambient YMH gradient normal to the subalgebra.

    The pair is re-read as a ``GL(n)`` pair, its gradient computed there, and
    the component in the orthogonal complement of the pair's subalgebra is
    measured.
    """
    G = pair.group
    off = offalg_residual(G, pair.alpha.data, pair.phi.data)
    if off > TANGENCY_PRECONDITION:
        raise NotInSubalgebra(f"pair leaves {G.name}({G.n}) by {off:.3e}")
    da, df = ymh_gradient(pair.ambient())
    return offalg_residual(G, da.data, df.data)


def ymh_intrinsic(pair: HiggsPair) -> float:
    """YMH computed from the coordinates of ``m`` in the subalgebra's orthonormal basis."""
    m = moment_array(pair.grid, pair.alpha.data, pair.phi.data)
    coeff = pair.group.coefficients(m)
    return float(np.sum(np.abs(coeff) ** 2).real / pair.grid.sites)


def induce_representation(pair: HiggsPair, rep: Representation) -> HiggsPair:
    """Push ``(alpha, phi)`` through ``rep``; the result is a ``GL(rep.dim)`` pair."""
    if rep.source != pair.group:
        raise InvalidDescriptor(
            f"representation of {rep.source.name}({rep.source.n}) applied to a "
            f"{pair.group.name}({pair.group.n}) pair"
        )
    grid = pair.grid
    a = rep.apply(pair.alpha.data)
    f = rep.apply(pair.phi.data)
    target = descriptor("GL", rep.dim)
    return HiggsPair(MatrixField(grid, a, Kind.FORM01), MatrixField(grid, f, Kind.FORM10), target)

