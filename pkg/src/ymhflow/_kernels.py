"""Hot-loop kernels on fibre-first arrays of shape ``(n, n, N, N)``.

Public fields store ``(N, N, n, n)``; the flow converts once on entry and
works here, where FFTs run over contiguous trailing axes and small matrix
products are ``n^3`` vectorized multiply-adds over the grid.
"""
from __future__ import annotations

import numpy as np
import scipy.fft as sfft


def to_fl(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.moveaxis(a, (0, 1), (-2, -1)))


def to_pl(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.moveaxis(a, (-2, -1), (0, 1)))


def pl_view(a: np.ndarray) -> np.ndarray:
    """``(N, N, n, n)`` view of a fibre-first array, no copy."""
    return np.moveaxis(a, (-2, -1), (0, 1))


def fft(a):
    return sfft.fft2(a)


def ifft(a):
    return sfft.ifft2(a)


def mm(x, y):
    n = x.shape[0]
    out = np.empty(np.broadcast_shapes(x.shape, y.shape), dtype=np.result_type(x, y))
    for i in range(n):
        for k in range(n):
            acc = x[i, 0] * y[0, k]
            for j in range(1, n):
                acc += x[i, j] * y[j, k]
            out[i, k] = acc
    return out


def bracket(x, y):
    return mm(x, y) - mm(y, x)


def dagger(a):
    return np.ascontiguousarray(np.conj(a.transpose(1, 0, 2, 3)))


def norm2(a) -> float:
    N2 = a.shape[-1] * a.shape[-2]
    return float(np.vdot(a, a).real / N2)


def spectral_dagger(A):
    """FFT of ``a^*`` from the FFT ``A`` of ``a``: ``conj(A(-k))^T``."""
    flipped = np.roll(A[..., ::-1, ::-1], 1, axis=(-2, -1))
    return np.conj(flipped.transpose(1, 0, 2, 3))


def truncate(mask, a):
    return ifft(mask * fft(a))


def moment(grid, a, f, mask=None):
    """Moment density ``m``; also returns the FFT of ``m``."""
    A = fft(a)
    B = spectral_dagger(A)
    quad = bracket(a, dagger(a)) + bracket(f, dagger(f))
    Q = fft(quad)
    if mask is not None:
        Q = mask * Q
    M = grid.sigma * A + grid.tau * B + Q
    return ifft(M), M, A, B


def descent(grid, a, f, m, M, mask=None):
    ba = bracket(a, m)
    bf = bracket(f, m)
    if mask is not None:
        ba = truncate(mask, ba)
        bf = truncate(mask, bf)
    return ifft(grid.tau * M) + ba, bf


def residual(grid, a, f):
    return ifft(grid.tau * fft(f)) + bracket(a, f)
