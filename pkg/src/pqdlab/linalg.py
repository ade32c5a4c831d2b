"""Small dense linear algebra: Cholesky solves, cyclic Jacobi eigenvalues, error-free dot products."""
from __future__ import annotations

import math

import numba
import numpy as np

from .exceptions import SingularMatrixError

__all__ = ["cholesky", "cho_solve", "dot2", "jacobi_eigenvalues", "spd_solve"]

_PIVOT_RTOL = 1e-13
JACOBI_MAX_DIM = 16


def _symmetric(a):
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=1e-12, atol=0.0):
        raise ValueError("matrix is not symmetric")
    return a


def cholesky(a):
    """Lower factor ``L`` with ``L L' = a``.

    A pivot that is not positive, or that has lost all but ``1e-13`` of its
    diagonal entry to cancellation, raises :class:`SingularMatrixError`
    naming the (1-based) pivot and its value.
    """
    a = _symmetric(a)
    p = a.shape[0]
    L = np.zeros_like(a)
    for j in range(p):
        d = a[j, j] - math.fsum(L[j, :j] ** 2)
        if not d > _PIVOT_RTOL * abs(a[j, j]) or not math.isfinite(d):
            raise SingularMatrixError(j + 1, d)
        L[j, j] = math.sqrt(d)
        for i in range(j + 1, p):
            L[i, j] = (a[i, j] - math.fsum(L[i, :j] * L[j, :j])) / L[j, j]
    return L


def cho_solve(L, b):
    """Solve ``L L' x = b`` by forward and back substitution."""
    b = np.asarray(b, dtype=float)
    p = L.shape[0]
    z = np.zeros(p)
    for i in range(p):
        z[i] = (b[i] - math.fsum(L[i, :i] * z[:i])) / L[i, i]
    x = np.zeros(p)
    for i in reversed(range(p)):
        x[i] = (z[i] - math.fsum(L[i + 1 :, i] * x[i + 1 :])) / L[i, i]
    return x


def spd_solve(a, b):
    return cho_solve(cholesky(a), b)


def jacobi_eigenvalues(a, tol=1e-12, max_sweeps=100):
    """Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm is below ``tol`` times
    the Frobenius norm of the input.
    """
    a = _symmetric(a)
    p = a.shape[0]
    if p > JACOBI_MAX_DIM:
        raise ValueError(f"Jacobi solver is limited to p <= {JACOBI_MAX_DIM}, got {p}")
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(p)
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * scale:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                if a[i, j] == 0.0:
                    continue
                # rotation angle from the stable tan formula
                diff = a[j, j] - a[i, i]
                if abs(a[i, j]) < 1e-150 * abs(diff):
                    # theta^2 would overflow; tan of the angle is a_ij / diff to working precision
                    t = a[i, j] / diff
                else:
                    theta = diff / (2.0 * a[i, j])
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ai = a[:, i].copy()
                aj = a[:, j].copy()
                a[:, i] = c * ai - s * aj
                a[:, j] = s * ai + c * aj
                ri = a[i, :].copy()
                rj = a[j, :].copy()
                a[i, :] = c * ri - s * rj
                a[j, :] = s * ri + c * rj
                a[i, j] = a[j, i] = 0.0
    return np.sort(np.diag(a))


@numba.njit(cache=True)
def _dot2(x, y):
    split = 134217729.0
    s = 0.0
    c = 0.0
    for i in range(x.shape[0]):
        a = x[i]
        b = y[i]
        p = a * b
        t = split * a
        ah = t - (t - a)
        al = a - ah
        t = split * b
        bh = t - (t - b)
        bl = b - bh
        perr = ((ah * bh - p) + ah * bl + al * bh) + al * bl
        snew = s + p
        bb = snew - s
        serr = (s - (snew - bb)) + (p - bb)
        s = snew
        c += serr + perr
    return s + c


def dot2(x, y) -> float:
    """Dot product as accurate as if computed in twice the working precision."""
    x = np.ascontiguousarray(x, dtype=float).reshape(-1)
    y = np.ascontiguousarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise ValueError("dot2 needs vectors of equal length")
    return float(_dot2(x, y))
