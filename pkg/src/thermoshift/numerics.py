"""Deterministic numerical kernels: Perron eigendata, bisection, spectral norm.

Everything here is iteration-based with certified stopping rules so that
results are reproducible bit-for-bit across runs (no randomized starts).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import RootBracketError

_MAX_POWER_ITER = 200_000


def perron_value_vector(matrix, tol: float = 1e-13):
    """Perron root and right eigenvector of an irreducible nonnegative matrix.

    Uses Collatz-Wielandt bounds on the shifted matrix ``M + I``; the shift
    makes the iteration converge for periodic (imprimitive) matrices as well.
    Stops once the enclosure ``[lo, hi]`` of the root has width at most
    ``tol * max(1, hi)``.

    Returns ``(value, vector)`` with ``vector`` positive and 1-normalized.
    """
    n = matrix.shape[0]
    if sp.issparse(matrix):
        work = (matrix + sp.identity(n, format=matrix.format)).tocsr()
    else:
        work = np.asarray(matrix, dtype=float) + np.eye(n)
    x = np.full(n, 1.0 / n)
    lo_best, hi_best = 0.0, np.inf
    for _ in range(_MAX_POWER_ITER):
        y = work.dot(x) if sp.issparse(work) else work @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        lo_best = max(lo_best, lo)
        hi_best = min(hi_best, hi)
        x = y / y.sum()
        if hi_best - lo_best <= tol * max(1.0, abs(hi_best)):
            break
    else:
        raise RuntimeError("Perron iteration failed to converge")
    return 0.5 * (lo_best + hi_best) - 1.0, x


def perron_left_vector(matrix, tol: float = 1e-13):
    """Left Perron eigenvector (positive, 1-normalized)."""
    transposed = matrix.T.tocsr() if sp.issparse(matrix) else np.asarray(matrix).T
    _, vec = perron_value_vector(transposed, tol)
    return vec


def bisect_decreasing(fn, lo: float, hi: float, *, width_tol: float = 0.0,
                      max_iter: int = 200):
    """Root of a strictly decreasing function by plain bisection.

    Requires ``fn(lo) >= 0 >= fn(hi)``. Iterates until the bracket width
    drops below ``width_tol`` (or ``max_iter`` halvings, whichever is first;
    200 halvings exhaust double precision). Returns ``(root, (lo, hi))``.
    """
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo < 0 or f_hi > 0:
        raise RootBracketError(
            f"no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")
    for _ in range(max_iter):
        if hi - lo <= width_tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fn(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), (lo, hi)


def expand_bracket(fn, lo: float, hi: float, *, max_doublings: int = 80):
    """Grow ``[lo, hi]`` geometrically until ``fn(lo) >= 0 >= fn(hi)``."""
    span = max(hi - lo, 1.0)
    for _ in range(max_doublings):
        if fn(lo) >= 0:
            break
        lo -= span
        span *= 2
    else:
        raise RootBracketError("could not find a nonnegative left endpoint")
    span = max(hi - lo, 1.0)
    for _ in range(max_doublings):
        if fn(hi) <= 0:
            break
        hi += span
        span *= 2
    else:
        raise RootBracketError("could not find a nonpositive right endpoint")
    return lo, hi


def spectral_norm(matrix: np.ndarray, tol: float = 1e-12) -> float:
    """Largest singular value via power iteration on ``A^T A``.

    Deterministic start; restarts on basis vectors if the start happens to be
    orthogonal to the leading eigenspace. Relative tolerance ``tol`` on the
    Rayleigh quotient.
    """
    a = np.asarray(matrix, dtype=float)
    gram = a.T @ a
    d = gram.shape[0]
    scale = float(np.abs(gram).sum())
    if scale == 0.0:
        return 0.0
    starts = [np.full(d, 1.0 / np.sqrt(d))]
    starts.extend(np.eye(d)[j] for j in range(d))
    for x in starts:
        y = gram @ x
        norm_y = float(np.linalg.norm(y))
        if norm_y <= 1e-300 * scale:
            continue
        lam = float(x @ y)
        for _ in range(_MAX_POWER_ITER):
            x = y / norm_y
            y = gram @ x
            norm_y = float(np.linalg.norm(y))
            lam_new = float(x @ y)
            if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
                return float(np.sqrt(max(lam_new, 0.0)))
            lam = lam_new
            if norm_y == 0.0:
                break
        return float(np.sqrt(max(lam, 0.0)))
    return 0.0
