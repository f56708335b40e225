"""Shared fixtures and independent closed-form oracles for the test suite.

The oracles here are deliberately written from scratch (clamping, sorting,
active-set enumeration) so they stay independent of the library paths they
check.
"""

import itertools

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------------------
# Closed-form projections


def closed_form_box_projection(z, lo, hi):
    return np.minimum(np.maximum(z, lo), hi)


def closed_form_ball_projection(z, center, radius):
    d = z - center
    n = np.linalg.norm(d)
    if n <= radius:
        return np.array(z, dtype=float)
    return center + d * (radius / n)


def closed_form_simplex_projection(z, total=1.0):
    """Projection onto {x >= 0, sum x = total} by the sorting algorithm."""
    z = np.asarray(z, dtype=float)
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - total
    ks = np.arange(1, len(z) + 1)
    cond = u - css / ks > 0
    rho = int(np.max(np.nonzero(cond)[0])) + 1
    theta = css[rho - 1] / rho
    return np.maximum(z - theta, 0.0)


def closed_form_scaled_simplex_projection(z):
    """Projection onto {x >= 0, sum x <= 1} (the reduced simplex)."""
    z = np.asarray(z, dtype=float)
    p = np.maximum(z, 0.0)
    if p.sum() <= 1.0:
        return p
    return closed_form_simplex_projection(z, total=1.0)


# ---------------------------------------------------------------------------
# Active-set brute force for convex QPs over polytopes
#   min 1/2 x^T Q x + c^T x  s.t.  A x <= b


def brute_force_qp(Q, c, A, b, tol=1e-9):
    """Enumerate active subsets; return (x*, value) or None if unbounded
    over the given rows (callers include box rows)."""
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = Q.shape[0]
    best = None
    rows = A.shape[0]
    for size in range(0, n + 1):
        for S in itertools.combinations(range(rows), size):
            S = list(S)
            K = np.zeros((n + size, n + size))
            K[:n, :n] = Q
            if size:
                K[:n, n:] = A[S].T
                K[n:, :n] = A[S]
            rhs = np.concatenate([-c, b[S]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x, lam = sol[:n], sol[n:]
            if np.any(lam < -tol):
                continue
            if np.max(A @ x - b) > 1e-7:
                continue
            val = 0.5 * float(x @ Q @ x) + float(c @ x)
            if best is None or val < best[1] - 1e-12:
                best = (x, val)
    return best


def grid_points(lo, hi, step):
    axes = [np.arange(l, h + step / 2, step) for l, h in zip(lo, hi)]
    return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")],
                    axis=1)
