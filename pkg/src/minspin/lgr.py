"""Legendre-Gauss-Radau quadrature, differentiation, and interpolation.

The collocation scheme places n LGR points per mesh interval: the roots of
P_{n-1} + P_n on [-1, 1), which always include tau = -1.  State polynomials
use the n LGR points plus the right endpoint tau = +1 as support; controls
use the LGR points only.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

MIN_POINTS = 1
MAX_POINTS = 12


@lru_cache(maxsize=64)
def lgr_points_weights(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the n LGR points on [-1, 1) and their quadrature weights.

    Weights are positive, sum to 2, and integrate polynomials up to degree
    2n - 2 exactly.
    """
    if not MIN_POINTS <= n <= MAX_POINTS:
        raise ValueError(f"LGR point count must be in [{MIN_POINTS}, {MAX_POINTS}], got {n}")
    if n == 1:
        return np.array([-1.0]), np.array([2.0])

    # roots of P_{n-1} + P_n; companion-matrix roots polished by Newton
    coef = np.zeros(n + 1)
    coef[n - 1] = 1.0
    coef[n] = 1.0
    tau = np.sort(npleg.legroots(coef).real)
    dcoef = npleg.legder(coef)
    for _ in range(2):
        tau -= npleg.legval(tau, coef) / npleg.legval(tau, dcoef)
    tau[0] = -1.0

    pnm1 = npleg.legval(tau, np.eye(n + 1)[n - 1])
    w = np.empty(n)
    w[0] = 2.0 / n**2
    w[1:] = (1.0 - tau[1:]) / (n * pnm1[1:]) ** 2
    tau.setflags(write=False)
    w.setflags(write=False)
    return tau, w


def barycentric_weights(points: np.ndarray) -> np.ndarray:
    """Barycentric interpolation weights for the given support points."""
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None] - pts[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / diff.prod(axis=1)


def differentiation_matrix(points: np.ndarray, rows: np.ndarray | None = None) -> np.ndarray:
    """Derivative of the Lagrange interpolant on `points`, sampled at `rows`.

    With `rows` omitted, differentiates at the support points themselves
    (square matrix).  For the collocation defect matrix pass the n+1 state
    support points and restrict rows to the first n (the LGR points).
    """
    pts = np.asarray(points, dtype=float)
    b = barycentric_weights(pts)
    m = len(pts)
    D = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j:
                D[i, j] = (b[j] / b[i]) / (pts[i] - pts[j])
        D[i, i] = -D[i].sum()
    if rows is not None:
        D = D[np.asarray(rows)]
    return D


@lru_cache(maxsize=64)
def defect_matrix(n: int) -> np.ndarray:
    """n x (n+1) matrix differentiating the state interpolant at LGR points."""
    tau, _ = lgr_points_weights(n)
    support = np.append(tau, 1.0)
    return differentiation_matrix(support, rows=np.arange(n))


@lru_cache(maxsize=64)
def control_derivative_matrix(n: int) -> np.ndarray:
    """n x n matrix differentiating the control interpolant at LGR points."""
    tau, _ = lgr_points_weights(n)
    if n == 1:
        return np.zeros((1, 1))
    return differentiation_matrix(tau)


def lagrange_values(points: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Evaluation matrix: row k holds the Lagrange basis on `points` at tau[k]."""
    pts = np.asarray(points, dtype=float)
    tq = np.atleast_1d(np.asarray(tau, dtype=float))
    b = barycentric_weights(pts)
    out = np.zeros((len(tq), len(pts)))
    for k, t in enumerate(tq):
        d = t - pts
        hit = np.nonzero(np.abs(d) < 1e-14)[0]
        if hit.size:
            out[k, hit[0]] = 1.0
        else:
            r = b / d
            out[k] = r / r.sum()
    return out


def interpolate(points: np.ndarray, values: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Evaluate the interpolant of `values` (..., len(points)) at `tau`."""
    L = lagrange_values(points, tau)
    return np.asarray(values) @ L.T


def lagrange_derivative_values(points: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Row k holds d/dtau of the Lagrange basis on `points` at tau[k]."""
    pts = np.asarray(points, dtype=float)
    tq = np.atleast_1d(np.asarray(tau, dtype=float))
    b = barycentric_weights(pts)
    D_nodes = differentiation_matrix(pts)
    out = np.zeros((len(tq), len(pts)))
    for k, t in enumerate(tq):
        d = t - pts
        hit = np.nonzero(np.abs(d) < 1e-14)[0]
        if hit.size:
            out[k] = D_nodes[hit[0]]
            continue
        r = b / d
        R = r.sum()
        ell = r / R
        q = r / d / R
        out[k] = q.sum() * ell - q
    return out
