"""ph-style mesh refinement driven by dynamics-residual error estimates.

Each interval's state interpolant is differentiated and compared against
the plant rates on a denser LGR sample grid; the integrated, normalized
residual is the interval error.  Over-tolerance intervals either get more
collocation points (smooth behavior, judged by the decay of the residual
under degree reduction) or are split in two with the degree reset.
Refinement never moves domain boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lgr
from .collocation import (
    MAX_MESH_POINTS,
    MIN_MESH_POINTS,
    CollocationProblem,
    DiscreteSolution,
    Domain,
    Mesh,
)
from .dynamics import rates

#: residual-decay ratio below which an interval counts as smooth (p-refine)
SMOOTH_DECAY = 0.3
H_SPLIT = 2


@dataclass(frozen=True)
class ErrorEstimate:
    """Per-interval relative dynamics-residual errors plus decay diagnostics."""

    per_interval: np.ndarray
    decay: np.ndarray  # error ratio per interval: current degree vs one lower

    @property
    def global_max(self) -> float:
        return float(self.per_interval.max())


def _interval_residual(
    a: float,
    Ysup: np.ndarray,
    Ucol: np.ndarray,
    tau_state: np.ndarray,
    tau_ctrl: np.ndarray,
    dt: float,
    sample_n: int,
    norm: np.ndarray,
) -> float:
    tq, wq = lgr.lgr_points_weights(sample_n)
    Yq = lgr.interpolate(tau_state, Ysup, tq)
    dYq = Ysup @ lgr.lagrange_derivative_values(tau_state, tq).T * (2.0 / dt)
    Uq = lgr.interpolate(tau_ctrl, Ucol, tq)
    resid = np.abs(dYq - rates(a, Yq, Uq))
    integ = 0.5 * dt * resid @ wq
    return float(np.max(integ / norm))


def estimate_error(problem: CollocationProblem, solution: DiscreteSolution) -> ErrorEstimate:
    """Integrated dynamics residual of each interval's interpolant."""
    a = problem.maneuver.model.a
    Y = solution.states
    U = solution.controls
    T = solution.durations
    norm = 1.0 + np.max(np.abs(Y), axis=1)
    errs = np.zeros(len(problem._intervals))
    decay = np.zeros(len(problem._intervals))
    for idx, (di, k, n, h, c0) in enumerate(problem._intervals):
        tau, _ = lgr.lgr_points_weights(n)
        sup = np.append(tau, 1.0)
        Ysup = Y[:, c0 : c0 + n + 1]
        Ucol = U[:, c0 : c0 + n]
        dt = h * T[di]
        dense = min(n + 1, MAX_MESH_POINTS)
        errs[idx] = _interval_residual(a, Ysup, Ucol, sup, tau, dt, dense, norm)
        # residual of the degree-reduced re-interpolation gauges smoothness
        if n > MIN_MESH_POINTS:
            tau_lo, _ = lgr.lgr_points_weights(n - 1)
            sup_lo = np.append(tau_lo, 1.0)
            Ysup_lo = lgr.interpolate(sup, Ysup, sup_lo)
            Ucol_lo = lgr.interpolate(tau, Ucol, tau_lo)
            err_lo = _interval_residual(a, Ysup_lo, Ucol_lo, sup_lo, tau_lo, dt, dense, norm)
        else:
            tau_hi = np.linspace(-1.0, 1.0, n + 1)[:-1]
            Ysup_hi = Ysup
            err_lo = _interval_residual(
                a,
                lgr.interpolate(sup, Ysup, np.append(tau_hi, 1.0)),
                lgr.interpolate(tau, Ucol, tau_hi),
                np.append(tau_hi, 1.0),
                tau_hi,
                dt,
                dense,
                norm,
            )
        decay[idx] = errs[idx] / max(err_lo, 1e-300)
    return ErrorEstimate(per_interval=errs, decay=decay)


def refine(mesh: Mesh, estimate: ErrorEstimate, tolerance: float) -> Mesh:
    """New mesh: p-refine smooth over-tolerance intervals, h-split the rest."""
    new_domains = []
    idx = 0
    for dom in mesh.domains:
        fr = list(dom.intervals)
        new_fr = [fr[0]]
        new_pts = []
        for k, n in enumerate(dom.points):
            e = estimate.per_interval[idx]
            rho = estimate.decay[idx]
            idx += 1
            left, right = fr[k], fr[k + 1]
            if e <= tolerance:
                new_fr.append(right)
                new_pts.append(n)
                continue
            if rho <= SMOOTH_DECAY:
                growth = int(np.ceil(np.log(e / tolerance) / np.log(1.0 / rho)))
                n_new = n + max(1, min(growth, 3))
                if n_new <= MAX_MESH_POINTS:
                    new_fr.append(right)
                    new_pts.append(n_new)
                    continue
            for piece in range(1, H_SPLIT + 1):
                new_fr.append(left + (right - left) * piece / H_SPLIT)
                new_pts.append(MIN_MESH_POINTS)
        new_domains.append(
            Domain(
                dom.start_fraction,
                dom.end_fraction,
                tuple(new_fr),
                tuple(new_pts),
                dom.control_kinds,
            )
        )
    return Mesh(tuple(new_domains))
