"""Independent verification: adaptive RK integration and indirect shooting.

The integrator is an embedded Dormand-Prince 5(4) pair with the standard
quartic dense output and bisection-refined event location.  The shooting
solver propagates the combined state/costate system arc by arc through a
candidate switching structure and Newton-iterates the boundary-value
residuals; it is always seeded from a direct solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import Maneuver, SpacecraftModel, TorqueMode, rates
from .pmp import (
    costate_rates,
    hamiltonian_array,
    singular_control_general,
    singular_control_nonspinning,
)
from .structure import ArcKind, ControlStructure
from .trajectory import Trajectory


class IntegrationError(RuntimeError):
    pass


class ShootingError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-11
    atol: float = 1e-12
    event_tol: float = 1e-12
    max_step: float = np.inf
    max_steps: int = 1_000_000

    def __post_init__(self) -> None:
        if not (0.0 < self.rtol <= 1e-3 and 0.0 < self.atol <= 1e-3):
            raise ValueError("integrator tolerances must lie in (0, 1e-3]")


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B5 - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
# Shampine's quartic interpolant for the DP pair (same as scipy's RK45.P)
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


@dataclass
class DenseSegment:
    t0: float
    h: float
    y0: np.ndarray
    Q: np.ndarray  # (n, 4)

    def __call__(self, t: float) -> np.ndarray:
        theta = (t - self.t0) / self.h
        powers = np.array([theta, theta**2, theta**3, theta**4])
        return self.y0 + self.h * (self.Q @ powers)


@dataclass
class OdeSolution:
    ts: np.ndarray
    ys: np.ndarray  # (n, len(ts))
    segments: list[DenseSegment]
    events: list[tuple[float, int]] = field(default_factory=list)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((self.ys.shape[0], len(tq)))
        starts = np.array([s.t0 for s in self.segments])
        for i, tv in enumerate(tq):
            k = int(np.clip(np.searchsorted(starts, tv, side="right") - 1, 0, len(self.segments) - 1))
            out[:, i] = self.segments[k](tv)
        return out


def rk45(
    f: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0: np.ndarray,
    config: IntegratorConfig | None = None,
    events: list[Callable[[float, np.ndarray], float]] | None = None,
    terminal: bool = False,
) -> OdeSolution:
    """Integrate forward over t_span with dense output and event records.

    Events are located to config.event_tol by bisection on the dense
    interpolant; with `terminal` the integration stops at the first event.
    """
    cfg = config or IntegratorConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0:
        raise IntegrationError("integration span must be forward and nonempty")
    y = np.asarray(y0, dtype=float).copy()
    n = y.size
    ts = [t0]
    ys = [y.copy()]
    segments: list[DenseSegment] = []
    found: list[tuple[float, int]] = []

    k1 = f(t0, y)
    scale0 = cfg.atol + cfg.rtol * np.abs(y)
    d0 = np.linalg.norm(y / scale0) / np.sqrt(n)
    d1 = np.linalg.norm(k1 / scale0) / np.sqrt(n)
    h = min(1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1, t1 - t0, cfg.max_step)

    t = t0
    ev_prev = [e(t, y) for e in events] if events else []
    for _ in range(cfg.max_steps):
        if t >= t1:
            break
        h = min(h, t1 - t, cfg.max_step)
        K = np.empty((7, n))
        K[0] = k1
        for i in range(1, 7):
            K[i] = f(t + _C[i] * h, y + h * (_A[i] @ K[:i]))
        y_new = y + h * (_B5 @ K)
        err_vec = h * (_E @ K)
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.linalg.norm(err_vec / scale) / np.sqrt(n)
        if err <= 1.0:
            seg = DenseSegment(t, h, y.copy(), K.T @ _P)
            segments.append(seg)
            t_next = t + h
            stop = None
            if events:
                ev_new = [e(t_next, y_new) for e in events]
                for ie, (a, b) in enumerate(zip(ev_prev, ev_new)):
                    if a == 0.0:
                        ev_prev[ie] = b
                        continue
                    if a * b < 0.0:
                        lo_t, hi_t = t, t_next
                        flo = a
                        for _b in range(200):
                            mid = 0.5 * (lo_t + hi_t)
                            fm = events[ie](mid, seg(mid))
                            if flo * fm <= 0:
                                hi_t = mid
                            else:
                                lo_t = mid
                                flo = fm
                            if hi_t - lo_t < cfg.event_tol:
                                break
                        t_ev = 0.5 * (lo_t + hi_t)
                        found.append((t_ev, ie))
                        if terminal:
                            stop = t_ev
                            break
                ev_prev = ev_new
            if stop is not None:
                ts.append(stop)
                ys.append(seg(stop))
                break
            t = t_next
            y = y_new
            k1 = K[6]  # FSAL
            ts.append(t)
            ys.append(y.copy())
            h *= min(5.0, max(0.2, 0.9 * err ** (-0.2) if err > 0 else 5.0))
        else:
            h *= max(0.2, 0.9 * err ** (-0.2))
            if h < 1e-15 * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t = {t}")
    else:
        raise IntegrationError("maximum step count exceeded")

    return OdeSolution(
        ts=np.asarray(ts), ys=np.asarray(ys).T, segments=segments, events=found
    )


def integrate(
    model: SpacecraftModel,
    y0: np.ndarray,
    control_policy: Callable[[float], np.ndarray],
    t_span: tuple[float, float],
    config: IntegratorConfig | None = None,
) -> Trajectory:
    """Propagate the plant under an arbitrary control policy."""

    def f(t, y):
        return rates(model.a, y, np.asarray(control_policy(t), dtype=float))

    sol = rk45(f, t_span, np.asarray(y0, dtype=float), config)
    u = np.column_stack([np.asarray(control_policy(tv), dtype=float) for tv in sol.ts])

    def dense(times):
        ys = sol(times)
        us = np.column_stack([np.asarray(control_policy(tv), dtype=float) for tv in np.atleast_1d(times)])
        return ys, us, None

    return Trajectory(t=sol.ts, state=sol.ys, control=u, dense=dense)


@dataclass(frozen=True)
class ShootingSpec:
    """Unknowns: initial costates, switch times, terminal time.

    In two-torque mode omega3 is uncontrolled and lam3 decouples, so both
    the lam3 unknown and the omega3 terminal residual are dropped to keep
    the system square.
    """

    maneuver: Maneuver
    structure: ControlStructure

    @property
    def reduced(self) -> bool:
        return self.maneuver.model.torque_mode is TorqueMode.TWO_TORQUE

    @property
    def costate_indices(self) -> list[int]:
        return [0, 1, 3, 4] if self.reduced else [0, 1, 2, 3, 4]

    @property
    def n_unknowns(self) -> int:
        return len(self.costate_indices) + self.structure.n_switches + 1


def _arc_controls(
    spec: ShootingSpec, kinds: tuple[str, ...]
) -> tuple[np.ndarray, list[int]]:
    """Bang/zero control values for one domain plus its singular indices."""
    model = spec.maneuver.model
    u = np.zeros(3)
    singular = []
    for j, kind in enumerate(kinds):
        lo, hi = model.control_bounds(j)
        if kind == "min":
            u[j] = lo
        elif kind == "max":
            u[j] = hi
        elif kind == "zero":
            u[j] = 0.0
        elif kind == "singular":
            singular.append(j)
        else:
            raise ShootingError(f"shooting needs a fully classified structure, got {kind!r}")
    return u, singular


def _shoot_once(
    spec: ShootingSpec, v: np.ndarray, config: IntegratorConfig
) -> tuple[np.ndarray, list[OdeSolution], list[float]]:
    model = spec.maneuver.model
    bc = spec.maneuver.bc
    a = model.a
    nli = spec.costate_indices
    nlam = len(nli)
    k = spec.structure.n_switches
    lam0 = np.zeros(5)
    lam0[nli] = v[:nlam]
    times = [0.0, *v[nlam : nlam + k], v[nlam + k]]
    if any(t1 - t0 <= 0 for t0, t1 in zip(times[:-1], times[1:])):
        raise ShootingError(f"switch times out of order: {times}")

    kinds_per_domain = spec.structure.domain_kinds()
    z = np.concatenate([bc.initial.to_array(), lam0])
    sols: list[OdeSolution] = []
    u_last = np.zeros(3)
    for d, kinds in enumerate(kinds_per_domain):
        u_bang, singular = _arc_controls(spec, kinds)

        def f(t, zz, u_bang=u_bang, singular=tuple(singular)):
            y, lam = zz[:5], zz[5:]
            u = u_bang.copy()
            for j in singular:
                if abs(y[2]) < 1e-9:
                    u[j] = singular_control_nonspinning()
                else:
                    lam_dot = costate_rates(a, y, lam)
                    u[j] = singular_control_general(model, y, lam, lam_dot, j + 1, u)
            return np.concatenate([rates(a, y, u), costate_rates(a, y, lam)])

        sol = rk45(f, (times[d], times[d + 1]), z, config)
        sols.append(sol)
        z = sol.ys[:, -1]
        u_last = u_bang

    yf, lamf = z[:5], z[5:]
    res = []
    for i, target in enumerate(bc.terminal):
        if spec.reduced and i == 2:
            continue
        res.append(yf[i] - target if target is not None else lamf[i])
    owners = spec.structure.breakpoint_controls()
    for s, j in enumerate(owners):
        lam_s = sols[s].ys[5:, -1]
        res.append(lam_s[j - 1])
    # terminal control for H: singular components from the law at the end state
    u_f = u_last.copy()
    _, singular = _arc_controls(spec, kinds_per_domain[-1])
    for j in singular:
        if abs(yf[2]) < 1e-9:
            u_f[j] = singular_control_nonspinning()
        else:
            u_f[j] = singular_control_general(
                model, yf, lamf, costate_rates(a, yf, lamf), j + 1, u_f
            )
    res.append(float(hamiltonian_array(a, yf, u_f, lamf)) + 1.0)
    return np.asarray(res), sols, times


def shoot(
    spec: ShootingSpec,
    initial_guess: np.ndarray,
    config: IntegratorConfig | None = None,
    tol: float = 1e-10,
    max_iter: int = 40,
) -> tuple[Trajectory, float]:
    """Newton iteration on the shooting residuals with FD sensitivities.

    `initial_guess` packs [lam0 (per costate_indices), switch times, t_f],
    normally harvested from a direct solution.  Returns the converged
    state/costate trajectory and the final residual norm.
    """
    cfg = config or IntegratorConfig()
    v = np.asarray(initial_guess, dtype=float).copy()
    if v.size != spec.n_unknowns:
        raise ShootingError(f"expected {spec.n_unknowns} unknowns, got {v.size}")

    r, sols, times = _shoot_once(spec, v, cfg)
    best = (np.linalg.norm(r), v.copy())
    for _ in range(max_iter):
        rnorm = np.linalg.norm(r, ord=np.inf)
        if rnorm <= tol:
            break
        J = np.empty((r.size, v.size))
        for i in range(v.size):
            dv = 1e-7 * max(1.0, abs(v[i]))
            vp = v.copy()
            vp[i] += dv
            rp, _, _ = _shoot_once(spec, vp, cfg)
            J[:, i] = (rp - r) / dv
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > 1e14:
            raise ShootingError(
                f"shooting Jacobian is rank deficient (cond {cond:.2e}); "
                "the candidate structure may not match the solution"
            )
        step = np.linalg.solve(J, -r)
        alpha = 1.0
        base = np.linalg.norm(r)
        for _ls in range(30):
            try:
                r_try, sols_try, times_try = _shoot_once(spec, v + alpha * step, cfg)
            except (ShootingError, IntegrationError):
                alpha *= 0.5
                continue
            if np.linalg.norm(r_try) < (1.0 - 1e-4 * alpha) * base:
                break
            alpha *= 0.5
        else:
            raise ShootingError(f"shooting line search stalled at residual {base:.3e}")
        v = v + alpha * step
        r, sols, times = r_try, sols_try, times_try
        if np.linalg.norm(r) < best[0]:
            best = (np.linalg.norm(r), v.copy())
    else:
        raise ShootingError(
            f"Newton did not reach tolerance {tol}; best residual {best[0]:.3e}"
        )

    # assemble the combined trajectory on the concatenated arc samples
    t_all = []
    z_all = []
    for d, sol in enumerate(sols):
        sel = slice(0, -1) if d < len(sols) - 1 else slice(None)
        t_all.append(sol.ts[sel])
        z_all.append(sol.ys[:, sel])
    t_all = np.concatenate(t_all)
    z_all = np.column_stack(z_all)

    model = spec.maneuver.model
    kinds_per_domain = spec.structure.domain_kinds()
    bounds = np.asarray(times)

    def control_at(t: float, y: np.ndarray, lam: np.ndarray) -> np.ndarray:
        d = int(np.clip(np.searchsorted(bounds, t, side="right") - 1, 0, len(sols) - 1))
        u, singular = _arc_controls(spec, kinds_per_domain[d])
        for j in singular:
            if abs(y[2]) < 1e-9:
                u[j] = singular_control_nonspinning()
            else:
                u[j] = singular_control_general(
                    model, y, lam, costate_rates(model.a, y, lam), j + 1, u
                )
        return u

    u_all = np.column_stack(
        [control_at(tv, z_all[:5, i], z_all[5:, i]) for i, tv in enumerate(t_all)]
    )

    def dense(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        ys = np.empty((5, len(ts)))
        ls = np.empty((5, len(ts)))
        us = np.empty((3, len(ts)))
        for i, tv in enumerate(ts):
            d = int(np.clip(np.searchsorted(bounds, tv, side="right") - 1, 0, len(sols) - 1))
            z = sols[d](np.array([np.clip(tv, bounds[d], bounds[d + 1])]))[:, 0]
            ys[:, i] = z[:5]
            ls[:, i] = z[5:]
            us[:, i] = control_at(tv, z[:5], z[5:])
        return ys, us, ls

    traj = Trajectory(
        t=t_all,
        state=z_all[:5],
        control=u_all,
        costate=z_all[5:],
        switch_times=list(times[1:-1]),
        switch_controls=spec.structure.breakpoint_controls(),
        dense=dense,
    )
    return traj, float(np.linalg.norm(r, ord=np.inf))


def seed_from_direct(spec: ShootingSpec, trajectory: Trajectory) -> np.ndarray:
    """Shooting unknowns harvested from a direct solution's trajectory."""
    if trajectory.costate is None:
        raise ShootingError("direct trajectory carries no costates")
    lam0 = trajectory.costate[:, 0]
    return np.concatenate(
        [lam0[spec.costate_indices], trajectory.switch_times, [trajectory.t_f]]
    )


@dataclass(frozen=True)
class DiscrepancyReport:
    max_state_error: float
    t_f_delta: float
    switch_deltas: list[float]

    def to_dict(self) -> dict:
        return {
            "max_state_error": self.max_state_error,
            "t_f_delta": self.t_f_delta,
            "switch_deltas": list(self.switch_deltas),
        }


def cross_validate(
    direct: Trajectory, indirect: Trajectory, samples: int = 2000
) -> DiscrepancyReport:
    """Max state discrepancy on a common grid plus switch/terminal deltas."""
    t_common = np.linspace(0.0, min(direct.t_f, indirect.t_f), samples)
    yd, _, _ = direct.at(t_common)
    yi, _, _ = indirect.at(t_common)
    deltas = [
        abs(a - b) for a, b in zip(direct.switch_times, indirect.switch_times)
    ]
    return DiscrepancyReport(
        max_state_error=float(np.max(np.abs(yd - yi))),
        t_f_delta=abs(direct.t_f - indirect.t_f),
        switch_deltas=deltas,
    )
