"""Sparse primal-dual interior-point solver for equality-constrained NLPs.

Solves

    min f(x)   s.t.  c(x) = 0,  l <= x <= u

with exact first derivatives and an exact (or Gauss-Newton) Lagrangian
Hessian supplied by the caller.  The algorithm is a monotone barrier
method with an l1 exact-penalty line search, fraction-to-the-boundary
stepping, and a retry loop on the primal regularization in place of an
inertia test (the KKT systems are factored with SuperLU, which exposes no
inertia).  Variables with equal lower and upper bounds are eliminated
before iterating.

The implementation is deterministic: identical instances, starting points
and tolerances produce identical iterate sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

INF = 1e20


class NlpError(RuntimeError):
    pass


@dataclass
class NlpInstance:
    """Problem functions and bounds.  Sparsity patterns must not change."""

    n: int
    m: int
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    constraints: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], sps.csr_matrix]
    lagrangian_hessian: Callable[[np.ndarray, float, np.ndarray], sps.csr_matrix]
    lower: np.ndarray
    upper: np.ndarray
    name: str = ""

    def __post_init__(self) -> None:
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != (self.n,) or self.upper.shape != (self.n,):
            raise NlpError("bound arrays must have length n")
        if np.any(self.lower > self.upper):
            raise NlpError("lower bound exceeds upper bound")


@dataclass
class NlpResult:
    x: np.ndarray
    y: np.ndarray  # equality multipliers, Lagrangian L = f + y.c
    z_lower: np.ndarray
    z_upper: np.ndarray
    status: str  # "optimal" | "max_iterations" | "line_search_failure" | "linear_solver_failure"
    objective: float
    stationarity: float
    feasibility: float
    complementarity: float
    iterations: int
    log: list[str] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.status == "optimal"


@dataclass
class SolverOptions:
    tol: float = 1e-7
    max_iter: int = 500
    mu_init: float = 1e-1
    mu_min_factor: float = 0.1  # final barrier = tol * this
    kappa_eps: float = 10.0
    kappa_mu: float = 0.2
    theta_mu: float = 1.5
    tau_min: float = 0.99
    armijo: float = 1e-4
    # Hessian handling: "gauss_newton" uses only the objective curvature
    # (always PSD here), "exact" adds constraint curvature, "auto" starts
    # with Gauss-Newton and switches to exact once primal-feasible.
    hessian_mode: str = "exact"
    exact_switch_feas: float = 1e-4
    y_max: float = 1e6
    log_fn: Callable[[str], None] | None = None


def kkt_residuals(
    instance: NlpInstance,
    x: np.ndarray,
    y: np.ndarray,
    z_lower: np.ndarray | None = None,
    z_upper: np.ndarray | None = None,
) -> tuple[float, float, float]:
    """(stationarity, feasibility, complementarity) max-norm residuals."""
    zl = np.zeros(instance.n) if z_lower is None else z_lower
    zu = np.zeros(instance.n) if z_upper is None else z_upper
    g = instance.gradient(x)
    J = instance.jacobian(x)
    stat = float(np.max(np.abs(g + J.T @ y - zl + zu))) if instance.n else 0.0
    feas = float(np.max(np.abs(instance.constraints(x)))) if instance.m else 0.0
    comp = 0.0
    lo, hi = instance.lower, instance.upper
    has_lo = lo > -INF
    has_hi = hi < INF
    if np.any(has_lo):
        comp = max(comp, float(np.max(np.abs(zl[has_lo] * (x - lo)[has_lo]))))
    if np.any(has_hi):
        comp = max(comp, float(np.max(np.abs(zu[has_hi] * (hi - x)[has_hi]))))
    return stat, feas, comp


class _Reduced:
    """View of the instance with fixed variables (l == u) eliminated."""

    def __init__(self, inst: NlpInstance):
        self.inst = inst
        self.fixed = inst.lower == inst.upper
        self.free = ~self.fixed
        self.free_idx = np.nonzero(self.free)[0]
        self.x_full = np.where(self.fixed, inst.lower, 0.0)
        self.n = int(self.free.sum())
        self.m = inst.m
        self.lower = inst.lower[self.free]
        self.upper = inst.upper[self.free]

    def full(self, x_red: np.ndarray) -> np.ndarray:
        xf = self.x_full.copy()
        xf[self.free_idx] = x_red
        return xf

    def objective(self, x):
        return self.inst.objective(self.full(x))

    def gradient(self, x):
        return self.inst.gradient(self.full(x))[self.free_idx]

    def constraints(self, x):
        return self.inst.constraints(self.full(x))

    def jacobian(self, x):
        return self.inst.jacobian(self.full(x)).tocsc()[:, self.free_idx]

    def hessian(self, x, sigma, y):
        H = self.inst.lagrangian_hessian(self.full(x), sigma, y).tocsc()
        return H[:, self.free_idx][self.free_idx, :]


def _barrier_value(red, x, mu):
    val = red.objective(x)
    lo, hi = red.lower, red.upper
    has_lo = lo > -INF
    has_hi = hi < INF
    if np.any(has_lo):
        val -= mu * float(np.sum(np.log(x[has_lo] - lo[has_lo])))
    if np.any(has_hi):
        val -= mu * float(np.sum(np.log(hi[has_hi] - x[has_hi])))
    return val


def _barrier_grad(red, x, mu):
    g = red.gradient(x)
    lo, hi = red.lower, red.upper
    has_lo = lo > -INF
    has_hi = hi < INF
    g = g.copy()
    g[has_lo] -= mu / (x[has_lo] - lo[has_lo])
    g[has_hi] += mu / (hi[has_hi] - x[has_hi])
    return g


def _fraction_to_boundary(x, dx, lo, hi, tau):
    alpha = 1.0
    has_lo = lo > -INF
    has_hi = hi < INF
    neg = has_lo & (dx < 0)
    if np.any(neg):
        alpha = min(alpha, float(np.min(-tau * (x[neg] - lo[neg]) / dx[neg])))
    pos = has_hi & (dx > 0)
    if np.any(pos):
        alpha = min(alpha, float(np.min(tau * (hi[pos] - x[pos]) / dx[pos])))
    return alpha


def _dual_fraction(z, dz, tau):
    neg = dz < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-tau * z[neg] / dz[neg])))


def solve(
    instance: NlpInstance,
    initial_point: np.ndarray,
    tolerance: float | None = None,
    options: SolverOptions | None = None,
    initial_multipliers: np.ndarray | None = None,
) -> NlpResult:
    """Run the interior-point iteration from `initial_point`."""
    opts = options or SolverOptions()
    tol = opts.tol if tolerance is None else float(tolerance)
    red = _Reduced(instance)
    n, m = red.n, red.m
    lo, hi = red.lower, red.upper
    has_lo = lo > -INF
    has_hi = hi < INF
    log: list[str] = []

    def emit(line: str) -> None:
        log.append(line)
        if opts.log_fn is not None:
            opts.log_fn(line)

    # interior starting point
    x = np.asarray(initial_point, dtype=float)[red.free_idx].copy()
    span = np.minimum(hi - lo, 1.0)
    push = np.where(has_lo & has_hi, 1e-2 * span, 1e-2)
    x = np.where(has_lo, np.maximum(x, lo + push), x)
    x = np.where(has_hi, np.minimum(x, hi - push), x)

    mu = opts.mu_init
    zl = np.where(has_lo, mu / np.maximum(x - lo, 1e-8), 0.0)
    zu = np.where(has_hi, mu / np.maximum(hi - x, 1e-8), 0.0)
    if initial_multipliers is not None:
        y = np.asarray(initial_multipliers, dtype=float).copy()
    elif m:
        # least-squares multiplier estimate: argmin ||grad f + J^T y||
        g0 = red.gradient(x)
        J0 = red.jacobian(x).tocsc()
        K0 = sps.bmat(
            [[sps.identity(n, format="csc"), J0.T], [J0, -1e-10 * sps.identity(m, format="csc")]],
            format="csc",
        )
        try:
            y = spla.splu(K0, permc_spec="COLAMD").solve(np.concatenate([-g0, np.zeros(m)]))[n:]
            if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > 1e3:
                y = np.zeros(m)
        except RuntimeError:
            y = np.zeros(m)
    else:
        y = np.zeros(m)

    delta_last = 0.0
    status = "max_iterations"
    it = 0
    exact_sticky = False
    eye_n = sps.identity(n, format="csc")

    # filter line-search state (Waechter-Biegler); reset per barrier problem
    theta0 = float(np.abs(red.constraints(x)).sum()) if m else 0.0
    theta_min = 1e-4 * max(1.0, theta0)
    theta_cap = 1e4 * max(1.0, theta0)
    filt: list[tuple[float, float]] = []
    GAMMA_T, GAMMA_P, S_T, S_P, DELTA_SW = 1e-5, 1e-5, 1.1, 2.3, 1.0

    def filter_ok(th, ph):
        if th > theta_cap:
            return False
        return all(th <= (1 - GAMMA_T) * tj or ph <= pj - GAMMA_P * tj for tj, pj in filt)

    def scaled_stat(raw_stat):
        s_max = 100.0
        s_d = max(s_max, (np.abs(y).sum() + zl.sum() + zu.sum()) / max(1, m + n)) / s_max
        return raw_stat / s_d

    for it in range(1, opts.max_iter + 1):
        g = red.gradient(x)
        c = red.constraints(x)
        J = red.jacobian(x).tocsc()
        r_stat = g + J.T @ y - zl + zu
        stat0 = float(np.max(np.abs(r_stat))) if n else 0.0
        feas0 = float(np.max(np.abs(c))) if m else 0.0
        comp0 = 0.0
        comp_mu = 0.0
        if np.any(has_lo):
            prod = zl[has_lo] * (x - lo)[has_lo]
            comp0 = max(comp0, float(np.max(np.abs(prod))))
            comp_mu = max(comp_mu, float(np.max(np.abs(prod - mu))))
        if np.any(has_hi):
            prod = zu[has_hi] * (hi - x)[has_hi]
            comp0 = max(comp0, float(np.max(np.abs(prod))))
            comp_mu = max(comp_mu, float(np.max(np.abs(prod - mu))))

        err0 = max(scaled_stat(stat0), feas0, comp0)
        if err0 <= tol:
            status = "optimal"
            break

        err_mu = max(scaled_stat(stat0), feas0, comp_mu)
        if err_mu <= opts.kappa_eps * mu and mu > tol * opts.mu_min_factor:
            mu = max(tol * opts.mu_min_factor, min(opts.kappa_mu * mu, mu**opts.theta_mu))
            theta_now = float(np.abs(c).sum())
            theta_min = 1e-4 * max(1.0, theta_now)
            theta_cap = 1e4 * max(1.0, theta_now)
            filt = []
            continue

        tau = max(opts.tau_min, 1.0 - mu)
        sig_l = np.where(has_lo, zl / np.maximum(x - lo, 1e-300), 0.0)
        sig_u = np.where(has_hi, zu / np.maximum(hi - x, 1e-300), 0.0)
        if opts.hessian_mode == "exact":
            use_exact = True
        elif opts.hessian_mode == "gauss_newton":
            use_exact = False
        else:
            if not exact_sticky and feas0 <= opts.exact_switch_feas:
                exact_sticky = True
            use_exact = exact_sticky
        W = red.hessian(x, 1.0, y if use_exact else np.zeros(m)).tocsc()
        grad_phi = _barrier_grad(red, x, mu)
        rhs = np.concatenate([-(grad_phi + J.T @ y), -c])

        delta_c = 1e-8 * max(1.0, mu)
        # Gauss-Newton leaves unbounded states without diagonal curvature,
        # so keep a small Levenberg shift on in that phase
        delta = 0.0 if use_exact else max(1e-8, min(delta_last, 1e-4))
        step_ok = False
        dx = dy = lu = None
        fail_reason = ""
        c_l1 = float(np.abs(c).sum())
        for _attempt in range(14):
            Hbar = W + sps.diags(sig_l + sig_u) + (delta * eye_n if delta else 0.0)
            K = sps.bmat(
                [[Hbar, J.T], [J, -delta_c * sps.identity(m, format="csc")]], format="csc"
            )
            try:
                lu = spla.splu(K, permc_spec="COLAMD")
                sol = lu.solve(rhs)
            except RuntimeError:
                fail_reason = "factorization"
                delta = max(10.0 * delta, 1e-8)
                continue
            if not np.all(np.isfinite(sol)):
                fail_reason = "nonfinite"
                delta = max(10.0 * delta, 1e-8)
                continue
            dx = sol[:n]
            dy = sol[n:]
            # negative curvature along the step signals an indefinite Hbar;
            # retrying with a larger shift replaces an inertia test
            quad = float(dx @ (Hbar @ dx))
            if quad < -1e-12 * float(dx @ dx):
                fail_reason = "negative_curvature"
                delta = max(10.0 * delta, min(max(delta_last, 1e-6), 1e-2))
                continue
            step_ok = True
            break
        if not step_ok or dx is None:
            emit(f"{instance.name} it={it:4d} step failed: {fail_reason}")
            status = "linear_solver_failure"
            break
        delta_last = delta if delta else delta_last * 0.5

        dzl = np.where(has_lo, (mu - zl * dx) / np.maximum(x - lo, 1e-300) - zl, 0.0)
        dzu = np.where(has_hi, (mu + zu * dx) / np.maximum(hi - x, 1e-300) - zu, 0.0)

        alpha_max = _fraction_to_boundary(x, dx, lo, hi, tau)
        alpha_z = min(
            _dual_fraction(zl[has_lo], dzl[has_lo], tau) if np.any(has_lo) else 1.0,
            _dual_fraction(zu[has_hi], dzu[has_hi], tau) if np.any(has_hi) else 1.0,
        )

        # filter line search with second-order corrections
        theta_k = c_l1
        phi_k = _barrier_value(red, x, mu)
        dphi_k = float(grad_phi @ dx)

        def trial_accepted(th, ph, alpha_t):
            if not filter_ok(th, ph):
                return False, False
            ftype = (
                dphi_k < 0
                and alpha_t * (-dphi_k) ** S_P > DELTA_SW * theta_k**S_T
                and theta_k <= theta_min
            )
            if ftype:
                return ph <= phi_k + opts.armijo * alpha_t * dphi_k, True
            ok = th <= (1 - GAMMA_T) * theta_k or ph <= phi_k - GAMMA_P * theta_k
            return ok, False
        alpha = alpha_max
        accepted = False
        was_ftype = False
        for ls_iter in range(50):
            x_trial = x + alpha * dx
            c_trial = red.constraints(x_trial)
            th_t = float(np.abs(c_trial).sum())
            ph_t = _barrier_value(red, x_trial, mu)
            accepted, was_ftype = trial_accepted(th_t, ph_t, alpha)
            if accepted:
                break
            if ls_iter == 0 and m and th_t >= theta_k:
                # second-order corrections on the full step
                c_soc = c_trial.copy()
                dx_acc = alpha * dx
                th_prev = th_t
                for _p in range(4):
                    sol_soc = lu.solve(np.concatenate([np.zeros(n), -c_soc]))
                    dx_acc = dx_acc + sol_soc[:n]
                    a_soc = min(1.0, _fraction_to_boundary(x, dx_acc, lo, hi, tau))
                    x_soc = x + a_soc * dx_acc
                    c_s = red.constraints(x_soc)
                    th_s = float(np.abs(c_s).sum())
                    ph_s = _barrier_value(red, x_soc, mu)
                    ok_s, ft_s = trial_accepted(th_s, ph_s, alpha)
                    if ok_s:
                        x_trial, th_t, ph_t = x_soc, th_s, ph_s
                        accepted, was_ftype = True, ft_s
                        break
                    if th_s > 0.99 * th_prev:
                        break
                    th_prev = th_s
                    c_soc = c_s
                if accepted:
                    break
            alpha *= 0.5
            if alpha < 1e-13:
                break
        if not accepted:
            if exact_sticky and opts.hessian_mode == "auto":
                # constraint curvature produced an unusable direction; drop
                # back to Gauss-Newton and keep iterating
                exact_sticky = False
                continue
            status = "line_search_failure"
            break
        if not was_ftype:
            filt.append(((1 - GAMMA_T) * theta_k, phi_k - GAMMA_P * theta_k))

        x = x_trial
        if m:
            y = y + alpha * dy
            ynorm = float(np.max(np.abs(y)))
            if ynorm > opts.y_max:
                y *= opts.y_max / ynorm
        zl = zl + alpha_z * dzl
        zu = zu + alpha_z * dzu
        # keep duals within a large multiplicative corridor of mu/(x-l)
        kap = 1e10
        zl = np.where(
            has_lo,
            np.clip(zl, mu / (kap * np.maximum(x - lo, 1e-300)), kap * mu / np.maximum(x - lo, 1e-300)),
            0.0,
        )
        zu = np.where(
            has_hi,
            np.clip(zu, mu / (kap * np.maximum(hi - x, 1e-300)), kap * mu / np.maximum(hi - x, 1e-300)),
            0.0,
        )
        emit(
            f"{instance.name} it={it:4d}{'E' if use_exact else 'G'} mu={mu:8.1e}"
            f" f={red.objective(x):+.10e}"
            f" feas={feas0:8.1e} stat={stat0:8.1e} alpha={alpha:8.1e} delta={delta:8.1e}"
        )

    # recover bound multipliers of the eliminated fixed variables
    zl_full = _expand(red, zl)
    zu_full = _expand(red, zu)
    x_full = red.full(x)
    if np.any(red.fixed):
        r_full = instance.gradient(x_full) + instance.jacobian(x_full).T @ y
        net = r_full[red.fixed]
        zl_full[red.fixed] = np.maximum(net, 0.0)
        zu_full[red.fixed] = np.maximum(-net, 0.0)
    stat, feas, comp = kkt_residuals(instance, x_full, y, zl_full, zu_full)
    return NlpResult(
        x=x_full,
        y=y,
        z_lower=zl_full,
        z_upper=zu_full,
        status=status,
        objective=instance.objective(x_full),
        stationarity=stat,
        feasibility=feas,
        complementarity=comp,
        iterations=it,
        log=log,
    )


def _expand(red: _Reduced, z: np.ndarray) -> np.ndarray:
    out = np.zeros(red.inst.n)
    out[red.free_idx] = z
    return out


def check_derivatives(
    instance: NlpInstance, x: np.ndarray, rel_tol: float = 1e-5, step: float = 1e-6
) -> None:
    """Compare supplied gradient/Jacobian against central differences; raise on mismatch."""
    g = instance.gradient(x)
    J = instance.jacobian(x).toarray()
    for k in range(instance.n):
        e = np.zeros(instance.n)
        e[k] = step
        df = (instance.objective(x + e) - instance.objective(x - e)) / (2 * step)
        if abs(df - g[k]) > rel_tol * max(1.0, abs(df)):
            raise NlpError(f"gradient mismatch at x[{k}]: analytic {g[k]}, fd {df}")
        dc = (instance.constraints(x + e) - instance.constraints(x - e)) / (2 * step)
        err = np.max(np.abs(dc - J[:, k])) if instance.m else 0.0
        if err > rel_tol * max(1.0, float(np.max(np.abs(dc))) if instance.m else 0.0):
            raise NlpError(f"jacobian mismatch in column {k}: max err {err}")
