"""Multi-domain LGR transcription of the minimum-time reorientation OCP.

Decision variables: states at every collocation node plus the terminal
node, controls at every collocation point, and one duration per domain.
Durations replace explicit switch-time variables, so switch ordering and
minimum arc width become simple lower bounds; t_f is the duration sum and
switch times are cumulative sums.  Defect constraints collocate the
dynamics at every LGR point; state continuity across interval and domain
junctions holds by construction because junction nodes are shared.

In structured problems (see the structure module) every domain carries a
per-control arc kind: saturated controls are pinned through their bounds,
singular controls stay free, receive the regularization functional, and
are kept continuous across interval junctions inside their domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sps

from . import lgr
from .dynamics import (
    N_CONTROLS,
    N_STATES,
    Maneuver,
    TorqueMode,
    rate_jacobians,
    rate_hessian_weighted,
    rates,
)
from . import nlp
from .nlp import INF, NlpInstance, NlpResult
from .pmp import hamiltonian_array
from .trajectory import Trajectory

MIN_MESH_POINTS = 3
MAX_MESH_POINTS = 12

# arc kinds a control can have within one domain
FREE, AT_MIN, AT_MAX, SINGULAR, ZERO = "free", "min", "max", "singular", "zero"


class TranscriptionError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """One mesh domain: horizon fractions, interval fractions, LGR counts."""

    start_fraction: float
    end_fraction: float
    intervals: tuple[float, ...]  # len K+1, 0.0 .. 1.0 within the domain
    points: tuple[int, ...]  # len K
    control_kinds: tuple[str, ...] = (FREE, FREE, FREE)

    def __post_init__(self) -> None:
        if not 0.0 <= self.start_fraction < self.end_fraction <= 1.0 + 1e-12:
            raise TranscriptionError("domain fractions must be increasing within [0, 1]")
        fr = np.asarray(self.intervals)
        if fr[0] != 0.0 or abs(fr[-1] - 1.0) > 1e-12 or np.any(np.diff(fr) <= 0):
            raise TranscriptionError("interval fractions must increase from 0 to 1")
        if len(self.points) != len(self.intervals) - 1:
            raise TranscriptionError("need one point count per interval")
        for n in self.points:
            if not MIN_MESH_POINTS <= n <= MAX_MESH_POINTS:
                raise TranscriptionError(
                    f"points per interval must lie in [{MIN_MESH_POINTS}, {MAX_MESH_POINTS}]"
                )
        if any(k not in (FREE, AT_MIN, AT_MAX, SINGULAR, ZERO) for k in self.control_kinds):
            raise TranscriptionError(f"bad control kinds {self.control_kinds}")

    @property
    def n_intervals(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Mesh:
    domains: tuple[Domain, ...]

    def __post_init__(self) -> None:
        if not self.domains:
            raise TranscriptionError("mesh needs at least one domain")
        pos = 0.0
        for d in self.domains:
            if abs(d.start_fraction - pos) > 1e-9:
                raise TranscriptionError("domains must tile [0, 1] without gaps")
            pos = d.end_fraction
        if abs(pos - 1.0) > 1e-9:
            raise TranscriptionError("domains must cover the full horizon")

    @property
    def n_collocation(self) -> int:
        return sum(sum(d.points) for d in self.domains)

    @property
    def n_intervals(self) -> int:
        return sum(d.n_intervals for d in self.domains)


def uniform_mesh(n_intervals: int = 20, points: int = 3) -> Mesh:
    """Single-domain mesh with uniform intervals (the initial-solve default)."""
    fr = tuple(np.linspace(0.0, 1.0, n_intervals + 1))
    dom = Domain(0.0, 1.0, fr, (points,) * n_intervals)
    return Mesh((dom,))


@dataclass(frozen=True)
class Regularization:
    """Penalty added on singular controls: epsilon * integral term per target.

    `functional` selects the policy: "control_energy" penalizes
    int u^2 dt (the default); "derivative_energy" penalizes int (du/dt)^2 dt
    and additionally keeps the control continuous across interval junctions
    inside its domain.
    """

    epsilon: float
    targets: tuple[tuple[int, int], ...]  # (domain index, control index)
    functional: str = "control_energy"

    def __post_init__(self) -> None:
        if self.functional not in ("derivative_energy", "control_energy"):
            raise TranscriptionError(f"unknown regularization functional {self.functional}")


@dataclass
class DiscreteSolution:
    """Decoded NLP solution on the collocation grid."""

    x: np.ndarray
    multipliers: np.ndarray  # defect multipliers, shape (m_defect,)
    objective: float
    status: str
    kkt: tuple[float, float, float]
    iterations: int
    states: np.ndarray  # (5, n_nodes)
    controls: np.ndarray  # (3, n_colloc)
    durations: np.ndarray  # (n_domains,)
    nlp_result: NlpResult = field(repr=False, default=None)

    @property
    def t_f(self) -> float:
        return float(self.durations.sum())

    @property
    def switch_times(self) -> list[float]:
        return list(np.cumsum(self.durations)[:-1])

    @property
    def success(self) -> bool:
        return self.status == "optimal"


class CollocationProblem:
    """Index layout plus NLP evaluators for one transcription."""

    def __init__(
        self,
        maneuver: Maneuver,
        mesh: Mesh,
        regularization: Regularization | None = None,
        t_guess: float = 5.0,
        min_duration: float | None = None,
    ):
        self.maneuver = maneuver
        self.mesh = mesh
        self.regularization = regularization
        self.t_guess = float(t_guess)
        # minimum arc width keeps switch times strictly ordered
        self.min_duration = (
            1e-3 * self.t_guess if min_duration is None else float(min_duration)
        )
        self._build_layout()
        self._build_static()

    # ---------- layout ----------

    def _build_layout(self) -> None:
        mesh = self.mesh
        self.n_dom = len(mesh.domains)
        self.n_colloc = mesh.n_collocation
        self.n_nodes = self.n_colloc + 1
        self.iu0 = N_STATES * self.n_nodes
        self.it0 = self.iu0 + N_CONTROLS * self.n_colloc
        self.n_var = self.it0 + self.n_dom

        # per-interval records
        recs = []
        c0 = 0
        for di, dom in enumerate(mesh.domains):
            fr = np.asarray(dom.intervals)
            for k, n in enumerate(dom.points):
                recs.append((di, k, n, float(fr[k + 1] - fr[k]), c0))
                c0 += n
        self._intervals = recs

        # group intervals by LGR count for vectorized evaluation
        self._groups: dict[int, dict[str, np.ndarray]] = {}
        for n in sorted({r[2] for r in recs}):
            sel = [r for r in recs if r[2] == n]
            dom_idx = np.array([r[0] for r in sel])
            h = np.array([r[3] for r in sel])
            start = np.array([r[4] for r in sel])
            sup = start[:, None] + np.arange(n + 1)[None, :]
            self._groups[n] = dict(dom=dom_idx, h=h, c0=start, sup=sup)

        self.m_defect = N_STATES * self.n_colloc

        # control-continuity linkage rows for singular domains (the
        # derivative-energy policy is otherwise blind to junction jumps)
        linkage = []
        if self.regularization is not None and self.regularization.functional == "derivative_energy":
            sing = set(self.regularization.targets)
        else:
            sing = set()
        self._singular_targets = sing
        for di, dom in enumerate(mesh.domains):
            ctrls = [j for (dd, j) in sing if dd == di]
            if not ctrls:
                continue
            local = [r for r in self._intervals if r[0] == di]
            for left, right in zip(local[:-1], local[1:]):
                n = left[2]
                tau, _ = lgr.lgr_points_weights(n)
                ext = lgr.lagrange_values(tau, np.array([1.0]))[0]
                for j in ctrls:
                    linkage.append((left[4], n, right[4], j, ext))
        self._linkage = linkage
        self.m = self.m_defect + len(linkage)

        times = np.zeros(self.n_colloc)
        # collocation times as (domain, fraction-within-domain) pairs
        self._col_dom = np.zeros(self.n_colloc, dtype=int)
        self._col_frac = np.zeros(self.n_colloc)
        for di, k, n, h, c0 in self._intervals:
            tau, _ = lgr.lgr_points_weights(n)
            fr0 = self.mesh.domains[di].intervals[k]
            self._col_dom[c0 : c0 + n] = di
            self._col_frac[c0 : c0 + n] = fr0 + (tau + 1.0) / 2.0 * h
        del times

        w = np.zeros(self.n_colloc)
        for di, k, n, h, c0 in self._intervals:
            _, wi = lgr.lgr_points_weights(n)
            w[c0 : c0 + n] = wi
        self._col_weights = w

    def iy(self, node: int, s: int) -> int:
        return N_STATES * node + s

    def iu(self, col: int, j: int) -> int:
        return self.iu0 + N_CONTROLS * col + j

    def it(self, d: int) -> int:
        return self.it0 + d

    # ---------- static assembly data ----------

    def _build_static(self) -> None:
        rows_d, cols_d, vals_d = [], [], []
        rows_fy, cols_fy = [], []
        rows_fu, cols_fu = [], []
        rows_t, cols_t = [], []
        for n, g in self._groups.items():
            D = lgr.defect_matrix(n)
            B = len(g["h"])
            ci = g["c0"][:, None] + np.arange(n)[None, :]  # (B, n) collocation indices
            # derivative part: row 5*ci+s, col 5*sup+s, val D[i, j]
            r = (N_STATES * ci[:, :, None, None] + np.arange(N_STATES)[None, None, None, :])
            r = np.broadcast_to(r, (B, n, n + 1, N_STATES))
            cgrid = (
                N_STATES * g["sup"][:, None, :, None]
                + np.arange(N_STATES)[None, None, None, :]
            )
            cgrid = np.broadcast_to(cgrid, (B, n, n + 1, N_STATES))
            v = np.broadcast_to(D[None, :, :, None], (B, n, n + 1, N_STATES))
            rows_d.append(r.ravel())
            cols_d.append(cgrid.ravel())
            vals_d.append(v.ravel())

            # df/dy part: row 5*ci+s, col 5*ci+s'
            r = N_STATES * ci[:, :, None, None] + np.arange(N_STATES)[None, None, :, None]
            r = np.broadcast_to(r, (B, n, N_STATES, N_STATES))
            cg = N_STATES * ci[:, :, None, None] + np.arange(N_STATES)[None, None, None, :]
            cg = np.broadcast_to(cg, (B, n, N_STATES, N_STATES))
            rows_fy.append(r.ravel())
            cols_fy.append(cg.ravel())

            # df/du part: rows s = j (identity coupling), cols control vars
            r = N_STATES * ci[:, :, None] + np.arange(N_CONTROLS)[None, None, :]
            cg = self.iu0 + N_CONTROLS * ci[:, :, None] + np.arange(N_CONTROLS)[None, None, :]
            rows_fu.append(r.ravel())
            cols_fu.append(cg.ravel())

            # duration column
            r = N_STATES * ci[:, :, None] + np.arange(N_STATES)[None, None, :]
            cg = np.broadcast_to(
                (self.it0 + g["dom"])[:, None, None], (B, n, N_STATES)
            )
            rows_t.append(r.ravel())
            cols_t.append(cg.ravel())

        rows_l, cols_l, vals_l = [], [], []
        for li, (c0l, n, c0r, j, ext) in enumerate(self._linkage):
            row = self.m_defect + li
            for i in range(n):
                rows_l.append(row)
                cols_l.append(self.iu(c0l + i, j))
                vals_l.append(ext[i])
            rows_l.append(row)
            cols_l.append(self.iu(c0r, j))
            vals_l.append(-1.0)

        self._jrows = np.concatenate(
            rows_d + rows_fy + rows_fu + rows_t + [np.array(rows_l, dtype=int)]
        )
        self._jcols = np.concatenate(
            cols_d + cols_fy + cols_fu + cols_t + [np.array(cols_l, dtype=int)]
        )
        self._jstatic_d = np.concatenate(vals_d)
        self._jstatic_l = np.array(vals_l)
        self._n_fy = sum(a.size for a in rows_fy)
        self._n_fu = sum(a.size for a in rows_fu)
        self._n_t = sum(a.size for a in rows_t)

        self._cache_key: bytes | None = None
        self._cache: dict | None = None

    # ---------- bounds and initial guess ----------

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.n_var, -INF)
        hi = np.full(self.n_var, INF)
        bc = self.maneuver.bc
        model = self.maneuver.model
        y0 = bc.initial.to_array()
        for s in range(N_STATES):
            lo[self.iy(0, s)] = hi[self.iy(0, s)] = y0[s]
        for s, v in enumerate(bc.terminal):
            if v is not None:
                lo[self.iy(self.n_nodes - 1, s)] = hi[self.iy(self.n_nodes - 1, s)] = v
        for di, k, n, h, c0 in self._intervals:
            kinds = self.mesh.domains[di].control_kinds
            for j in range(N_CONTROLS):
                blo, bhi = model.control_bounds(j)
                kind = kinds[j]
                if kind == AT_MIN:
                    blo, bhi = blo, blo
                elif kind == AT_MAX:
                    blo, bhi = bhi, bhi
                elif kind == ZERO:
                    blo, bhi = 0.0, 0.0
                for i in range(n):
                    lo[self.iu(c0 + i, j)] = blo
                    hi[self.iu(c0 + i, j)] = bhi
        for d in range(self.n_dom):
            lo[self.it(d)] = self.min_duration
        return lo, hi

    def initial_guess(self) -> np.ndarray:
        """Straight line between two-point boundary data, constant otherwise."""
        bc = self.maneuver.bc
        x = np.zeros(self.n_var)
        y0 = bc.initial.to_array()
        node_frac = np.append(
            self._global_fraction(self._col_dom, self._col_frac), 1.0
        )
        for s in range(N_STATES):
            yf = bc.terminal[s]
            if yf is None:
                vals = np.full(self.n_nodes, y0[s])
            else:
                vals = y0[s] + (yf - y0[s]) * node_frac
            x[s : self.iu0 : N_STATES] = vals
        for d, dom in enumerate(self.mesh.domains):
            x[self.it(d)] = (dom.end_fraction - dom.start_fraction) * self.t_guess
        lo, hi = self.bounds()
        return np.clip(x, lo, hi)

    def _global_fraction(self, dom_idx: np.ndarray, frac: np.ndarray) -> np.ndarray:
        starts = np.array([d.start_fraction for d in self.mesh.domains])
        spans = np.array([d.end_fraction - d.start_fraction for d in self.mesh.domains])
        return starts[dom_idx] + spans[dom_idx] * frac

    # ---------- decoding ----------

    def decode(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        Y = x[: self.iu0].reshape(self.n_nodes, N_STATES).T
        U = x[self.iu0 : self.it0].reshape(self.n_colloc, N_CONTROLS).T
        T = x[self.it0 :]
        return Y, U, T

    def collocation_times(self, durations: np.ndarray) -> np.ndarray:
        starts = np.concatenate([[0.0], np.cumsum(durations)[:-1]])
        return starts[self._col_dom] + durations[self._col_dom] * self._col_frac

    # ---------- evaluation ----------

    def _point_data(self, x: np.ndarray) -> dict:
        key = x.tobytes()
        if self._cache_key == key:
            return self._cache
        Y, U, T = self.decode(x)
        Yc = Y[:, : self.n_colloc]
        f = rates(self.maneuver.model.a, Yc, U)
        data = dict(Y=Y, U=U, T=T, Yc=Yc, f=f, jac=None)
        self._cache_key = key
        self._cache = data
        return data

    def _jac_data(self, x: np.ndarray) -> dict:
        data = self._point_data(x)
        if data["jac"] is None:
            fy, fu = rate_jacobians(self.maneuver.model.a, data["Yc"])
            data["jac"] = (fy, fu)
        return data

    def constraints(self, x: np.ndarray) -> np.ndarray:
        data = self._point_data(x)
        Y, T, f = data["Y"], data["T"], data["f"]
        c = np.zeros(self.m)
        for n, g in self._groups.items():
            D = lgr.defect_matrix(n)
            Ysup = Y[:, g["sup"]]  # (5, B, n+1)
            dY = np.einsum("ij,sbj->sbi", D, Ysup)
            scale = 0.5 * g["h"] * T[g["dom"]]  # (B,)
            ci = g["c0"][:, None] + np.arange(n)[None, :]
            defect = dY - scale[None, :, None] * f[:, ci]
            rows = N_STATES * ci[None, :, :] + np.arange(N_STATES)[:, None, None]
            c[rows.ravel()] = defect.ravel()
        if self._linkage:
            U = data["U"]
            for li, (c0l, n, c0r, j, ext) in enumerate(self._linkage):
                c[self.m_defect + li] = ext @ U[j, c0l : c0l + n] - U[j, c0r]
        return c

    def jacobian(self, x: np.ndarray) -> sps.csr_matrix:
        data = self._jac_data(x)
        T, f = data["T"], data["f"]
        fy, fu = data["jac"]
        vals_fy = np.empty(self._n_fy)
        vals_fu = np.empty(self._n_fu)
        vals_t = np.empty(self._n_t)
        o_fy = o_fu = o_t = 0
        for n, g in self._groups.items():
            B = len(g["h"])
            ci = g["c0"][:, None] + np.arange(n)[None, :]
            scale = 0.5 * g["h"] * T[g["dom"]]
            block = -scale[:, None, None, None] * np.moveaxis(fy[:, :, ci], (0, 1), (2, 3))
            vals_fy[o_fy : o_fy + block.size] = block.ravel()
            o_fy += block.size
            ub = np.broadcast_to(-scale[:, None, None], (B, n, N_CONTROLS))
            vals_fu[o_fu : o_fu + ub.size] = ub.ravel()
            o_fu += ub.size
            tb = -0.5 * g["h"][:, None, None] * np.moveaxis(f[:, ci], 0, 2)
            vals_t[o_t : o_t + tb.size] = tb.ravel()
            o_t += tb.size
        vals = np.concatenate(
            [self._jstatic_d, vals_fy, vals_fu, vals_t, self._jstatic_l]
        )
        J = sps.coo_matrix(
            (vals, (self._jrows, self._jcols)), shape=(self.m, self.n_var)
        )
        return J.tocsr()

    def _reg_terms(self, x: np.ndarray):
        """Yield (interval record, control j, quadrature data) per singular target."""
        if self.regularization is None:
            return
        for rec in self._intervals:
            di, k, n, h, c0 = rec
            for dd, j in self.regularization.targets:
                if dd == di:
                    yield rec, j

    def objective(self, x: np.ndarray) -> float:
        data = self._point_data(x)
        T, U = data["T"], data["U"]
        val = float(T.sum())
        reg = self.regularization
        if reg is not None:
            for (di, k, n, h, c0), j in self._reg_terms(x):
                _, w = lgr.lgr_points_weights(n)
                u = U[j, c0 : c0 + n]
                dt = h * T[di]
                if reg.functional == "derivative_energy":
                    r = lgr.control_derivative_matrix(n) @ u
                    val += reg.epsilon * 2.0 / dt * float(w @ r**2)
                else:
                    val += reg.epsilon * 0.5 * dt * float(w @ u**2)
        return val

    def regularization_value(self, x: np.ndarray) -> float:
        """delta: the value of the regularization term at x (0 if none)."""
        if self.regularization is None:
            return 0.0
        return self.objective(x) - float(self.decode(x)[2].sum())

    def gradient(self, x: np.ndarray) -> np.ndarray:
        data = self._point_data(x)
        T, U = data["T"], data["U"]
        grad = np.zeros(self.n_var)
        grad[self.it0 :] = 1.0
        reg = self.regularization
        if reg is not None:
            for (di, k, n, h, c0), j in self._reg_terms(x):
                _, w = lgr.lgr_points_weights(n)
                u = U[j, c0 : c0 + n]
                dt = h * T[di]
                ui = [self.iu(c0 + i, j) for i in range(n)]
                if reg.functional == "derivative_energy":
                    Dc = lgr.control_derivative_matrix(n)
                    r = Dc @ u
                    grad[ui] += reg.epsilon * 4.0 / dt * (Dc.T @ (w * r))
                    grad[self.it(di)] += -reg.epsilon * 2.0 * h / dt**2 * float(w @ r**2)
                else:
                    grad[ui] += reg.epsilon * dt * w * u
                    grad[self.it(di)] += reg.epsilon * 0.5 * h * float(w @ u**2)
        return grad

    def lagrangian_hessian(self, x: np.ndarray, sigma: float, y: np.ndarray) -> sps.csr_matrix:
        data = self._jac_data(x)
        T, U = data["T"], data["U"]
        fy, _ = data["jac"]
        a = self.maneuver.model.a
        rows, cols, vals = [], [], []

        yk = y[: self.m_defect].reshape(self.n_colloc, N_STATES).T  # (5, n_colloc)
        for n, g in self._groups.items():
            B = len(g["h"])
            ci = g["c0"][:, None] + np.arange(n)[None, :]
            flat = ci.ravel()
            scale = (0.5 * g["h"] * T[g["dom"]])[:, None]  # (B, 1) -> broadcast per point
            mu = -np.repeat(scale, n, axis=1).ravel()[None, :] * yk[:, flat]
            Hp = rate_hessian_weighted(a, data["Yc"][:, flat], mu)  # (5, 5, Bn)
            r = (N_STATES * flat[:, None, None] + np.arange(N_STATES)[None, :, None])
            cgrid = (N_STATES * flat[:, None, None] + np.arange(N_STATES)[None, None, :])
            r, cgrid = np.broadcast_to(r, (flat.size, 5, 5)), np.broadcast_to(
                cgrid, (flat.size, 5, 5)
            )
            rows.append(r.ravel())
            cols.append(cgrid.ravel())
            vals.append(np.moveaxis(Hp, 2, 0).ravel())

            # cross terms wrt (y, T_d) and (u, T_d): d2c/dy dT = -(h/2) df/dy
            cross_y = np.einsum("sp,srp->rp", yk[:, flat], fy[:, :, flat])
            hrep = np.repeat(g["h"], n)
            cy = -0.5 * hrep[None, :] * cross_y  # (5, Bn)
            ycols = N_STATES * flat[:, None] + np.arange(N_STATES)[None, :]
            tcols = np.repeat(self.it0 + g["dom"], n)[:, None]
            tcols5 = np.broadcast_to(tcols, (flat.size, N_STATES))
            rows.append(ycols.ravel())
            cols.append(tcols5.ravel())
            vals.append(cy.T.ravel())
            rows.append(tcols5.ravel())
            cols.append(ycols.ravel())
            vals.append(cy.T.ravel())

            cu = -0.5 * hrep[None, :] * yk[:N_CONTROLS, flat]  # (3, Bn)
            ucols = self.iu0 + N_CONTROLS * flat[:, None] + np.arange(N_CONTROLS)[None, :]
            tcols3 = np.broadcast_to(tcols, (flat.size, N_CONTROLS))
            rows.append(ucols.ravel())
            cols.append(tcols3.ravel())
            vals.append(cu.T.ravel())
            rows.append(tcols3.ravel())
            cols.append(ucols.ravel())
            vals.append(cu.T.ravel())

        reg = self.regularization
        if reg is not None and sigma != 0.0:
            for (di, k, n, h, c0), j in self._reg_terms(x):
                _, w = lgr.lgr_points_weights(n)
                u = U[j, c0 : c0 + n]
                dt = h * T[di]
                ui = np.array([self.iu(c0 + i, j) for i in range(n)])
                ti = self.it(di)
                eps = sigma * reg.epsilon
                if reg.functional == "derivative_energy":
                    Dc = lgr.control_derivative_matrix(n)
                    r = Dc @ u
                    Huu = 4.0 / dt * (Dc.T * w) @ Dc
                    gu_t = -4.0 * h / dt**2 * (Dc.T @ (w * r))
                    htt = 4.0 * h**2 / dt**3 * float(w @ r**2)
                else:
                    Huu = dt * np.diag(w)
                    gu_t = h * w * u
                    htt = 0.0
                rows.append(np.repeat(ui, n))
                cols.append(np.tile(ui, n))
                vals.append(eps * Huu.ravel())
                rows.append(ui)
                cols.append(np.full(n, ti))
                vals.append(eps * gu_t)
                rows.append(np.full(n, ti))
                cols.append(ui)
                vals.append(eps * gu_t)
                rows.append(np.array([ti]))
                cols.append(np.array([ti]))
                vals.append(np.array([eps * htt]))

        H = sps.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_var, self.n_var),
        )
        return H.tocsr()

    # ---------- NLP packaging ----------

    def nlp_instance(self) -> NlpInstance:
        lo, hi = self.bounds()
        return NlpInstance(
            n=self.n_var,
            m=self.m,
            objective=self.objective,
            gradient=self.gradient,
            constraints=self.constraints,
            jacobian=self.jacobian,
            lagrangian_hessian=self.lagrangian_hessian,
            lower=lo,
            upper=hi,
            name=self.maneuver.name,
        )

    def package(self, res: NlpResult) -> DiscreteSolution:
        Y, U, T = self.decode(res.x)
        return DiscreteSolution(
            x=res.x,
            multipliers=res.y[: self.m_defect],
            objective=res.objective,
            status=res.status,
            kkt=(res.stationarity, res.feasibility, res.complementarity),
            iterations=res.iterations,
            states=Y,
            controls=U,
            durations=T,
            nlp_result=res,
        )


def solve_problem(
    problem: CollocationProblem,
    tolerance: float = 1e-7,
    x0: np.ndarray | None = None,
    y0: np.ndarray | None = None,
    presolve: bool | None = None,
    max_iter: int = 800,
    log_fn=None,
) -> DiscreteSolution:
    """Solve the transcription: optional feasibility presolve, then minimum time.

    Cold starts first solve a feasibility phase with every domain duration
    pinned at its guess; minimum-time descent from an infeasible straight
    line guess otherwise collapses the durations onto their lower bounds.
    Warm starts (x0 given) skip the presolve.
    """
    inst = problem.nlp_instance()
    if presolve is None:
        presolve = x0 is None
    if x0 is None:
        x0 = problem.initial_guess()
    if presolve:
        lo, hi = inst.lower.copy(), inst.upper.copy()
        lo[problem.it0 :] = x0[problem.it0 :]
        hi[problem.it0 :] = x0[problem.it0 :]
        feas_inst = NlpInstance(
            n=inst.n,
            m=inst.m,
            objective=inst.objective,
            gradient=inst.gradient,
            constraints=inst.constraints,
            jacobian=inst.jacobian,
            lagrangian_hessian=inst.lagrangian_hessian,
            lower=lo,
            upper=hi,
            name=inst.name + "/feas",
        )
        opts1 = nlp.SolverOptions(hessian_mode="gauss_newton", max_iter=max_iter, log_fn=log_fn)
        pre = nlp.solve(feas_inst, x0, tolerance=max(tolerance, 1e-8), options=opts1)
        x0 = pre.x
        y0 = pre.y
    opts = nlp.SolverOptions(hessian_mode="auto", max_iter=max_iter, log_fn=log_fn)
    res = nlp.solve(inst, x0, tolerance=tolerance, options=opts, initial_multipliers=y0)
    return problem.package(res)


def transcribe(
    maneuver: Maneuver,
    mesh: Mesh,
    regularization: Regularization | None = None,
    t_guess: float = 5.0,
    min_duration: float | None = None,
) -> CollocationProblem:
    """Build the finite-dimensional problem for a maneuver on a mesh.

    In two-torque mode u3 is pinned to zero through its bounds regardless
    of the per-domain control kinds.
    """
    if maneuver.model.torque_mode is TorqueMode.TWO_TORQUE:
        doms = tuple(
            replace(d, control_kinds=(d.control_kinds[0], d.control_kinds[1], ZERO))
            for d in mesh.domains
        )
        mesh = Mesh(doms)
    return CollocationProblem(maneuver, mesh, regularization, t_guess, min_duration)


def estimate_costates(
    problem: CollocationProblem, solution: DiscreteSolution
) -> tuple[np.ndarray, np.ndarray]:
    """Costates at collocation points plus the terminal costate.

    The defect multiplier paired with each LGR point maps to the costate
    through division by the quadrature weight; the terminal value follows
    from the last column of the differentiation matrix.  The overall sign
    is normalized so the Hamiltonian equals -1 (free terminal time).
    """
    if solution.multipliers.size != problem.m_defect:
        raise TranscriptionError("solution carries no defect multipliers")
    yk = solution.multipliers.reshape(problem.n_colloc, N_STATES).T
    lam = -yk / problem._col_weights[None, :]
    di, k, n, h, c0 = problem._intervals[-1]
    D = lgr.defect_matrix(n)
    lam_f = -np.einsum("i,is->s", D[:, n], yk[:, c0 : c0 + n].T)

    a = problem.maneuver.model.a
    H = hamiltonian_array(a, solution.states[:, : problem.n_colloc], solution.controls, lam)
    if np.mean(H) > 0:
        lam = -lam
        lam_f = -lam_f
    return lam, lam_f


def solution_trajectory(
    problem: CollocationProblem,
    solution: DiscreteSolution,
    costates: tuple[np.ndarray, np.ndarray] | None = None,
) -> Trajectory:
    """Trajectory sampled at collocation points + t_f, with dense interpolation."""
    T = solution.durations
    t_col = problem.collocation_times(T)
    t = np.append(t_col, solution.t_f)
    Y = solution.states
    U = solution.controls

    # terminal control: extrapolate the last interval's interpolant
    di, k, n, h, c0 = problem._intervals[-1]
    tau, _ = lgr.lgr_points_weights(n)
    u_f = lgr.interpolate(tau, U[:, c0 : c0 + n], np.array([1.0]))[:, 0]
    u_all = np.column_stack([U, u_f])

    lam_all = None
    if costates is not None:
        lam, lam_f = costates
        lam_all = np.column_stack([lam, lam_f])

    dom_start = np.concatenate([[0.0], np.cumsum(T)])
    intervals = problem._intervals
    mesh = problem.mesh

    def dense(times: np.ndarray):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        ys = np.zeros((N_STATES, len(times)))
        us = np.zeros((N_CONTROLS, len(times)))
        ls = np.zeros((N_STATES, len(times))) if costates is not None else None
        for qi, tq in enumerate(times):
            tq = min(max(tq, 0.0), solution.t_f)
            d = min(np.searchsorted(dom_start, tq, side="right") - 1, problem.n_dom - 1)
            frac = (tq - dom_start[d]) / T[d]
            frac = min(max(frac, 0.0), 1.0)
            local = [r for r in intervals if r[0] == d]
            fr = np.asarray(mesh.domains[d].intervals)
            k = min(np.searchsorted(fr, frac, side="right") - 1, len(local) - 1)
            _, _, n, h, c0 = local[k]
            tloc = 2.0 * (frac - fr[k]) / (fr[k + 1] - fr[k]) - 1.0
            tau, _ = lgr.lgr_points_weights(n)
            sup = np.append(tau, 1.0)
            ys[:, qi] = lgr.interpolate(sup, Y[:, c0 : c0 + n + 1], np.array([tloc]))[:, 0]
            us[:, qi] = lgr.interpolate(tau, U[:, c0 : c0 + n], np.array([tloc]))[:, 0]
            if ls is not None:
                lam = lam_all[:, c0 : c0 + n]
                ls[:, qi] = lgr.interpolate(tau, lam, np.array([tloc]))[:, 0]
        return ys, us, ls

    return Trajectory(
        t=t,
        state=Y,
        control=u_all,
        costate=lam_all,
        switch_times=solution.switch_times,
        dense=dense,
    )
