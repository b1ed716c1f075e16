"""Switching-structure detection and the BBSOC outer loop.

The pipeline solves the problem once on a structure-free mesh, refines
until the discretization error is at tolerance (or stagnates on control
discontinuities), reads the bang/singular arc layout off the solution and
its costate estimates, re-transcribes with one collocation domain per arc
segment (switch times become duration variables), and finally shrinks the
singular-arc regularization until its contribution is negligible.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import collocation as col
from . import mesh as meshing
from .collocation import (
    AT_MAX,
    AT_MIN,
    FREE,
    SINGULAR,
    CollocationProblem,
    DiscreteSolution,
    Domain,
    Mesh,
    Regularization,
    uniform_mesh,
)
from .dynamics import Maneuver, SpacecraftModel, TorqueMode
from .pmp import PmpResiduals, pmp_residuals
from .report import RegularizationRecord, SolveReport
from .trajectory import Trajectory


class StructureError(RuntimeError):
    """Structure detection could not classify the solution."""


class ArcKind(enum.Enum):
    BANG_MIN = "bang_min"
    BANG_MAX = "bang_max"
    SINGULAR = "singular"

    @property
    def domain_kind(self) -> str:
        return {"bang_min": AT_MIN, "bang_max": AT_MAX, "singular": SINGULAR}[self.value]


@dataclass(frozen=True)
class ArcSpec:
    control_index: int  # 1-based
    kind: ArcKind
    start_fraction: float
    end_fraction: float


@dataclass(frozen=True)
class ControlStructure:
    """Per-control ordered arc lists plus the merged global breakpoints."""

    arcs: tuple[tuple[ArcSpec, ...], ...]  # indexed by control 0..2; empty if unused
    breakpoints: tuple[float, ...]  # interior horizon fractions, increasing

    def __post_init__(self) -> None:
        for alist in self.arcs:
            pos = 0.0
            for arc in alist:
                if abs(arc.start_fraction - pos) > 1e-9:
                    raise StructureError("arcs must tile the horizon without overlap")
                pos = arc.end_fraction
            if alist and abs(pos - 1.0) > 1e-9:
                raise StructureError("arcs must reach the end of the horizon")
        bp = np.asarray(self.breakpoints)
        if bp.size and (np.any(np.diff(bp) <= 0) or bp.min() <= 0 or bp.max() >= 1):
            raise StructureError("breakpoints must be strictly increasing and interior")

    @property
    def n_switches(self) -> int:
        return len(self.breakpoints)

    def breakpoint_controls(self) -> list[int]:
        """1-based control index owning each global breakpoint."""
        owner = []
        for b in self.breakpoints:
            hit = 0
            for alist in self.arcs:
                for arc in alist[:-1]:
                    if abs(arc.end_fraction - b) < 1e-9:
                        hit = arc.control_index
            owner.append(hit)
        return owner

    def singular_windows(self) -> list[tuple[int, float, float]]:
        """(0-based control, start_fraction, end_fraction) of singular arcs."""
        out = []
        for alist in self.arcs:
            for arc in alist:
                if arc.kind is ArcKind.SINGULAR:
                    out.append((arc.control_index - 1, arc.start_fraction, arc.end_fraction))
        return out

    def domain_kinds(self, n_controls: int = 3) -> list[tuple[str, ...]]:
        """Per inter-breakpoint segment: the arc kind of every control."""
        edges = [0.0, *self.breakpoints, 1.0]
        out = []
        for left, right in zip(edges[:-1], edges[1:]):
            mid = 0.5 * (left + right)
            kinds = []
            for j in range(n_controls):
                alist = self.arcs[j]
                if not alist:
                    kinds.append(FREE)
                    continue
                kind = FREE
                for arc in alist:
                    if arc.start_fraction - 1e-9 <= mid <= arc.end_fraction + 1e-9:
                        kind = arc.kind.domain_kind
                        break
                kinds.append(kind)
            out.append(tuple(kinds))
        return out


@dataclass(frozen=True)
class DetectionOptions:
    """Thresholds of the structure detector (defaults follow the mesh scale)."""

    bang_threshold: float = 1e-3  # fraction of the control range
    singular_g_rel: float = 3e-3  # |g| threshold relative to costate scale
    min_singular_samples: int = 3
    min_singular_span: float = 0.02  # fraction of horizon
    merge_tol: float = 5e-3  # breakpoint merge distance, fraction of horizon
    # a run endpoint within this fraction of the control range of a bound
    # counts as emerging from that bound (used to spot smeared transitions)
    shoulder_threshold: float = 0.35
    # nonspinning case: the u1 (u2) singular arc requires omega1 = x1 = 0
    # (omega2 = x2 = 0); the onset is refined to where the states actually
    # reach that manifold, since the switching function has a fourth-order
    # flat touch there and carries no usable sign information
    arc_state_tol: float = 1e-2
    nonspin_omega3_tol: float = 1e-6


def _runs(labels: np.ndarray) -> list[tuple[int, int, int]]:
    """Maximal runs of equal labels: (label, start, stop_exclusive)."""
    out = []
    start = 0
    for k in range(1, len(labels) + 1):
        if k == len(labels) or labels[k] != labels[start]:
            out.append((int(labels[start]), start, k))
            start = k
    return out


def _refine_singular_onsets(
    segments: list,
    trajectory: Trajectory,
    j: int,
    g: np.ndarray,
    t: np.ndarray,
    opt: DetectionOptions,
) -> list:
    """Split leading non-manifold portions off nonspinning singular segments.

    The states paired with the singular control must vanish along the arc;
    whatever precedes that is a bang arc whose bound follows the sign of
    the switching function.
    """
    rows = (0, 3) if j == 0 else (1, 4)
    cond = np.maximum(np.abs(trajectory.state[rows[0]]), np.abs(trajectory.state[rows[1]]))
    t_f = trajectory.t_f
    out = []
    for kind, t0, t1 in segments:
        if kind is not ArcKind.SINGULAR:
            out.append((kind, t0, t1))
            continue
        sel = np.nonzero((t >= t0 - 1e-12) & (t <= t1 + 1e-12))[0]
        if sel.size < 2:
            out.append((kind, t0, t1))
            continue
        suffix = np.maximum.accumulate(cond[sel][::-1])[::-1]
        ok = suffix <= opt.arc_state_tol
        if ok[0] or not ok.any():
            out.append((kind, t0, t1))
            continue
        k_on = int(np.argmax(ok))
        t_on = float(t[sel[k_on]])
        if t_on - t0 < opt.merge_tol * t_f:
            out.append((kind, t0, t1))
            continue
        lead_g = float(np.mean(g[sel[:k_on]]))
        lead_kind = ArcKind.BANG_MIN if lead_g > 0 else ArcKind.BANG_MAX
        out.append((lead_kind, t0, t_on))
        out.append((ArcKind.SINGULAR, t_on, t1))
    return out


def _zero_crossing(t: np.ndarray, g: np.ndarray, lo: int, hi: int) -> float | None:
    for k in range(max(lo, 0), min(hi, len(t) - 1)):
        if g[k] == 0.0:
            return float(t[k])
        if g[k] * g[k + 1] < 0:
            return float(t[k] - g[k] * (t[k + 1] - t[k]) / (g[k + 1] - g[k]))
    return None


def detect_structure(
    trajectory: Trajectory,
    model: SpacecraftModel,
    options: DetectionOptions | None = None,
) -> ControlStructure:
    """Read the per-control arc layout off a solved trajectory.

    Saturated samples become bang arcs; interior runs with a vanishing
    switching function become singular arcs; short interior runs are
    bang-to-bang transitions whose breakpoint is placed at the switching
    function's zero crossing.  Raises StructureError for interior runs
    with a clearly nonzero switching function.
    """
    opt = options or DetectionOptions()
    if trajectory.costate is None:
        raise StructureError("structure detection needs costate estimates")
    t = trajectory.t
    t_f = trajectory.t_f
    u = trajectory.control
    g_all = trajectory.switching
    g_scale = max(float(np.max(np.abs(trajectory.costate))), 1e-30)
    g_tol = opt.singular_g_rel * g_scale

    INT, MIN_, MAX_ = 0, 1, 2
    all_arcs: list[tuple[ArcSpec, ...]] = []
    for j in range(3):
        lo, hi = model.control_bounds(j)
        if hi - lo <= 0.0:
            all_arcs.append(())
            continue
        u_tol = opt.bang_threshold * (hi - lo)
        labels = np.full(len(t), INT)
        labels[u[j] <= lo + u_tol] = MIN_
        labels[u[j] >= hi - u_tol] = MAX_
        g = g_all[j]

        # absorb single-sample islands between equal neighbors
        runs = _runs(labels)
        for idx, (lab, s, e) in enumerate(runs):
            if e - s == 1 and 0 < idx < len(runs) - 1 and runs[idx - 1][0] == runs[idx + 1][0]:
                labels[s] = runs[idx - 1][0]
        runs = _runs(labels)

        segments: list[tuple[ArcKind | None, float, float]] = []  # (kind, t0, t1)
        for idx, (lab, s, e) in enumerate(runs):
            t0 = t[s] if idx else 0.0
            t1 = t[e - 1] if idx < len(runs) - 1 else t_f
            if lab == MIN_:
                segments.append((ArcKind.BANG_MIN, t0, t1))
            elif lab == MAX_:
                segments.append((ArcKind.BANG_MAX, t0, t1))
            else:
                span = t1 - t0
                gmax = float(np.max(np.abs(g[s:e])))
                long_run = (
                    e - s >= opt.min_singular_samples
                    and span >= opt.min_singular_span * t_f
                )
                # a run walking from one bound to the other is a smeared
                # bang-bang transition, not a singular arc
                rng_u = hi - lo
                u_run = u[j, s:e]
                near_lo0 = u_run[0] <= lo + opt.shoulder_threshold * rng_u
                near_hi0 = u_run[0] >= hi - opt.shoulder_threshold * rng_u
                near_lo1 = u_run[-1] <= lo + opt.shoulder_threshold * rng_u
                near_hi1 = u_run[-1] >= hi - opt.shoulder_threshold * rng_u
                crossing_like = (near_lo0 and near_hi1) or (near_hi0 and near_lo1)
                if long_run and gmax <= g_tol and not crossing_like:
                    segments.append((ArcKind.SINGULAR, t0, t1))
                elif long_run and gmax > g_tol and not crossing_like:
                    raise StructureError(
                        f"u{j + 1}: interior run on [{t0:.4f}, {t1:.4f}] has |g| up to "
                        f"{gmax:.2e} (threshold {g_tol:.2e}); cannot classify"
                    )
                else:
                    # bang-to-bang transition: place the breakpoint at the
                    # zero of g inside (or near) the run
                    tc = _zero_crossing(t, g, s - 1, e + 1)
                    if tc is None:
                        tc = 0.5 * (t0 + t1)
                    segments.append((None, tc, tc))

        nonspinning = float(np.max(np.abs(trajectory.state[2]))) <= opt.nonspin_omega3_tol
        if nonspinning and j in (0, 1):
            segments = _refine_singular_onsets(segments, trajectory, j, g, t, opt)

        arcs: list[ArcSpec] = []
        cur_kind: ArcKind | None = None
        cur_start = 0.0
        pending_tc: float | None = None
        prev_end = 0.0
        for kind, t0, t1 in segments:
            if kind is None:
                pending_tc = t0
                continue
            if cur_kind is None:
                cur_kind = kind
            elif kind is not cur_kind:
                if pending_tc is not None:
                    boundary = pending_tc
                else:
                    boundary = 0.5 * (prev_end + t0)
                arcs.append(ArcSpec(j + 1, cur_kind, cur_start / t_f, boundary / t_f))
                cur_start = boundary
                cur_kind = kind
            pending_tc = None
            prev_end = t1
        if cur_kind is None:
            raise StructureError(f"u{j + 1}: no arcs detected")
        arcs.append(ArcSpec(j + 1, cur_kind, cur_start / t_f, 1.0))
        # merge any zero-length or duplicated-kind neighbors
        merged: list[ArcSpec] = []
        for arc in arcs:
            if merged and (
                merged[-1].kind is arc.kind or arc.end_fraction - arc.start_fraction < 1e-9
            ):
                merged[-1] = replace(merged[-1], end_fraction=arc.end_fraction)
            elif arc.end_fraction - arc.start_fraction < 1e-9:
                continue
            else:
                merged.append(arc)
        all_arcs.append(tuple(merged))

    bps: list[float] = []
    for alist in all_arcs:
        for arc in alist[:-1]:
            bps.append(arc.end_fraction)
    bps.sort()
    merged_bps: list[float] = []
    for b in bps:
        if merged_bps and b - merged_bps[-1] < opt.merge_tol:
            continue
        merged_bps.append(b)
    # snap arc boundaries onto the merged global breakpoints
    snapped: list[tuple[ArcSpec, ...]] = []
    for alist in all_arcs:
        new = []
        for arc in alist:
            s0 = _snap(arc.start_fraction, merged_bps, opt.merge_tol)
            s1 = _snap(arc.end_fraction, merged_bps, opt.merge_tol)
            new.append(replace(arc, start_fraction=s0, end_fraction=s1))
        snapped.append(tuple(new))
    return ControlStructure(arcs=tuple(snapped), breakpoints=tuple(merged_bps))


def _snap(frac: float, bps: list[float], tol: float) -> float:
    if frac in (0.0, 1.0):
        return frac
    for b in bps:
        if abs(frac - b) < tol:
            return b
    return frac


def singular_intervals(
    problem: CollocationProblem, solution: DiscreteSolution
) -> list[tuple[int, float, float]]:
    """(0-based control, t_start, t_end) singular windows at exact domain edges."""
    bounds = np.concatenate([[0.0], np.cumsum(solution.durations)])
    out: dict[int, list[list[float]]] = {}
    for d, dom in enumerate(problem.mesh.domains):
        for j in range(3):
            if dom.control_kinds[j] == SINGULAR:
                spans = out.setdefault(j, [])
                if spans and abs(spans[-1][1] - bounds[d]) < 1e-12:
                    spans[-1][1] = bounds[d + 1]
                else:
                    spans.append([bounds[d], bounds[d + 1]])
    return [(j, a, b) for j in sorted(out) for a, b in out[j]]


def structures_equivalent(a: ControlStructure, b: ControlStructure) -> bool:
    """Same breakpoint count and identical per-control arc-kind sequences."""
    if a.n_switches != b.n_switches:
        return False
    for arcs_a, arcs_b in zip(a.arcs, b.arcs):
        if [x.kind for x in arcs_a] != [x.kind for x in arcs_b]:
            return False
    return True


def structured_mesh(
    structure: ControlStructure,
    base_intervals: int = 20,
    points: int = 5,
    min_intervals: int = 2,
    max_intervals: int = 6,
) -> Mesh:
    """One domain per inter-breakpoint segment, interval count by length."""
    edges = [0.0, *structure.breakpoints, 1.0]
    kinds = structure.domain_kinds()
    domains = []
    for (left, right), kind in zip(zip(edges[:-1], edges[1:]), kinds):
        n_int = int(np.clip(round((right - left) * base_intervals), min_intervals, max_intervals))
        fr = tuple(np.linspace(0.0, 1.0, n_int + 1))
        domains.append(Domain(left, right, fr, (points,) * n_int, kind))
    return Mesh(tuple(domains))


def apply_structure(
    maneuver: Maneuver,
    structure: ControlStructure,
    mesh: Mesh | None = None,
    epsilon: float = 1e-1,
    functional: str = "control_energy",
    t_guess: float = 5.0,
) -> CollocationProblem:
    """Structured transcription: pinned bang controls, regularized singular ones."""
    if mesh is None:
        mesh = structured_mesh(structure)
    if len(mesh.domains) != structure.n_switches + 1:
        raise StructureError("mesh domains do not align with the structure's breakpoints")
    targets = []
    kinds = structure.domain_kinds()
    for d, kind in enumerate(kinds):
        for j in range(3):
            if kind[j] == SINGULAR:
                targets.append((d, j))
    reg = Regularization(epsilon, tuple(targets), functional) if targets else None
    return col.transcribe(maneuver, mesh, regularization=reg, t_guess=t_guess)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularizationSchedule:
    epsilon0: float = 1e-1
    reduction: float = 1e2
    delta_tol: float = 1e-8
    max_p: int = 6
    functional: str = "control_energy"


@dataclass
class BbsocOptions:
    mesh_intervals: int = 20
    mesh_points: int = 3
    eps_mesh: float = 1e-5
    eps_nlp: float = 1e-7
    # the minimum-time problem is nonconvex; the initial solve runs once per
    # candidate horizon guess and keeps the best local solution
    t_guess: float | None = None
    t_guess_candidates: tuple[float, ...] = (4.0, 2.5, 6.0)
    max_refine_rounds: int = 10
    max_structured_rounds: int = 10
    max_structure_passes: int = 3
    schedule: RegularizationSchedule = field(default_factory=RegularizationSchedule)
    detection: DetectionOptions = field(default_factory=DetectionOptions)
    structured_points: int = 5
    log_fn: object = None

    @property
    def guesses(self) -> tuple[float, ...]:
        return (self.t_guess,) if self.t_guess is not None else self.t_guess_candidates


@dataclass
class BbsocResult:
    trajectory: Trajectory
    report: SolveReport
    structure: ControlStructure | None
    problem: CollocationProblem
    solution: DiscreteSolution

    @property
    def t_f(self) -> float:
        return self.solution.t_f


class StageFailure(RuntimeError):
    def __init__(self, stage: str, message: str, partial: object = None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.partial = partial


def _warm_start(
    new_problem: CollocationProblem,
    trajectory: Trajectory,
    durations: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Interpolate an old trajectory onto a new problem's grid."""
    x0 = new_problem.initial_guess()
    x0[new_problem.it0 :] = durations
    t_col = new_problem.collocation_times(durations)
    t_nodes = np.append(t_col, float(durations.sum()))
    ys, us, lam = trajectory.at(t_nodes)
    x0[: new_problem.iu0] = ys.T.ravel()
    lo, hi = new_problem.bounds()
    u_flat = us[:, :-1].T.ravel()
    x0[new_problem.iu0 : new_problem.it0] = u_flat
    x0 = np.clip(x0, lo, hi)
    y0 = np.zeros(new_problem.m)
    if lam is not None:
        lam_col = lam[:, :-1]
        w = new_problem._col_weights
        y0[: new_problem.m_defect] = (-(lam_col * w[None, :])).T.ravel()
    return x0, y0


def _solve_refined(
    maneuver: Maneuver,
    problem: CollocationProblem,
    solution: DiscreteSolution,
    opts: BbsocOptions,
    history: list[dict],
    stage: str,
    rounds: int,
    t_ref: float,
) -> tuple[CollocationProblem, DiscreteSolution, int]:
    """ph-refine and re-solve until the error estimate meets eps_mesh."""
    total_iters = 0
    prev_err = np.inf
    for rnd in range(rounds):
        est = meshing.estimate_error(problem, solution)
        history.append(
            {
                "stage": stage,
                "round": rnd,
                "intervals": problem.mesh.n_intervals,
                "collocation_points": problem.mesh.n_collocation,
                "max_error": est.global_max,
                "t_f": solution.t_f,
            }
        )
        if est.global_max <= opts.eps_mesh:
            break
        if est.global_max > 0.9 * prev_err and rnd >= 2:
            break  # stagnation: leave it to structure detection
        prev_err = est.global_max
        new_mesh = meshing.refine(problem.mesh, est, opts.eps_mesh)
        new_problem = col.transcribe(
            maneuver,
            new_mesh,
            regularization=problem.regularization,
            t_guess=t_ref,
            min_duration=problem.min_duration,
        )
        traj = col.solution_trajectory(problem, solution, col.estimate_costates(problem, solution))
        x0, y0 = _warm_start(new_problem, traj, solution.durations)
        new_solution = col.solve_problem(
            new_problem, tolerance=opts.eps_nlp, x0=x0, y0=y0, log_fn=opts.log_fn
        )
        if not new_solution.success:
            break  # keep the previous converged mesh
        problem, solution = new_problem, new_solution
        total_iters += new_solution.iterations
    return problem, solution, total_iters


def regularize_singular(
    maneuver: Maneuver,
    structure: ControlStructure,
    mesh: Mesh,
    schedule: RegularizationSchedule,
    warm: tuple[np.ndarray, np.ndarray] | None = None,
    eps_nlp: float = 1e-7,
    t_guess: float = 5.0,
    log_fn=None,
) -> tuple[CollocationProblem, DiscreteSolution, RegularizationRecord, int]:
    """Shrink epsilon until the regularization term's value is negligible.

    Iterates p = 1, 2, ...: solve at the current epsilon, measure
    delta = the regularization term's value; stop once delta is at
    tolerance, otherwise divide epsilon by the reduction factor and
    warm-start the next solve.
    """
    eps = schedule.epsilon0
    total_iters = 0
    best = None
    x0 = y0 = None
    if warm is not None:
        x0, y0 = warm
    for p in range(1, schedule.max_p + 1):
        problem = apply_structure(
            maneuver, structure, mesh, epsilon=eps, functional=schedule.functional,
            t_guess=t_guess,
        )
        solution = col.solve_problem(
            problem, tolerance=eps_nlp, x0=x0, y0=y0, log_fn=log_fn
        )
        total_iters += solution.iterations
        if not solution.success and best is not None:
            problem, solution, delta, eps = best
            return problem, solution, RegularizationRecord(eps, delta, p - 1), total_iters
        delta = problem.regularization_value(solution.x)
        best = (problem, solution, delta, eps)
        if delta <= schedule.delta_tol:
            return problem, solution, RegularizationRecord(eps, delta, p), total_iters
        eps /= schedule.reduction
        x0, y0 = solution.x.copy(), solution.nlp_result.y.copy()
    problem, solution, delta, eps_used = best
    return (
        problem,
        solution,
        RegularizationRecord(eps_used, delta, schedule.max_p),
        total_iters,
    )


def bbsoc_solve(maneuver: Maneuver, options: BbsocOptions | None = None) -> BbsocResult:
    """Full pipeline: initial solve, refinement, structure, regularization.

    All thresholds are defaulted; no prior knowledge of the switching
    structure is required.  Raises StageFailure with the stage name and
    the best partial result when a stage cannot complete.
    """
    opts = options or BbsocOptions()
    t_start = time.perf_counter()
    history: list[dict] = []
    stages: list[str] = []
    total_iters = 0

    # initial structure-free solve, best basin over the horizon guesses
    stages.append("initial_solve")
    mesh0 = uniform_mesh(opts.mesh_intervals, opts.mesh_points)
    best: tuple[CollocationProblem, DiscreteSolution, float] | None = None
    for tg in opts.guesses:
        cand_problem = col.transcribe(maneuver, mesh0, t_guess=tg)
        cand = col.solve_problem(cand_problem, tolerance=opts.eps_nlp, log_fn=opts.log_fn)
        total_iters += cand.iterations
        if cand.success and (best is None or cand.t_f < best[1].t_f - 1e-9):
            best = (cand_problem, cand, tg)
    if best is None:
        raise StageFailure("initial_solve", "no horizon guess produced an optimal solve", None)
    problem, solution, t_ref = best

    stages.append("mesh_refinement")
    problem, solution, iters = _solve_refined(
        maneuver, problem, solution, opts, history, "unstructured", opts.max_refine_rounds,
        t_ref,
    )
    total_iters += iters

    stages.append("structure_detection")
    costates = col.estimate_costates(problem, solution)
    traj = col.solution_trajectory(problem, solution, costates)
    structure = detect_structure(traj, maneuver.model, opts.detection)

    reg_record = RegularizationRecord(0.0, 0.0, 0)
    if structure.n_switches > 0 or structure.singular_windows():
        # structure iteration: a first pass may lump a short bang arc into a
        # mushy singular window; re-detecting on the structured solution
        # sharpens the layout, and the loop exits once detection reproduces
        # the structure it was given
        for struct_pass in range(1, opts.max_structure_passes + 1):
            stages.append(f"structured_solve_{struct_pass}")
            smesh = structured_mesh(
                structure, base_intervals=opts.mesh_intervals, points=opts.structured_points
            )
            sproblem = apply_structure(
                maneuver,
                structure,
                smesh,
                epsilon=opts.schedule.epsilon0,
                functional=opts.schedule.functional,
                t_guess=t_ref,
            )
            durations = solution.t_f * np.diff([0.0, *structure.breakpoints, 1.0])
            x0, y0 = _warm_start(sproblem, traj, durations)
            ssolution = col.solve_problem(
                sproblem, tolerance=opts.eps_nlp, x0=x0, y0=y0, log_fn=opts.log_fn
            )
            total_iters += ssolution.iterations
            if not ssolution.success:
                raise StageFailure(
                    f"structured_solve_{struct_pass}",
                    f"NLP returned {ssolution.status}",
                    solution,
                )

            sproblem, ssolution, iters = _solve_refined(
                maneuver, sproblem, ssolution, opts, history, f"structured_{struct_pass}",
                opts.max_structured_rounds, t_ref,
            )
            total_iters += iters

            if sproblem.regularization is not None:
                stages.append(f"singular_regularization_{struct_pass}")
                warm = (ssolution.x.copy(), ssolution.nlp_result.y.copy())
                sproblem, ssolution, reg_record, iters = regularize_singular(
                    maneuver,
                    structure,
                    sproblem.mesh,
                    opts.schedule,
                    warm=warm,
                    eps_nlp=opts.eps_nlp,
                    t_guess=t_ref,
                    log_fn=opts.log_fn,
                )
                total_iters += iters
            else:
                reg_record = RegularizationRecord(0.0, 0.0, 0)
            problem, solution = sproblem, ssolution
            costates = col.estimate_costates(problem, solution)
            traj = col.solution_trajectory(problem, solution, costates)
            redetected = detect_structure(traj, maneuver.model, opts.detection)
            converged = structures_equivalent(structure, redetected)
            structure = redetected  # fractions refreshed against the final t_f
            if converged:
                break

    stages.append("verification")
    costates = col.estimate_costates(problem, solution)
    trajectory = col.solution_trajectory(problem, solution, costates)
    trajectory.switch_times = solution.switch_times
    trajectory.switch_controls = structure.breakpoint_controls()
    singular_abs = singular_intervals(problem, solution)
    residuals = pmp_residuals(maneuver.model, maneuver, trajectory, singular_abs)

    report = SolveReport(
        maneuver=maneuver.name,
        t_f=solution.t_f,
        switch_times=solution.switch_times,
        switch_controls=structure.breakpoint_controls(),
        regularization=reg_record,
        pmp=residuals,
        mesh_history=history,
        nlp_iterations=total_iters,
        wall_time=time.perf_counter() - t_start,
        stages=stages,
    )
    return BbsocResult(
        trajectory=trajectory,
        report=report,
        structure=structure,
        problem=problem,
        solution=solution,
    )
