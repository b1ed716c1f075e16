"""First-order optimality machinery: Hamiltonian, costates, switching logic.

Switching functions are g_j = lam_j for j = 1..3.  Sign logic of the
minimum principle: g_j > 0 selects u_min, g_j < 0 selects u_max, and a
vanishing g_j over an interval marks a singular arc.

Singular-law indexing note
--------------------------
Two readings exist for the kinematic-costate pairing in the second-order
singular law's denominator:

* ``(lam3*x2 - lam4*x1)`` -- consistent with a four-state reduced model in
  which omega3 is a constant parameter, so the costates of (x1, x2) are the
  third and fourth.
* ``(lam4*x2 - lam5*x1)`` -- consistent with the five-state model used
  here, where (lam4, lam5) pair with (x1, x2).

Re-deriving the switching-function derivatives symbolically for the
five-state model (see tools/generate_singular_terms.py and the checks in
tests/test_pmp.py) confirms the second reading; the first is the two-torque
special case mis-indexed.  The five-state chain also carries u3-dependent
terms that the four-state form lacks; the implementation below evaluates
the exact five-state expressions, which reduce to the corrected four-state
quotient when u3 = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _singular_terms as _st
from .dynamics import (
    Control,
    DomainError,
    Maneuver,
    SpacecraftModel,
    State,
    rates,
)
from .trajectory import Trajectory

SINGULAR_DEGENERACY_TOL = 1e-8
#: relative zero-threshold for classifying a switching-function sample as
#: a singular candidate (scaled by the costate magnitude of the trajectory)
SINGULAR_ZERO_REL = 1e-4


class SingularLawDegeneracy(ArithmeticError):
    """Denominator of the singular control law is numerically zero."""


@dataclass(frozen=True)
class Costate:
    lam1: float
    lam2: float
    lam3: float
    lam4: float
    lam5: float

    def __post_init__(self) -> None:
        if not all(map(math.isfinite, self.to_array())):
            raise DomainError(f"non-finite costate {self}")

    def to_array(self) -> np.ndarray:
        return np.array([self.lam1, self.lam2, self.lam3, self.lam4, self.lam5])

    @classmethod
    def from_array(cls, lam: np.ndarray) -> Costate:
        return cls(*map(float, lam))


def hamiltonian_array(a: float, y: np.ndarray, u: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """H = lam . f(y, u); vectorized over trailing axes."""
    return np.einsum("i...,i...->...", np.asarray(lam, dtype=float), rates(a, y, u))


def hamiltonian(model: SpacecraftModel, y: State, u: Control, lam: Costate) -> float:
    return float(hamiltonian_array(model.a, y.to_array(), u.to_array(), lam.to_array()))


def costate_rates(a: float, y: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """The five costate rates -dH/dY; vectorized over trailing axes."""
    w1, w2, w3, x1, x2 = y
    l1, l2, l3, l4, l5 = lam
    return np.stack(
        [
            l2 * a * w3 - l4 * 0.5 * (1.0 + x1**2 - x2**2) - l5 * x1 * x2,
            -l1 * a * w3 - l4 * x1 * x2 - l5 * 0.5 * (1.0 + x2**2 - x1**2),
            -l1 * a * w2 + l2 * a * w1 - l4 * x2 + l5 * x1,
            -l4 * (w2 * x2 + w1 * x1) + l5 * (w3 - w1 * x2 + w2 * x1),
            -l4 * (w3 + w2 * x1 - w1 * x2) - l5 * (w1 * x1 + w2 * x2),
        ]
    )


def costate_derivative(model: SpacecraftModel, y: State, lam: Costate) -> Costate:
    return Costate.from_array(costate_rates(model.a, y.to_array(), lam.to_array()))


def switching_functions(lam: Costate | np.ndarray) -> tuple[float, float, float]:
    arr = lam.to_array() if isinstance(lam, Costate) else np.asarray(lam, dtype=float)
    return float(arr[0]), float(arr[1]), float(arr[2])


class BangKind(enum.Enum):
    MIN = "min"
    MAX = "max"
    SINGULAR_CANDIDATE = "singular"


def bang_control(g_j: float, model: SpacecraftModel, threshold: float = 0.0) -> BangKind:
    """Minimum-principle sign logic for one switching-function value."""
    if g_j > threshold:
        return BangKind.MIN
    if g_j < -threshold:
        return BangKind.MAX
    return BangKind.SINGULAR_CANDIDATE


def bang_value(kind: BangKind, model: SpacecraftModel) -> float:
    if kind is BangKind.MIN:
        return model.u_min
    if kind is BangKind.MAX:
        return model.u_max
    raise ValueError("singular candidate has no bang value")


def _law_args(a, y, lam, u):
    return (a, *np.asarray(y, dtype=float), *np.asarray(lam, dtype=float), *np.asarray(u, float))


def singular_law_terms(
    a: float, y: np.ndarray, lam: np.ndarray, j: int, controls: np.ndarray
) -> tuple[float, float]:
    """(numerator N, denominator D) of d4(g_j)/dt4 = N + D*u_j for j in {1, 2}."""
    args = _law_args(a, y, lam, controls)
    if j == 1:
        return float(_st.sw1_numerator(*args)), float(_st.sw1_denominator(*args))
    if j == 2:
        return float(_st.sw2_numerator(*args)), float(_st.sw2_denominator(*args))
    raise DomainError("singular law exists only for control components 1 and 2")


def singular_control_general(
    model: SpacecraftModel,
    y: State | np.ndarray,
    lam: Costate | np.ndarray,
    lam_dot: Costate | np.ndarray,
    j: int,
    other_controls: Control | np.ndarray,
) -> float:
    """Second-order singular control for component j in {1, 2}.

    Valid for a != 0 and omega3 != 0.  `other_controls` supplies the bang
    values of the remaining components (the j-th entry is ignored).
    `lam_dot` must agree with costate_derivative; the law itself expands
    the costate rates internally, so the argument acts as a consistency
    check against callers differencing trajectory samples.
    """
    yv = y.to_array() if isinstance(y, State) else np.asarray(y, dtype=float)
    lv = lam.to_array() if isinstance(lam, Costate) else np.asarray(lam, dtype=float)
    ldv = lam_dot.to_array() if isinstance(lam_dot, Costate) else np.asarray(lam_dot, float)
    uv = (
        other_controls.to_array()
        if isinstance(other_controls, Control)
        else np.asarray(other_controls, dtype=float)
    )
    exact = costate_rates(model.a, yv, lv)
    scale = 1.0 + np.max(np.abs(exact))
    if np.max(np.abs(ldv - exact)) > 1e-6 * scale:
        raise DomainError("lam_dot inconsistent with the costate equations")
    num, den = singular_law_terms(model.a, yv, lv, j, uv)
    if abs(den) < SINGULAR_DEGENERACY_TOL:
        raise SingularLawDegeneracy(f"singular-law denominator {den:.3e} for u{j}")
    return -num / den


def singular_control_nonspinning() -> float:
    """Singular control of the nonspinning (omega3 = 0) special case."""
    return 0.0


def nonspinning_arc_condition(y: State | np.ndarray) -> tuple[float, float]:
    """(|omega1|, |x1|): both must vanish for the nonspinning arc to be optimal."""
    yv = y.to_array() if isinstance(y, State) else np.asarray(y, dtype=float)
    return float(np.abs(yv[0]).max()), float(np.abs(yv[3]).max())


def reduced_switching_derivatives(
    y: np.ndarray, lam: np.ndarray, u: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Nonspinning-case d(g1)/dt .. d4(g1)/dt4 in their on-arc forms.

    These are the four reduced expressions used to certify a finite-order
    singular arc; all must vanish along such an arc.  The first is the
    exact lam1 rate at omega3 = 0 (the sign of its first term is flipped
    relative to the printed source, which carries a typo; the symbolic
    rederivation in the tests pins the form used here).
    """
    w1, w2, _, x1, x2 = np.asarray(y, dtype=float)
    _, _, _, l4, l5 = np.asarray(lam, dtype=float)
    u1 = np.asarray(u, dtype=float)[0]
    l2dot = -l4 * x1 * x2 - l5 * 0.5 * (1.0 + x2**2 - x1**2)
    d1 = -l4 * 0.5 * (1.0 + x1**2 - x2**2) - l5 * x1 * x2
    d2 = w2 * (l4 * x2 - l5 * x1)
    d3 = w1 * w2 * l2dot
    d4 = u1 * w2 * l2dot
    return d1, d2, d3, d4


def legendre_clebsch(
    model: SpacecraftModel,
    y: State | np.ndarray,
    lam: Costate | np.ndarray,
    lam_dot: Costate | np.ndarray,
    j: int,
) -> float:
    """Generalized Legendre-Clebsch quantity; nonnegative on optimal arcs.

    General case (a != 0, omega3 != 0): the denominator of the singular
    law, i.e. the u_j coefficient of d4(g_j)/dt4.  Nonspinning case
    (omega3 ~ 0): omega2 * lam2_dot.
    """
    yv = y.to_array() if isinstance(y, State) else np.asarray(y, dtype=float)
    lv = lam.to_array() if isinstance(lam, Costate) else np.asarray(lam, dtype=float)
    if isinstance(lam_dot, Costate):
        ldv = lam_dot.to_array()
    else:
        ldv = np.asarray(lam_dot, dtype=float)
    if abs(yv[2]) < 1e-9:
        return float(yv[1] * ldv[1])
    _, den = singular_law_terms(model.a, yv, lv, j, np.zeros(3))
    return float(den)


@dataclass(frozen=True)
class PmpResiduals:
    """Aggregated first-order optimality diagnostics for a solved trajectory."""

    hamiltonian_error: float
    costate_defect: float
    transversality_error: float
    switching_consistency: float
    legendre_clebsch_min: float

    def to_dict(self) -> dict:
        lc = self.legendre_clebsch_min
        return {
            "hamiltonian_error": self.hamiltonian_error,
            "costate_defect": self.costate_defect,
            "transversality_error": self.transversality_error,
            "switching_consistency": self.switching_consistency,
            "legendre_clebsch_min": None if math.isinf(lc) else lc,
        }


def pmp_residuals(
    model: SpacecraftModel,
    maneuver: Maneuver,
    trajectory: Trajectory,
    singular_arcs: list[tuple[int, float, float]] | None = None,
) -> PmpResiduals:
    """Evaluate all minimum-principle residuals on the trajectory samples.

    `singular_arcs` lists (control_index, t_start, t_end) windows; the
    Legendre-Clebsch minimum is taken over their samples (+inf if none).
    """
    if trajectory.costate is None:
        raise DomainError("trajectory carries no costate estimates")
    t = trajectory.t
    y = trajectory.state
    u = trajectory.control
    lam = trajectory.costate
    a = model.a

    H = hamiltonian_array(a, y, u, lam)
    ham_err = float(np.max(np.abs(H + 1.0)))

    lam_rhs = costate_rates(a, y, lam)
    if len(t) >= 3:
        lam_dot_num = np.gradient(lam, t, axis=1)
        defect = float(np.max(np.abs(lam_dot_num - lam_rhs)))
    else:
        defect = 0.0

    trans = 0.0
    for i in maneuver.bc.free_indices:
        trans = max(trans, abs(float(lam[i, -1])))

    g = lam[:3]
    g_scale = max(np.max(np.abs(lam)), 1e-30)
    g_tol = SINGULAR_ZERO_REL * g_scale
    u_tol = 1e-3 * (model.u_max - model.u_min)
    bad = 0
    total = 0
    for j in range(model.n_active_controls):
        lo, hi = model.control_bounds(j)
        if hi - lo <= 0.0:
            continue
        at_min = u[j] <= lo + u_tol
        at_max = u[j] >= hi - u_tol
        interior = ~(at_min | at_max)
        total += len(t)
        bad += int(np.sum(at_min & (g[j] < -g_tol)))
        bad += int(np.sum(at_max & (g[j] > g_tol)))
        bad += int(np.sum(interior & (np.abs(g[j]) > g_tol)))
    consistency = bad / total if total else 0.0

    lc_min = math.inf
    for j, t0, t1 in singular_arcs or []:
        sel = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
        for k in np.nonzero(sel)[0]:
            lc = legendre_clebsch(model, y[:, k], lam[:, k], lam_rhs[:, k], j + 1)
            lc_min = min(lc_min, lc)

    return PmpResiduals(
        hamiltonian_error=ham_err,
        costate_defect=defect,
        transversality_error=trans,
        switching_consistency=consistency,
        legendre_clebsch_min=lc_min,
    )
