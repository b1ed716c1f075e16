"""Axisymmetric rigid-spacecraft model: plant, boundary data, built-in maneuvers.

State ordering everywhere: (omega1, omega2, omega3, x1, x2), where omega is
the body angular velocity and (x1, x2) locate the inertial symmetry axis as
seen from the body frame.  Controls are the normalized torques u_j = tau_j/I_j.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

STATE_NAMES = ("omega1", "omega2", "omega3", "x1", "x2")
CONTROL_NAMES = ("u1", "u2", "u3")
N_STATES = 5
N_CONTROLS = 3


class DomainError(ValueError):
    """Raised for inputs outside an operation's domain."""


class TorqueMode(enum.Enum):
    THREE_TORQUE = "three"
    TWO_TORQUE = "two"


@dataclass(frozen=True)
class SpacecraftModel:
    """Plant parameters: inertia ratio, control bounds, torque mode.

    In TWO_TORQUE mode u3 is identically zero, so omega3 stays at its
    initial value along any propagated trajectory.
    """

    a: float
    u_min: float = -1.0
    u_max: float = 1.0
    torque_mode: TorqueMode = TorqueMode.THREE_TORQUE

    def __post_init__(self) -> None:
        if not abs(self.a) <= 1.0:
            raise DomainError(f"inertia ratio must satisfy |a| <= 1, got {self.a}")
        if not self.u_min < self.u_max:
            raise DomainError(f"need u_min < u_max, got [{self.u_min}, {self.u_max}]")

    @property
    def n_active_controls(self) -> int:
        return 2 if self.torque_mode is TorqueMode.TWO_TORQUE else 3

    def control_bounds(self, j: int) -> tuple[float, float]:
        """Bounds of control component j (0-based); u3 pinned in two-torque mode."""
        if j == 2 and self.torque_mode is TorqueMode.TWO_TORQUE:
            return 0.0, 0.0
        return self.u_min, self.u_max


@dataclass(frozen=True)
class State:
    omega1: float
    omega2: float
    omega3: float
    x1: float
    x2: float

    def __post_init__(self) -> None:
        if not all(map(math.isfinite, self.to_array())):
            raise DomainError(f"non-finite state {self}")

    def to_array(self) -> np.ndarray:
        return np.array([self.omega1, self.omega2, self.omega3, self.x1, self.x2])

    @classmethod
    def from_array(cls, y: np.ndarray) -> State:
        return cls(*map(float, y))


@dataclass(frozen=True)
class Control:
    u1: float
    u2: float
    u3: float = 0.0

    def __post_init__(self) -> None:
        if not all(map(math.isfinite, self.to_array())):
            raise DomainError(f"non-finite control {self}")

    def to_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3])

    @classmethod
    def from_array(cls, u: np.ndarray) -> Control:
        return cls(*map(float, u))


FREE = None  # terminal-condition marker


@dataclass(frozen=True)
class BoundaryConditions:
    """Initial state (all five fixed) and per-component terminal spec.

    `terminal` holds a fixed value per state component or FREE (None).  At
    least one component must be fixed, otherwise minimum time degenerates
    to t_f -> 0.
    """

    initial: State
    terminal: tuple[float | None, ...]

    def __post_init__(self) -> None:
        if len(self.terminal) != N_STATES:
            raise DomainError("terminal spec needs one entry per state component")
        if all(v is None for v in self.terminal):
            raise DomainError("at least one terminal component must be fixed")

    @property
    def fixed_mask(self) -> np.ndarray:
        return np.array([v is not None for v in self.terminal])

    @property
    def free_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.terminal) if v is None]


@dataclass(frozen=True)
class Maneuver:
    name: str
    model: SpacecraftModel
    bc: BoundaryConditions
    description: str = ""


def rates(a: float, y: np.ndarray, u: np.ndarray) -> np.ndarray:
    """State rates; y (5, ...) and u (3, ...) broadcast together."""
    w1, w2, w3, x1, x2 = y
    u1, u2, u3 = u
    return np.stack(
        [
            a * w3 * w2 + u1,
            -a * w3 * w1 + u2,
            u3 * np.ones_like(w1),
            w3 * x2 + w2 * x1 * x2 + 0.5 * w1 * (1.0 + x1**2 - x2**2),
            -w3 * x1 + w1 * x1 * x2 + 0.5 * w2 * (1.0 + x2**2 - x1**2),
        ]
    )


def rate_jacobians(a: float, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(df/dy, df/du) with shapes (5, 5, ...) and (5, 3, ...)."""
    w1, w2, w3, x1, x2 = np.asarray(y, dtype=float)
    z = np.zeros_like(w1)
    o = np.ones_like(w1)
    fy = np.stack(
        [
            np.stack([z, a * w3, a * w2, z, z]),
            np.stack([-a * w3, z, -a * w1, z, z]),
            np.stack([z, z, z, z, z]),
            np.stack(
                [
                    0.5 * (1.0 + x1**2 - x2**2),
                    x1 * x2,
                    x2,
                    w2 * x2 + w1 * x1,
                    w3 + w2 * x1 - w1 * x2,
                ]
            ),
            np.stack(
                [
                    x1 * x2,
                    0.5 * (1.0 + x2**2 - x1**2),
                    -x1,
                    -w3 + w1 * x2 - w2 * x1,
                    w1 * x1 + w2 * x2,
                ]
            ),
        ]
    )
    fu = np.stack(
        [
            np.stack([o, z, z]),
            np.stack([z, o, z]),
            np.stack([z, z, o]),
            np.stack([z, z, z]),
            np.stack([z, z, z]),
        ]
    )
    return fy, fu


def rate_hessian_weighted(a: float, y: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """sum_s mu[s] * d2f_s/dy2, shape (5, 5, ...); symmetric.

    mu carries the multiplier of each state-rate component, including any
    caller-side scaling.  The control block of the full (y, u) Hessian is
    identically zero, so only the state block is returned.
    """
    w1, w2, w3, x1, x2 = np.asarray(y, dtype=float)
    m1, m2, _, m4, m5 = mu
    H = np.zeros((N_STATES, N_STATES) + np.shape(w1))

    def sym(i, j, v):
        H[i, j] += v
        if i != j:
            H[j, i] += v

    sym(1, 2, a * m1)
    sym(0, 2, -a * m2)
    sym(3, 3, m4 * w1 - m5 * w2)
    sym(3, 4, m4 * w2 + m5 * w1)
    sym(4, 4, -m4 * w1 + m5 * w2)
    sym(0, 3, m4 * x1 + m5 * x2)
    sym(0, 4, -m4 * x2 + m5 * x1)
    sym(1, 3, m4 * x2 - m5 * x1)
    sym(1, 4, m4 * x1 + m5 * x2)
    sym(2, 3, -m5)
    sym(2, 4, m4)
    return H


def state_derivative(model: SpacecraftModel, y: State, u: Control) -> State:
    """The five state rates of the plant at (y, u).

    In two-torque mode u3 must be zero.
    """
    if model.torque_mode is TorqueMode.TWO_TORQUE and u.u3 != 0.0:
        raise DomainError("u3 must be zero in two-torque mode")
    return State.from_array(rates(model.a, y.to_array(), u.to_array()))


def dynamics_jacobians(
    model: SpacecraftModel, y: State, u: Control
) -> tuple[np.ndarray, np.ndarray]:
    """Exact partials (df/dy 5x5, df/du 5x3) of state_derivative."""
    y.to_array()  # finiteness enforced by State
    u.to_array()
    fy, fu = rate_jacobians(model.a, y.to_array())
    return fy, fu


def direction_cosines_to_x(sigma: float, beta: float, gamma: float) -> tuple[float, float]:
    """Map direction cosines of the inertial axis to the (x1, x2) chart.

    Requires a unit-norm triple; the chart is singular at gamma = -1
    (axis anti-aligned), which is rejected.
    """
    norm = sigma**2 + beta**2 + gamma**2
    if abs(norm - 1.0) > 1e-9:
        raise DomainError(f"direction cosines must be unit norm, |.|^2 = {norm}")
    if gamma <= -1.0 + 1e-12:
        raise DomainError("chart singular at gamma = -1")
    return beta / (1.0 + gamma), sigma / (1.0 + gamma)


def x_to_direction_cosines(x1: float, x2: float) -> tuple[float, float, float]:
    """Algebraic inverse of direction_cosines_to_x."""
    gamma = (1.0 - x1**2 - x2**2) / (1.0 + x1**2 + x2**2)
    return x2 * (1.0 + gamma), x1 * (1.0 + gamma), gamma


_BUILTINS: dict[str, dict] = {
    "RTR": dict(
        a=0.5,
        mode=TorqueMode.THREE_TORQUE,
        initial=(0.0, 0.0, -0.5, 1.5, -0.5),
        terminal=(0.0, 0.0, -0.5, 0.0, 0.0),
        description="rest-to-rest, spinning; all three controls bang-bang",
    ),
    "NRTR": dict(
        a=0.5,
        mode=TorqueMode.THREE_TORQUE,
        initial=(-0.45, -1.1, -0.5, 1.5, -0.5),
        terminal=(0.0, 0.0, -0.5, 0.0, 0.0),
        description="non-rest-to-rest, spinning; all three controls bang-bang",
    ),
    "NRTR_NONSPIN": dict(
        a=0.5,
        mode=TorqueMode.TWO_TORQUE,
        initial=(-0.45, -1.1, 0.0, 0.1, -0.1),
        terminal=(0.0, 0.0, 0.0, 0.0, 0.0),
        description="non-rest-to-rest, nonspinning; u1 ends on a finite-order singular arc",
    ),
    "RTNR_INERTIAL": dict(
        a=0.0,
        mode=TorqueMode.TWO_TORQUE,
        initial=(0.0, 0.0, -0.3, 0.0, 0.0),
        terminal=(1.0, 2.0, -0.3, FREE, FREE),
        description="rest-to-non-rest, inertially symmetric; u1 is singular of infinite order",
    ),
}

MANEUVER_NAMES = tuple(_BUILTINS)


def builtin_maneuver(
    name: str,
    u_min: float = -1.0,
    u_max: float = 1.0,
    torque_mode: TorqueMode | None = None,
) -> Maneuver:
    """One of the four built-in maneuvers, optionally with overridden bounds/mode."""
    try:
        spec = _BUILTINS[name]
    except KeyError:
        raise DomainError(f"unknown maneuver {name!r}; choose from {MANEUVER_NAMES}") from None
    mode = torque_mode if torque_mode is not None else spec["mode"]
    model = SpacecraftModel(a=spec["a"], u_min=u_min, u_max=u_max, torque_mode=mode)
    bc = BoundaryConditions(initial=State(*spec["initial"]), terminal=tuple(spec["terminal"]))
    return Maneuver(name=name, model=model, bc=bc, description=spec["description"])
