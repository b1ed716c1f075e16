"""Sampled trajectory container shared by the direct and indirect solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class TrajectoryPoint:
    """One time sample: state, control, and (when available) costate data."""

    t: float
    state: np.ndarray
    control: np.ndarray
    costate: np.ndarray | None = None

    @property
    def switching(self) -> np.ndarray | None:
        return None if self.costate is None else self.costate[:3]


@dataclass
class Trajectory:
    """Time-stamped samples of state, control, costate plus switch metadata.

    `t` is strictly increasing with t[0] = 0 and t[-1] = t_f.  Arrays are
    shaped (5, N) / (3, N) / (5, N).  `dense` optionally evaluates
    (state, control, costate) at arbitrary times using an interpolant that
    matches the producing solver's representation.
    """

    t: np.ndarray
    state: np.ndarray
    control: np.ndarray
    costate: np.ndarray | None = None
    switch_times: list[float] = field(default_factory=list)
    switch_controls: list[int] = field(default_factory=list)  # 0-based control index per switch
    dense: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray | None]] | None = None

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=float)
        if np.any(np.diff(self.t) < 0):
            raise ValueError("trajectory times must be non-decreasing")

    @property
    def t_f(self) -> float:
        return float(self.t[-1])

    @property
    def n_samples(self) -> int:
        return len(self.t)

    @property
    def switching(self) -> np.ndarray | None:
        """Switching-function samples g_j = lam_j, j = 1..3."""
        return None if self.costate is None else self.costate[:3]

    def point(self, k: int) -> TrajectoryPoint:
        return TrajectoryPoint(
            t=float(self.t[k]),
            state=self.state[:, k].copy(),
            control=self.control[:, k].copy(),
            costate=None if self.costate is None else self.costate[:, k].copy(),
        )

    def at(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
        """Evaluate at arbitrary times via `dense`, or linear interpolation."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self.dense is not None:
            return self.dense(times)
        y = np.stack([np.interp(times, self.t, row) for row in self.state])
        u = np.stack([np.interp(times, self.t, row) for row in self.control])
        lam = None
        if self.costate is not None:
            lam = np.stack([np.interp(times, self.t, row) for row in self.costate])
        return y, u, lam
