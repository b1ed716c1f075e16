"""Solve-report containers shared by the pipeline and the CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .pmp import PmpResiduals


@dataclass(frozen=True)
class RegularizationRecord:
    """Outcome of the singular-arc regularization loop.

    epsilon: final regularization parameter (0 when no singular arc).
    delta: value of the regularization term at convergence.
    p: number of regularization iterations (0 when no singular arc).
    """

    epsilon: float
    delta: float
    p: int

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "delta": self.delta, "p": self.p}


@dataclass
class SolveReport:
    """Everything a completed (or partially completed) run reports."""

    maneuver: str
    t_f: float
    switch_times: list[float]
    switch_controls: list[int]  # 1-based control index per switch time
    regularization: RegularizationRecord
    pmp: PmpResiduals | None
    mesh_history: list[dict]
    nlp_iterations: int
    wall_time: float
    stages: list[str] = field(default_factory=list)
    failure: str | None = None
    config: dict = field(default_factory=dict)
    verification: dict | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "maneuver": self.maneuver,
            "t_f": self.t_f,
            "switch_times": list(self.switch_times),
            "switch_controls": list(self.switch_controls),
            "regularization": self.regularization.to_dict(),
            "pmp_residuals": self.pmp.to_dict() if self.pmp else None,
            "mesh_history": self.mesh_history,
            "nlp_iterations": self.nlp_iterations,
            "wall_time": self.wall_time,
            "stages": self.stages,
            "failure": self.failure,
            "config": self.config,
            "verification": self.verification,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = [f"maneuver: {self.maneuver}"]
        for i, (ts, j) in enumerate(zip(self.switch_times, self.switch_controls), 1):
            lines.append(f"t_s[{i}] = {ts:.6f}   (u{j})")
        lines.append(f"t_f    = {self.t_f:.6f}")
        reg = self.regularization
        if reg.p:
            lines.append(f"delta = {reg.delta:.3e}   epsilon = {reg.epsilon:.1e}   p = {reg.p}")
        if self.pmp is not None:
            lines.append(f"max|H+1|        = {self.pmp.hamiltonian_error:.3e}")
            lines.append(f"transversality  = {self.pmp.transversality_error:.3e}")
        lines.append(f"wall time [s]   = {self.wall_time:.2f}")
        lines.append(f"NLP iterations  = {self.nlp_iterations}")
        if self.failure:
            lines.append(f"FAILED at stage: {self.failure}")
        if self.verification is not None:
            for k, v in self.verification.items():
                lines.append(f"verify {k} = {v}")
        return "\n".join(lines) + "\n"
