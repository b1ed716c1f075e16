"""Minimum-time reorientation of an axisymmetric rigid spacecraft.

Direct multi-domain LGR collocation with automatic bang/singular structure
detection and singular-arc regularization, verified against the minimum
principle and an independent indirect-shooting solver.
"""

from .dynamics import (
    BoundaryConditions,
    Control,
    Maneuver,
    MANEUVER_NAMES,
    SpacecraftModel,
    State,
    TorqueMode,
    builtin_maneuver,
)
from .pmp import Costate, PmpResiduals
from .report import RegularizationRecord, SolveReport
from .structure import BbsocOptions, BbsocResult, ControlStructure, bbsoc_solve
from .trajectory import Trajectory, TrajectoryPoint

__version__ = "0.1.0"

__all__ = [
    "BbsocOptions",
    "BbsocResult",
    "BoundaryConditions",
    "Control",
    "ControlStructure",
    "Costate",
    "MANEUVER_NAMES",
    "Maneuver",
    "PmpResiduals",
    "RegularizationRecord",
    "SolveReport",
    "SpacecraftModel",
    "State",
    "TorqueMode",
    "Trajectory",
    "TrajectoryPoint",
    "bbsoc_solve",
    "builtin_maneuver",
    "__version__",
]
