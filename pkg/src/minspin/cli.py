"""Command-line front end: run maneuvers, verify, export results.

Exit codes: 0 success, 1 configuration error, 2 solver failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import oracle
from .dynamics import (
    MANEUVER_NAMES,
    BoundaryConditions,
    DomainError,
    Maneuver,
    SpacecraftModel,
    State,
    TorqueMode,
    builtin_maneuver,
)
from .pmp import hamiltonian_array
from .report import SolveReport
from .structure import (
    BbsocOptions,
    DetectionOptions,
    RegularizationSchedule,
    StageFailure,
    StructureError,
    bbsoc_solve,
)
from .trajectory import Trajectory

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_VERIFY = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything one run needs; defaults mirror the benchmark setup."""

    maneuver: str = "RTR"
    torque_mode: str = ""  # "", "two", "three": empty keeps the built-in mode
    u_min: float = -1.0
    u_max: float = 1.0
    mesh_intervals: int = 20
    mesh_points: int = 3
    eps_mesh: float = 1e-5
    eps_nlp: float = 1e-7
    reg_epsilon0: float = 1e-1
    reg_reduction: float = 1e2
    reg_delta_tol: float = 1e-8
    reg_max_p: int = 6
    reg_functional: str = "control_energy"
    t_guess: float = 0.0  # 0 means the built-in multi-guess strategy
    verify: bool = False
    out: str = "out"
    samples: int = 1000
    # inline maneuver definition (used when maneuver == "custom")
    a: float = 0.5
    initial: str = ""  # five comma-separated values
    terminal: str = ""  # five comma-separated values, "free" allowed

    def __post_init__(self) -> None:
        if self.mesh_points < 3 or self.mesh_points > 12:
            raise ConfigError("mesh_points must lie in [3, 12]")
        if self.eps_mesh <= 0 or self.eps_nlp <= 0 or self.reg_delta_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.samples < 2:
            raise ConfigError("need at least two output samples")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = value
        return cls(**kwargs)

    def build_maneuver(self) -> Maneuver:
        mode = None
        if self.torque_mode:
            try:
                mode = TorqueMode(self.torque_mode)
            except ValueError:
                raise ConfigError(
                    f"torque_mode must be 'two' or 'three', got {self.torque_mode!r}"
                ) from None
        if self.maneuver != "custom":
            return builtin_maneuver(
                self.maneuver, u_min=self.u_min, u_max=self.u_max, torque_mode=mode
            )
        if not self.initial or not self.terminal:
            raise ConfigError("custom maneuvers need 'initial' and 'terminal'")
        init_vals = [float(v) for v in self.initial.split(",")]
        term_vals = [
            None if v.strip().lower() == "free" else float(v)
            for v in self.terminal.split(",")
        ]
        if len(init_vals) != 5 or len(term_vals) != 5:
            raise ConfigError("initial and terminal need five entries each")
        model = SpacecraftModel(
            a=self.a,
            u_min=self.u_min,
            u_max=self.u_max,
            torque_mode=mode or TorqueMode.THREE_TORQUE,
        )
        bc = BoundaryConditions(initial=State(*init_vals), terminal=tuple(term_vals))
        return Maneuver(name="custom", model=model, bc=bc)

    def build_options(self) -> BbsocOptions:
        return BbsocOptions(
            mesh_intervals=self.mesh_intervals,
            mesh_points=self.mesh_points,
            eps_mesh=self.eps_mesh,
            eps_nlp=self.eps_nlp,
            t_guess=self.t_guess if self.t_guess > 0 else None,
            schedule=RegularizationSchedule(
                epsilon0=self.reg_epsilon0,
                reduction=self.reg_reduction,
                delta_tol=self.reg_delta_tol,
                max_p=self.reg_max_p,
                functional=self.reg_functional,
            ),
        )


def parse_config_file(path: str | Path) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    data: dict = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        data[key] = _coerce(value)
    return data


def _coerce(value: str):
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


CSV_HEADER = (
    "t,omega1,omega2,omega3,x1,x2,u1,u2,u3,"
    "lam1,lam2,lam3,lam4,lam5,g1,g2,g3,H"
)


def export_trajectory(
    trajectory: Trajectory, path: str | Path, a: float, samples: int = 1000
) -> None:
    """Dense CSV: uniform samples plus every switch time, round-trip floats."""
    t_grid = np.linspace(0.0, trajectory.t_f, samples)
    t_all = np.unique(np.concatenate([t_grid, np.asarray(trajectory.switch_times)]))
    ys, us, lams = trajectory.at(t_all)
    if lams is None:
        lams = np.full((5, len(t_all)), np.nan)
    H = hamiltonian_array(a, ys, us, lams)
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for i, tv in enumerate(t_all):
            row = [tv, *ys[:, i], *us[:, i], *lams[:, i], *lams[:3, i], H[i]]
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _export_plot_series(trajectory: Trajectory, plot_dir: Path, a: float, samples: int) -> None:
    plot_dir.mkdir(parents=True, exist_ok=True)
    t_all = np.unique(
        np.concatenate(
            [np.linspace(0.0, trajectory.t_f, samples), np.asarray(trajectory.switch_times)]
        )
    )
    ys, us, lams = trajectory.at(t_all)

    def write(name: str, header: list[str], cols: list[np.ndarray]) -> None:
        with open(plot_dir / name, "w") as fh:
            fh.write(",".join(header) + "\n")
            for i in range(len(t_all)):
                fh.write(",".join(repr(float(c[i])) for c in cols) + "\n")

    write("controls.csv", ["t", "u1", "u2", "u3"], [t_all, *us])
    if lams is not None:
        write("switching.csv", ["t", "g1", "g2", "g3"], [t_all, *lams[:3]])
    write("omega.csv", ["t", "omega1", "omega2", "omega3"], [t_all, *ys[:3]])
    write("xplane.csv", ["x1", "x2"], [ys[3], ys[4]])


def _verify(result, config: RunConfig) -> tuple[dict, bool]:
    """Replay integration always; indirect shooting when well-posed."""
    out: dict = {}
    ok = True
    traj = result.trajectory
    man = result.problem.maneuver

    def policy(t):
        _, u, _ = traj.at(np.array([t]))
        return u[:, 0]

    replay = oracle.integrate(
        man.model, man.bc.initial.to_array(), policy, (0.0, traj.t_f)
    )
    term_err = 0.0
    for i, target in enumerate(man.bc.terminal):
        if target is not None:
            term_err = max(term_err, abs(float(replay.state[i, -1]) - target))
    out["replay_terminal_error"] = term_err
    if term_err > 10 * config.eps_mesh:
        ok = False

    if man.model.a != 0.0:
        try:
            spec = oracle.ShootingSpec(man, result.structure)
            guess = oracle.seed_from_direct(spec, traj)
            straj, residual = oracle.shoot(spec, guess)
            report = oracle.cross_validate(traj, straj)
            out["shooting_residual"] = residual
            out["t_f_delta"] = report.t_f_delta
            out["max_state_error"] = report.max_state_error
            if residual > 1e-9 or report.max_state_error > 1e-4:
                ok = False
        except (oracle.ShootingError, oracle.IntegrationError) as exc:
            out["shooting_error"] = str(exc)
            ok = False
    else:
        out["shooting_skipped"] = "infinite-order singular structure is not unique"
    return out, ok


def run(config: RunConfig, echo=print) -> int:
    """Execute one configured run; returns the process exit code."""
    try:
        maneuver = config.build_maneuver()
        options = config.build_options()
    except (ConfigError, DomainError) as exc:
        echo(f"configuration error: {exc}")
        return EXIT_CONFIG

    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        result = bbsoc_solve(maneuver, options)
    except (StageFailure, StructureError) as exc:
        echo(f"solver failure: {exc}")
        from .report import RegularizationRecord

        report = SolveReport(
            maneuver=maneuver.name,
            t_f=float("nan"),
            switch_times=[],
            switch_controls=[],
            regularization=RegularizationRecord(0.0, 0.0, 0),
            pmp=None,
            mesh_history=[],
            nlp_iterations=0,
            wall_time=0.0,
            failure=str(exc),
            config=config.to_dict(),
        )
        try:
            (out_dir / "report.json").write_text(
                json.dumps(report.to_dict(), indent=2, default=lambda o: None)
            )
        except OSError:
            pass
        return EXIT_SOLVER

    report = result.report
    report.config = config.to_dict()

    code = EXIT_OK
    if config.verify:
        verification, ok = _verify(result, config)
        report.verification = verification
        if not ok:
            code = EXIT_VERIFY

    export_trajectory(
        result.trajectory, out_dir / "trajectory.csv", maneuver.model.a, config.samples
    )
    _export_plot_series(result.trajectory, out_dir / "plot", maneuver.model.a, config.samples)
    (out_dir / "report.json").write_text(report.to_json())
    (out_dir / "report.txt").write_text(report.to_text())
    echo(report.to_text())
    return code


def list_maneuvers(machine_readable: bool = False) -> str:
    """The four built-in maneuvers with their boundary blocks."""
    if machine_readable:
        entries = []
        for name in MANEUVER_NAMES:
            man = builtin_maneuver(name)
            entries.append(
                {
                    "name": name,
                    "a": man.model.a,
                    "torque_mode": man.model.torque_mode.value,
                    "initial": list(man.bc.initial.to_array()),
                    "terminal": [v for v in man.bc.terminal],
                    "description": man.description,
                }
            )
        return json.dumps(entries, indent=2)
    lines = []
    for name in MANEUVER_NAMES:
        man = builtin_maneuver(name)
        y0 = man.bc.initial.to_array()
        term = ", ".join("free" if v is None else f"{v:g}" for v in man.bc.terminal)
        lines.append(f"{name}: {man.description}")
        lines.append(f"    a = {man.model.a:g}, torque mode = {man.model.torque_mode.value}")
        lines.append(
            f"    initial  omega = ({y0[0]:g}, {y0[1]:g}, {y0[2]:g}), x = ({y0[3]:g}, {y0[4]:g})"
        )
        lines.append(f"    terminal ({term})")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="minspin",
        description="Minimum-time axisymmetric spacecraft reorientation solver",
    )
    p.add_argument("--maneuver", help="built-in maneuver name(s), comma separated")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--torque-mode", choices=["two", "three"], dest="torque_mode")
    p.add_argument("--umax", type=float, dest="u_max")
    p.add_argument("--umin", type=float, dest="u_min")
    p.add_argument("--mesh-intervals", type=int, dest="mesh_intervals")
    p.add_argument("--mesh-points", type=int, dest="mesh_points")
    p.add_argument("--eps-mesh", type=float, dest="eps_mesh")
    p.add_argument("--eps-nlp", type=float, dest="eps_nlp")
    p.add_argument("--t-guess", type=float, dest="t_guess")
    p.add_argument("--samples", type=int, dest="samples")
    p.add_argument("--verify", action="store_true", default=None)
    p.add_argument("--out", dest="out", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel maneuver runs")
    p.add_argument("--list", action="store_true", help="list built-in maneuvers")
    p.add_argument(
        "--machine-readable", action="store_true", help="JSON output for --list"
    )
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.list:
        print(list_maneuvers(machine_readable=args.machine_readable))
        return EXIT_OK

    data: dict = {}
    try:
        if args.config:
            data.update(parse_config_file(args.config))
        for key in (
            "maneuver",
            "torque_mode",
            "u_max",
            "u_min",
            "mesh_intervals",
            "mesh_points",
            "eps_mesh",
            "eps_nlp",
            "t_guess",
            "samples",
            "verify",
            "out",
        ):
            value = getattr(args, key, None)
            if value is not None:
                data[key] = value
        if "maneuver" not in data:
            raise ConfigError("--maneuver or a config file with one is required")
        names = [n.strip() for n in str(data["maneuver"]).split(",") if n.strip()]
        configs = []
        for name in names:
            entry = dict(data)
            entry["maneuver"] = name
            if len(names) > 1:
                entry["out"] = str(Path(data.get("out", "out")) / name)
            configs.append(RunConfig.from_dict(entry))
    except (ConfigError, OSError, TypeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if len(configs) == 1:
        return run(configs[0])
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        codes = list(pool.map(run, configs))
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
