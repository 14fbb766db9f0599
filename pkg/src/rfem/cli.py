"""Command-line driver: ``rfem solve | study | adapt``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapt import AdaptConfig, AdaptHistory, adaptive_loop, estimate
from .assembly import PenaltyConfig, PenaltyScaling, discretize
from .mesh import MeshError, TriMesh, import_mesh, regular_grid, triangulate_polygon, write_atomic
from .norms import CSV_COLUMNS, error_norms, report_rows
from .problems import PROBLEMS, UNIT_SQUARE, MissingExactSolution, ProblemSpec, get_problem
from .recovery import RecoveryWeights, recover_laplacian
from .solve import SolverConfig, SolverError, SolverMethod
from .solve import solve as solve_system
from .vtk import write_vtk

logger = logging.getLogger("rfem")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

DEFAULT_STUDY_LEVELS = (20, 40, 80, 160)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MeshSource:
    """``regular[:n]``, ``import:<path>[,<path>...]`` or ``polygon:<h>``."""

    kind: str
    values: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "MeshSource":
        kind, _, rest = text.partition(":")
        if kind == "regular":
            return cls(kind, tuple(int(v) for v in rest.split(",")) if rest else ())
        if kind == "import":
            if not rest:
                raise ConfigError("import: needs at least one mesh file")
            return cls(kind, tuple(rest.split(",")))
        if kind == "polygon":
            h = float(rest) if rest else 0.5
            if not h > 0:
                raise ConfigError("polygon:<h> needs h > 0")
            return cls(kind, (h,))
        raise ConfigError(f"unknown mesh source {text!r}; use regular:<n>, import:<path> or polygon:<h>")


@dataclass(frozen=True)
class RunConfig:
    command: str
    problem: str
    mesh: MeshSource
    weights: RecoveryWeights = RecoveryWeights.SIMPLE
    sigma: float = 1.0
    penalty_scaling: PenaltyScaling = PenaltyScaling.GLOBAL
    theta: float | None = None
    max_dof: int = 50_000
    levels: tuple = ()
    out: Path = Path("out")
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if self.theta is not None and self.command != "adapt":
            raise ConfigError("--theta only applies to adapt")
        if self.command == "adapt":
            AdaptConfig(theta=0.2 if self.theta is None else self.theta, max_dof=self.max_dof)
        if not self.sigma > 0:
            raise ConfigError("--sigma must be positive")
        if self.max_dof < 1:
            raise ConfigError("--max-dof must be positive")

    @property
    def penalty(self) -> PenaltyConfig:
        return PenaltyConfig(self.sigma, self.penalty_scaling)


# ------------------------------------------------------------------ helpers
def _write_csv(path: Path, columns, rows) -> None:
    for row in rows:
        for key, val in row.items():
            if isinstance(val, float) and not math.isfinite(val):
                raise ValueError(f"non-finite value in column {key}")
            if isinstance(val, str) and val.lower() in ("nan", "inf", "-inf"):
                raise ValueError(f"non-finite value in column {key}")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    write_atomic(path, buf.getvalue())


def _check_regular_domain(problem: ProblemSpec):
    if problem.domain != UNIT_SQUARE:
        raise ConfigError(f"regular meshes cover the unit square only; {problem.name} needs polygon:<h>")


def _meshes(cfg: RunConfig, problem: ProblemSpec) -> list[tuple[TriMesh, float | None]]:
    """Mesh sequence with the mesh size used for orders (None: dof-based)."""
    src = cfg.mesh
    study = cfg.command == "study"
    levels = cfg.levels if study else ()  # adapt uses --levels for snapshots
    if src.kind == "regular":
        _check_regular_domain(problem)
        ns = src.values or levels or (DEFAULT_STUDY_LEVELS if study else (20,))
        return [(regular_grid(int(n)), 1.0 / int(n)) for n in ns]
    if src.kind == "import":
        return [(import_mesh(p), None) for p in src.values]
    h = src.values[0]
    factors = levels or (1,)
    return [(m := triangulate_polygon(problem.domain, h / k), m.h_max) for k in factors]


def _configure_logging(verbose: int):
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


# ----------------------------------------------------------------- commands
def run_solve(cfg: RunConfig) -> int:
    problem = get_problem(cfg.problem)
    meshes = _meshes(cfg, problem)
    if len(meshes) != 1:
        raise ConfigError("solve takes exactly one mesh")
    mesh = meshes[0][0]
    disc = discretize(mesh, problem, cfg.weights, cfg.penalty)
    u = solve_system(disc.system(problem), cfg.solver)
    etas = estimate(mesh, disc.a, disc.b, u, cfg.weights)
    write_vtk(
        mesh,
        cfg.out / "solution.vtk",
        point_data={"u": u},
        cell_data={"recovered_laplacian": recover_laplacian(mesh, disc.a, disc.b, u), "eta": etas},
    )
    print(f"dof {mesh.num_nodes}  eta {math.sqrt(np.sum(etas ** 2)):.6e}")
    if problem.exact is not None:
        rep = error_norms(mesh, u, disc.a, disc.b, problem)
        _write_csv(cfg.out / "errors.csv", CSV_COLUMNS, report_rows([rep]))
        print("  ".join(f"{k} {v:.6e}" for k, v in zip(CSV_COLUMNS[1::2], rep.errors)))
    return EXIT_OK


def run_study(cfg: RunConfig) -> int:
    problem = get_problem(cfg.problem)
    problem.require_exact()
    meshes = _meshes(cfg, problem)
    if len(meshes) < 2:
        raise ConfigError("a study needs at least two meshes")
    meshes.sort(key=lambda mh: mh[0].num_nodes)
    reports = []
    for mesh, _ in meshes:
        disc = discretize(mesh, problem, cfg.weights, cfg.penalty)
        u = solve_system(disc.system(problem), cfg.solver)
        reports.append(error_norms(mesh, u, disc.a, disc.b, problem))
        logger.info("dof %d errors %s", mesh.num_nodes, reports[-1].errors)
    hs = None if any(h is None for _, h in meshes) else [h for _, h in meshes]
    rows = report_rows(reports, hs)
    _write_csv(cfg.out / "study.csv", CSV_COLUMNS, rows)
    for row in rows:
        print(",".join(str(row[c]) for c in CSV_COLUMNS))
    return EXIT_OK


def run_adapt(cfg: RunConfig) -> int:
    problem = get_problem(cfg.problem)
    meshes = _meshes(cfg, problem)
    if len(meshes) != 1:
        raise ConfigError("adapt starts from exactly one mesh")
    snapshot_levels = set(int(v) for v in cfg.levels)
    theta = 0.2 if cfg.theta is None else cfg.theta

    def snapshot(level, mesh, u, etas):
        if level in snapshot_levels:
            write_vtk(mesh, cfg.out / f"level_{level:03d}.vtk", {"u": u}, {"eta": etas})

    history_path = cfg.out / "history.csv"
    try:
        hist = adaptive_loop(
            problem, meshes[0][0], AdaptConfig(theta, cfg.max_dof), cfg.penalty, cfg.weights,
            cfg.solver, snapshot,
        )
    except SolverError as exc:
        partial = getattr(exc, "partial_history", None) or AdaptHistory()
        _write_csv(history_path, AdaptHistory.CSV_COLUMNS, partial.rows())
        raise
    _write_csv(history_path, AdaptHistory.CSV_COLUMNS, hist.rows())
    write_vtk(hist.mesh, cfg.out / "final.vtk", {"u": hist.solution})
    last = hist.levels[-1]
    print(f"levels {len(hist.levels)}  dof {last.dof}  eta {last.eta:.6e}")
    return EXIT_OK


COMMANDS = {"solve": run_solve, "study": run_study, "adapt": run_adapt}


# ------------------------------------------------------------------- parser
def _list(text: str) -> tuple:
    return tuple(float(v) if "." in v else int(v) for v in text.split(",") if v)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rfem", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    defaults = {"solve": "regular:20", "study": "regular", "adapt": "polygon:0.5"}
    for name, help_text in [
        ("solve", "solve once and write solution.vtk (and errors.csv if exact)"),
        ("study", "uniform refinement study written to study.csv"),
        ("adapt", "adaptive loop written to history.csv with VTK snapshots"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
        p.add_argument("--mesh", default=defaults[name],
                       help="regular:<n> | import:<path>[,<path>] | polygon:<h>")
        p.add_argument("--weights", choices=[w.value for w in RecoveryWeights], default="simple")
        p.add_argument("--sigma", type=float, default=1.0)
        p.add_argument("--penalty-scaling", choices=[s.value for s in PenaltyScaling],
                       default="edge" if name == "adapt" else "global")
        p.add_argument("--levels", type=_list, default=(),
                       help="study: grid sizes (regular) or h divisors (polygon); "
                            "adapt: levels to snapshot")
        p.add_argument("--out", type=Path, default=Path("out"))
        p.add_argument("--solver", choices=[m.value for m in SolverMethod], default="sparse")
        p.add_argument("--tol", type=float, default=1e-10)
        if name == "adapt":
            p.add_argument("--theta", type=float, default=0.2)
            p.add_argument("--max-dof", type=int, default=50_000)
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        problem=args.problem,
        mesh=MeshSource.parse(args.mesh),
        weights=RecoveryWeights(args.weights),
        sigma=args.sigma,
        penalty_scaling=PenaltyScaling(args.penalty_scaling),
        theta=getattr(args, "theta", None),
        max_dof=getattr(args, "max_dof", 50_000),
        levels=args.levels,
        out=args.out,
        solver=SolverConfig(args.solver, rel_tol=args.tol),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except (SolverError, MeshError, OSError) as exc:  # MeshError is a ValueError: keep first
        print(f"rfem: failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (ConfigError, MissingExactSolution, ValueError) as exc:
        print(f"rfem: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
