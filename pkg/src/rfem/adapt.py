"""Recovery-type error estimation, Doerfler marking and the adaptive loop."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import PenaltyConfig, PenaltyScaling, discretize
from .mesh import TriMesh, bisect
from .norms import elementwise_squared, singular_elements
from .quadrature import DEGREE2, DEGREE5
from .recovery import apply_recovery, averaging_matrix, recover_laplacian
from .solve import SolverConfig, SolverError, solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdaptConfig:
    theta: float = 0.2
    max_dof: int = 50_000
    max_levels: int = 200

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")


@dataclass
class LevelRecord:
    level: int
    dof: int
    eta: float
    exact_laplacian_error: float | None
    marked: int
    marked_centroids: np.ndarray = field(repr=False, default_factory=lambda: np.zeros((0, 2)))
    # marked plus closure: every element of this level that was bisected
    refined_centroids: np.ndarray = field(repr=False, default_factory=lambda: np.zeros((0, 2)))


@dataclass
class AdaptHistory:
    levels: list[LevelRecord] = field(default_factory=list)
    mesh: TriMesh | None = field(default=None, repr=False)
    solution: np.ndarray | None = field(default=None, repr=False)

    CSV_COLUMNS = ("level", "dof", "eta", "exact_laplacian_error", "marked")

    def rows(self) -> list[dict]:
        out = []
        for rec in self.levels:
            err = rec.exact_laplacian_error
            out.append(
                {
                    "level": rec.level,
                    "dof": rec.dof,
                    "eta": f"{rec.eta:.6e}",
                    "exact_laplacian_error": "" if err is None else f"{err:.6e}",
                    "marked": rec.marked,
                }
            )
        return out


def estimate(mesh: TriMesh, a, b, u, weights="simple") -> np.ndarray:
    """Elementwise ``eta_t = || G(q) - q ||_{L2(t)}`` with ``q`` the recovered
    Laplacian of ``u``."""
    q = recover_laplacian(mesh, a, b, u)
    return linear_minus_constant(mesh, apply_recovery(averaging_matrix(mesh, weights), q), q)


def linear_minus_constant(mesh: TriMesh, nodal, const) -> np.ndarray:
    """Per-element L2 norm of (linear field with ``nodal`` values) - ``const``;
    exact, since the integrand is quadratic."""
    local = np.asarray(nodal)[mesh.triangles] @ DEGREE2.points.T - np.asarray(const)[:, None]
    return np.sqrt(mesh.areas * (local**2 @ DEGREE2.weights))


def mark(etas, theta: float) -> np.ndarray:
    """Doerfler marking: the smallest set (greedy by decreasing ``eta^2``, ties
    by lower index) whose squared estimators reach ``theta`` of the total."""
    etas = np.asarray(etas, dtype=float)
    if np.any(etas < 0):
        raise ValueError("estimator values must be non-negative")
    sq = etas**2
    total = sq.sum()
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.lexsort((np.arange(len(sq)), -sq))
    cum = np.cumsum(sq[order])
    # guard against the cumulative sum falling a rounding error short
    k = int(np.searchsorted(cum, theta * total * (1 - 1e-14), side="left")) + 1
    return np.sort(order[: min(k, len(sq))])


def laplacian_error(mesh: TriMesh, a, b, u, problem, corner_levels: int = 1) -> float:
    """``|| Lap u - div G grad u_h ||`` with corner-refined quadrature."""
    exact = problem.require_exact()
    rlap = recover_laplacian(mesh, a, b, u)
    refine = None
    if problem.singular_point is not None:
        refine = singular_elements(mesh, problem.singular_point)
    sq = elementwise_squared(
        mesh, DEGREE5, lambda x, y, bary, el: exact.lap(x, y) - rlap[el, None], refine, corner_levels
    )
    return math.sqrt(sq.sum())


def adaptive_loop(
    problem,
    mesh: TriMesh,
    cfg: AdaptConfig = AdaptConfig(),
    penalty: PenaltyConfig = PenaltyConfig(scaling=PenaltyScaling.EDGE),
    weights="simple",
    solver: SolverConfig = SolverConfig(),
    snapshot: Callable | None = None,
) -> AdaptHistory:
    """Solve, estimate, mark, refine until ``max_dof``/``max_levels`` or a zero
    estimator.

    ``snapshot(level, mesh, u, etas)`` is called after every solve, if given.
    A solver failure is re-raised with the levels completed so far attached
    as ``partial_history``.
    """
    history = AdaptHistory()
    for level in range(cfg.max_levels):
        disc = discretize(mesh, problem, weights, penalty)
        try:
            u = solve(disc.system(problem), solver)
        except SolverError as exc:
            err = SolverError(f"solve failed at level {level} (dof {mesh.num_nodes}): {exc}")
            err.partial_history = history
            raise err from exc
        etas = estimate(mesh, disc.a, disc.b, u, weights)
        eta = float(np.sqrt(np.sum(etas**2)))
        err = None
        if problem.exact is not None:
            err = laplacian_error(mesh, disc.a, disc.b, u, problem)
        if snapshot is not None:
            snapshot(level, mesh, u, etas)
        history.mesh, history.solution = mesh, u

        done = mesh.num_nodes >= cfg.max_dof or level + 1 >= cfg.max_levels or eta == 0
        marked = np.zeros(0, dtype=np.int64) if done else mark(etas, cfg.theta)
        record = LevelRecord(level, mesh.num_nodes, eta, err, len(marked), mesh.centroids[marked])
        history.levels.append(record)
        logger.info("level %d dof %d eta %.4e err %s marked %d",
                    level, mesh.num_nodes, eta, err, len(marked))
        if done or len(marked) == 0:
            break
        fine = bisect(mesh, marked)
        split = np.bincount(fine.parent, minlength=mesh.num_elements) >= 2
        record.refined_centroids = mesh.centroids[split]
        mesh = fine
    return history
