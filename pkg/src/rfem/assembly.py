"""Discrete system of the recovery-based scheme.

The bilinear form is

    a_h(u, v) = (div G grad u, div G grad v)
                + pen * int_dOmega (G grad u . n)(G grad v . n) ds

with ``pen = sigma / h^2`` and the load is ``(f, v) + pen * int g2 (G grad v . n)``.
``u = g1`` on the boundary is imposed by symmetric elimination.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .mesh import TriMesh
from .quadrature import DEGREE5, GAUSS2_EDGE, physical_points
from .recovery import gradient_operators, recovered_gradient_matrices


class PenaltyScaling(str, enum.Enum):
    GLOBAL = "global"  # sigma / h_max^2
    EDGE = "edge"  # sigma / h_E^2


@dataclass(frozen=True)
class PenaltyConfig:
    sigma: float = 1.0
    scaling: PenaltyScaling = PenaltyScaling.GLOBAL

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "scaling", PenaltyScaling(self.scaling))

    def edge_factors(self, mesh: TriMesh) -> np.ndarray:
        """Penalty factor of every boundary edge."""
        if self.scaling is PenaltyScaling.GLOBAL:
            return np.full(len(mesh.boundary_edges), self.sigma / mesh.h_max**2)
        return self.sigma / mesh.boundary_lengths**2


@dataclass
class LinearSystem:
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    dirichlet_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    dirichlet_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reduced: bool = False


def gradient_gram_matrices(mesh: TriMesh):
    """``P, Q, S, T`` with entries ``int d_a phi_i d_b phi_j`` for
    ``(a, b) = (x, x), (x, y), (y, x), (y, y)``."""
    gx, gy = gradient_operators(mesh)
    mass = sparse.diags(mesh.areas)
    p = gx.T @ mass @ gx
    q = gx.T @ mass @ gy
    s = gy.T @ mass @ gx
    t = gy.T @ mass @ gy
    return tuple(sparse.csr_matrix(m) for m in (p, q, s, t))


def volume_matrix(a, b, p, q, s, t) -> sparse.csr_matrix:
    """``A^T P A + A^T Q B + B^T S A + B^T T B``."""
    at, bt = a.T, b.T
    k = at @ p @ a + at @ q @ b + bt @ s @ a + bt @ t @ b
    return sparse.csr_matrix(k)


def normal_trace_operator(mesh: TriMesh, a, b) -> sparse.csr_matrix:
    """2K x N operator giving, for every boundary edge, the endpoint values of
    ``G(grad u_h) . n`` (rows ``2e`` and ``2e + 1``)."""
    be = mesh.boundary_edges
    n = mesh.boundary_normals
    k = len(be)
    rows = np.arange(2 * k)
    nodes = be.ravel()
    nx = np.repeat(n[:, 0], 2)
    ny = np.repeat(n[:, 1], 2)
    pick = sparse.csr_matrix((np.ones(2 * k), (rows, nodes)), shape=(2 * k, mesh.num_nodes))
    return sparse.csr_matrix(sparse.diags(nx) @ pick @ a + sparse.diags(ny) @ pick @ b)


def _edge_mass(mesh: TriMesh, factors: np.ndarray) -> sparse.csr_matrix:
    scale = mesh.boundary_lengths * factors / 6.0
    k = len(scale)
    base = 2 * np.arange(k)
    rows = np.stack([base, base, base + 1, base + 1], axis=1).ravel()
    cols = np.stack([base, base + 1, base, base + 1], axis=1).ravel()
    vals = (scale[:, None] * np.array([2.0, 1.0, 1.0, 2.0])).ravel()
    return sparse.csr_matrix((vals, (rows, cols)), shape=(2 * k, 2 * k))


def penalty_matrix(mesh: TriMesh, a, b, cfg: PenaltyConfig) -> sparse.csr_matrix:
    """Boundary penalty term, integrated edge by edge with each edge's normal."""
    if len(mesh.boundary_edges) == 0:
        raise ValueError("mesh has no boundary edges")
    trace = normal_trace_operator(mesh, a, b)
    m = _edge_mass(mesh, cfg.edge_factors(mesh))
    return sparse.csr_matrix(trace.T @ m @ trace)


def load_vector(mesh: TriMesh, problem, a, b, cfg: PenaltyConfig, rule=DEGREE5) -> np.ndarray:
    """``int f phi_i + pen * int g2 (G grad phi_i . n) ds``."""
    pts = physical_points(mesh, rule)
    fvals = np.asarray(problem.f(pts[..., 0], pts[..., 1]), dtype=float)
    fvals = np.broadcast_to(fvals, pts.shape[:2])
    local = mesh.areas[:, None] * (fvals * rule.weights) @ rule.points  # (M, 3)
    rhs = np.bincount(mesh.triangles.ravel(), local.ravel(), minlength=mesh.num_nodes)

    be = mesh.boundary_edges
    p0, p1 = mesh.nodes[be[:, 0]], mesh.nodes[be[:, 1]]
    n = mesh.boundary_normals
    s, w = GAUSS2_EDGE
    xq = p0[:, None, :] * (1 - s)[None, :, None] + p1[:, None, :] * s[None, :, None]
    g = np.asarray(problem.g2(xq[..., 0], xq[..., 1], n[:, 0:1], n[:, 1:2]), dtype=float)
    g = np.broadcast_to(g, xq.shape[:2])
    # int_e g2 * lambda_k ds for the two edge endpoints
    weights = cfg.edge_factors(mesh) * mesh.boundary_lengths
    moments = np.stack([(g * w * (1 - s)).sum(axis=1), (g * w * s).sum(axis=1)], axis=1)
    edge_rhs = (weights[:, None] * moments).ravel()
    if np.any(edge_rhs):
        rhs = rhs + normal_trace_operator(mesh, a, b).T @ edge_rhs
    return rhs


def apply_dirichlet(system: LinearSystem, nodes, values) -> LinearSystem:
    """Symmetric elimination of prescribed nodal values."""
    nodes = np.asarray(nodes, dtype=np.int64)
    values = np.asarray(values, dtype=float) * np.ones(len(nodes))
    k = sparse.csr_matrix(system.matrix)
    n = k.shape[0]
    g = np.zeros(n)
    g[nodes] = values
    free = np.ones(n)
    free[nodes] = 0.0
    rhs = system.rhs - k @ g
    rhs[nodes] = values
    keep = sparse.diags(free)
    reduced = keep @ k @ keep + sparse.diags(1.0 - free)
    reduced = sparse.csr_matrix(reduced)
    reduced.eliminate_zeros()
    return LinearSystem(reduced, rhs, nodes, values, reduced=True)


@dataclass
class Discretization:
    """Everything assembled for one mesh: recovery matrices and system."""

    mesh: TriMesh
    a: sparse.csr_matrix
    b: sparse.csr_matrix
    volume: sparse.csr_matrix
    penalty: sparse.csr_matrix
    rhs: np.ndarray

    @property
    def matrix(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(self.volume + self.penalty)

    def energy(self, u) -> float:
        """``J(u) = a_h(u, u) / 2 - L(u)``."""
        u = np.asarray(u, dtype=float)
        return float(0.5 * u @ (self.matrix @ u) - self.rhs @ u)

    def system(self, problem) -> LinearSystem:
        full = LinearSystem(self.matrix, self.rhs.copy())
        bnd = np.flatnonzero(self.mesh.boundary_node_mask)
        xy = self.mesh.nodes[bnd]
        values = np.asarray(problem.g1(xy[:, 0], xy[:, 1]), dtype=float) * np.ones(len(bnd))
        return apply_dirichlet(full, bnd, values)


def discretize(mesh: TriMesh, problem, weights="simple", penalty=PenaltyConfig()) -> Discretization:
    a, b = recovered_gradient_matrices(mesh, weights)
    p, q, s, t = gradient_gram_matrices(mesh)
    return Discretization(
        mesh,
        a,
        b,
        volume_matrix(a, b, p, q, s, t),
        penalty_matrix(mesh, a, b, penalty),
        load_vector(mesh, problem, a, b, penalty),
    )
