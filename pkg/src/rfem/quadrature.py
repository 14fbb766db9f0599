"""Quadrature rules on triangles (barycentric) and on edges."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric quadrature rule; weights sum to 1 and are scaled by the
    element area when applied."""

    points: np.ndarray  # (q, 3) barycentric coordinates
    weights: np.ndarray  # (q,)
    degree: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.shape != (len(w), 3):
            raise ValueError("points must be (q, 3) barycentric coordinates")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-15 * len(w):
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def subdivided(self, levels: int = 1) -> "QuadratureRule":
        """Composite rule on the 4**levels congruent sub-triangles."""
        rule = self
        for _ in range(levels):
            corners = np.eye(3)
            mids = 0.5 * (corners[[1, 2, 0]] + corners[[2, 0, 1]])  # opposite 0,1,2
            subs = [
                (corners[0], mids[2], mids[1]),
                (mids[2], corners[1], mids[0]),
                (mids[1], mids[0], corners[2]),
                (mids[0], mids[1], mids[2]),
            ]
            pts = np.concatenate([rule.points @ np.array(s) for s in subs])
            w = np.tile(rule.weights / 4.0, 4)
            rule = QuadratureRule(pts, w, rule.degree)
        return rule


def _orbit3(a: float) -> list[tuple[float, float, float]]:
    b = 1.0 - 2.0 * a
    return [(b, a, a), (a, b, a), (a, a, b)]


_s15 = np.sqrt(15.0)

CENTROID = QuadratureRule(np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0]), 1)

# 3 interior points, exact for quadratics
DEGREE2 = QuadratureRule(np.array(_orbit3(1 / 6)), np.full(3, 1 / 3), 2)

# 7-point symmetric rule, exact for quintics
DEGREE5 = QuadratureRule(
    np.array(
        [(1 / 3, 1 / 3, 1 / 3)] + _orbit3((6 - _s15) / 21) + _orbit3((6 + _s15) / 21)
    ),
    np.array([9 / 40] + [(155 - _s15) / 1200] * 3 + [(155 + _s15) / 1200] * 3),
    5,
)

# 2-point Gauss-Legendre on [0, 1], as (s, weight) with weights summing to 1
GAUSS2_EDGE = (
    np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)]),
    np.array([0.5, 0.5]),
)


def physical_points(mesh, rule: QuadratureRule, elements=None) -> np.ndarray:
    """(M, q, 2) quadrature points mapped onto (a subset of) the elements."""
    tri = mesh.triangles if elements is None else mesh.triangles[elements]
    verts = mesh.nodes[tri]  # (M, 3, 2)
    return np.einsum("qk,mkd->mqd", rule.points, verts)


def integrate(mesh, rule: QuadratureRule, integrand) -> float:
    """Integral of ``integrand(x, y)`` over the mesh, elementwise by ``rule``."""
    return float(np.sum(element_integrals(mesh, rule, integrand)))


def element_integrals(mesh, rule: QuadratureRule, integrand, elements=None) -> np.ndarray:
    pts = physical_points(mesh, rule, elements)
    vals = np.asarray(integrand(pts[..., 0], pts[..., 1]), dtype=float)
    vals = np.broadcast_to(vals, pts.shape[:2])
    areas = mesh.areas if elements is None else mesh.areas[elements]
    return areas * (vals @ rule.weights)
