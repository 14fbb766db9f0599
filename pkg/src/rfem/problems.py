"""Benchmark problems for the clamped biharmonic equation.

Each :class:`ProblemSpec` bundles the polygonal domain, the load ``f``, the
boundary data ``g1 = u`` and ``g2 = du/dn`` and, when known, the exact
solution with its gradient and Laplacian.  Evaluators take coordinate arrays
and are vectorised.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets
from .jets import Jet4
from .mesh import PolygonDomain

UNIT_SQUARE = PolygonDomain(((0, 0), (1, 0), (1, 1), (0, 1)), "unit square")
L_SHAPE = PolygonDomain(((-1, -1), (0, -1), (0, 0), (1, 0), (1, 1), (-1, 1)), "L-shape")
SLIT = PolygonDomain(((-1, -1), (1, -1), (0, 0), (1, 0), (1, 1), (-1, 1)), "slit")
POLYGON = PolygonDomain(
    ((0, 0), (1, 0), (1, 1), (2, 0), (3, 0), (1, 2), (3, 4), (2, 4), (1, 3), (1, 4), (0, 4)),
    "polygon",
)


class MissingExactSolution(ValueError):
    """Raised when an operation needs the exact solution of a problem that has none."""


@dataclass(frozen=True)
class ExactSolution:
    u: Callable
    grad: Callable  # (x, y) -> (..., 2)
    lap: Callable


@dataclass(frozen=True)
class ProblemSpec:
    """Clamped biharmonic problem ``Lap^2 u = f``, ``u = g1``, ``du/dn = g2``.

    ``g2`` is called as ``g2(x, y, nx, ny)`` with the outward unit normal.
    ``singular_point`` marks a corner where the solution is not smooth; error
    quadrature is refined next to it.
    """

    name: str
    domain: PolygonDomain
    f: Callable
    g1: Callable
    g2: Callable
    exact: ExactSolution | None = None
    singular_point: tuple[float, float] | None = None

    def require_exact(self) -> ExactSolution:
        if self.exact is None:
            raise MissingExactSolution(f"problem {self.name!r} has no exact solution")
        return self.exact


def _zero(x, y, *args):
    return np.zeros(np.broadcast(x, y).shape)


def from_exact(name, domain, u, grad, lap, f, singular_point=None) -> ProblemSpec:
    """Problem whose boundary data are the traces of a known solution."""

    def g2(x, y, nx, ny):
        g = grad(x, y)
        return g[..., 0] * nx + g[..., 1] * ny

    return ProblemSpec(
        name, domain, f, u, g2, ExactSolution(u, grad, lap), singular_point
    )


def from_jet(name, domain, expression, singular_point=None) -> ProblemSpec:
    """Problem defined by a jet expression ``expression(X, Y) -> Jet4``;
    ``f``, the gradient and the Laplacian all come from jet propagation."""

    def evaluate(x, y):
        return expression(*Jet4.variables(x, y))

    return from_exact(
        name,
        domain,
        u=lambda x, y: evaluate(x, y).value,
        grad=lambda x, y: evaluate(x, y).gradient,
        lap=lambda x, y: evaluate(x, y).laplacian,
        f=lambda x, y: evaluate(x, y).bilaplacian,
        singular_point=singular_point,
    )


def affine(a: float, b: float, c: float, domain: PolygonDomain = UNIT_SQUARE) -> ProblemSpec:
    """``u = a + b x + c y``; reproduced exactly by the scheme."""
    return from_exact(
        "affine",
        domain,
        u=lambda x, y: a + b * np.asarray(x, float) + c * np.asarray(y, float),
        grad=lambda x, y: np.stack(
            np.broadcast_arrays(np.full(np.shape(x), b), np.full(np.shape(y), c)), axis=-1
        ),
        lap=_zero,
        f=_zero,
    )


# ------------------------------------------------------------- smooth cases
def example1() -> ProblemSpec:
    """``u = sin^2(pi x) sin^2(pi y)`` on the unit square, homogeneous data."""
    pi = np.pi

    def u(x, y):
        return np.sin(pi * x) ** 2 * np.sin(pi * y) ** 2

    def grad(x, y):
        sx, sy = np.sin(pi * x), np.sin(pi * y)
        return np.stack(
            [pi * np.sin(2 * pi * x) * sy**2, pi * np.sin(2 * pi * y) * sx**2], axis=-1
        )

    def lap(x, y):
        return (
            2 * pi**2
            * (np.cos(2 * pi * x) * np.sin(pi * y) ** 2 + np.sin(pi * x) ** 2 * np.cos(2 * pi * y))
        )

    def f(x, y):
        sx2, cx2 = np.sin(pi * x) ** 2, np.cos(pi * x) ** 2
        sy2, cy2 = np.sin(pi * y) ** 2, np.cos(pi * y) ** 2
        k = 8 * pi**4
        return k * (sx2 - cx2) * sy2 + k * sx2 * (sy2 - cy2) + k * (sx2 - cx2) * (sy2 - cy2)

    p = from_exact("exm1", UNIT_SQUARE, u, grad, lap, f)
    return ProblemSpec(p.name, p.domain, f, _zero, _zero, p.exact)


def example2() -> ProblemSpec:
    """``u = sin(2 pi x) sin(2 pi y)``: ``u = 0`` but ``du/dn != 0`` on the boundary."""
    pi = np.pi

    def u(x, y):
        return np.sin(2 * pi * x) * np.sin(2 * pi * y)

    def grad(x, y):
        return 2 * pi * np.stack(
            [np.cos(2 * pi * x) * np.sin(2 * pi * y), np.sin(2 * pi * x) * np.cos(2 * pi * y)],
            axis=-1,
        )

    def lap(x, y):
        return -8 * pi**2 * u(x, y)

    def f(x, y):
        return 64 * pi**4 * u(x, y)

    p = from_exact("exm2", UNIT_SQUARE, u, grad, lap, f)
    return ProblemSpec(p.name, p.domain, f, _zero, p.g2, p.exact)


# ------------------------------------------------------------ corner cases
@dataclass(frozen=True)
class SingularParams:
    """Clamped corner singularity ``r^(1+alpha) g(theta)`` at a corner of
    opening ``omega``; ``theta`` is measured counterclockwise from the edge
    at angle ``offset``."""

    alpha: float
    omega: float
    corner: tuple[float, float] = (0.0, 0.0)
    offset: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not np.pi < self.omega < 2 * np.pi:
            raise ValueError("omega must lie in (pi, 2 pi)")
        if abs(self.residual) > 1e-9:
            raise ValueError(
                f"alpha is not a root of sin^2(alpha w) = alpha^2 sin^2(w): residual {self.residual:g}"
            )

    @property
    def residual(self) -> float:
        a, w = self.alpha, self.omega
        return float(np.sin(a * w) ** 2 - a**2 * np.sin(w) ** 2)

    @property
    def branch_start(self) -> float:
        # the branch cut bisects the excluded wedge
        return self.offset + 0.5 * self.omega - np.pi


LSHAPE_PARAMS = SingularParams(0.544483736782464, 3 * np.pi / 2)
SLIT_PARAMS = SingularParams(0.505009698896589, 7 * np.pi / 4)


def angular_profile(params: SingularParams, theta):
    """``g_{alpha,omega}(theta)``; works on floats, arrays and jets."""
    a, w = params.alpha, params.omega
    sin, cos = (jets.sin, jets.cos) if isinstance(theta, Jet4) else (np.sin, np.cos)
    c1 = np.sin((a - 1) * w) / (a - 1) - np.sin((a + 1) * w) / (a + 1)
    c2 = np.cos((a - 1) * w) - np.cos((a + 1) * w)
    return c1 * (cos((a - 1) * theta) - cos((a + 1) * theta)) - c2 * (
        sin((a - 1) * theta) / (a - 1) - sin((a + 1) * theta) / (a + 1)
    )


def corner_function(params: SingularParams, x: Jet4, y: Jet4) -> Jet4:
    """Jet of ``r^(1+alpha) g(theta)`` about the corner."""
    dx = x - params.corner[0]
    dy = y - params.corner[1]
    r2 = dx * dx + dy * dy
    if np.any(r2.value == 0):
        raise ValueError("corner function cannot be differentiated at the corner")
    theta = jets.atan2(dy, dx, params.branch_start) - params.offset
    radial = jets.exp(jets.log(r2) * (0.5 * (1 + params.alpha)))
    return radial * angular_profile(params, theta)


def singular_solution(params: SingularParams, domain: PolygonDomain, name: str) -> ProblemSpec:
    """``u = (x^2-1)^2 (y^2-1)^2 r^(1+alpha) g(theta)`` on a subset of (-1,1)^2.

    The bubble factor clamps the outer square and ``g`` vanishes with its
    derivative on both corner edges, so ``g1 = g2 = 0``.
    """

    def expression(x, y):
        bubble = (x * x - 1.0) ** 2 * (y * y - 1.0) ** 2
        return bubble * corner_function(params, x, y)

    p = from_jet(name, domain, expression, singular_point=params.corner)
    return ProblemSpec(p.name, domain, p.f, _zero, _zero, p.exact, params.corner)


def lshape() -> ProblemSpec:
    return singular_solution(LSHAPE_PARAMS, L_SHAPE, "lshape")


def slit() -> ProblemSpec:
    return singular_solution(SLIT_PARAMS, SLIT, "slit")


def example5() -> ProblemSpec:
    """``f = 1`` with clamped homogeneous data on the 11-corner polygon."""
    return ProblemSpec(
        "polygon", POLYGON, lambda x, y: np.ones(np.broadcast(x, y).shape), _zero, _zero
    )


PROBLEMS = {
    "exm1": example1,
    "exm2": example2,
    "lshape": lshape,
    "slit": slit,
    "polygon": example5,
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
