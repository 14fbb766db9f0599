"""Error norms against exact solutions and observed convergence orders."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problems import ProblemSpec
from .quadrature import DEGREE5, QuadratureRule, physical_points
from .recovery import gradient_operators

CSV_COLUMNS = ["dof", "l2_u", "order_u", "h1_u", "order_h1", "l2_rg", "order_rg", "l2_rl", "order_rl"]


@dataclass(frozen=True)
class ErrorReport:
    """``||u - u_h||``, ``||grad u - grad u_h||``, ``||grad u - G grad u_h||``
    and ``||Lap u - div G grad u_h||`` on one mesh."""

    dof: int
    l2_u: float
    h1semi_u: float
    l2_recovered_grad: float
    l2_recovered_laplacian: float

    @property
    def errors(self) -> tuple[float, float, float, float]:
        return (self.l2_u, self.h1semi_u, self.l2_recovered_grad, self.l2_recovered_laplacian)


def singular_elements(mesh, point, tol=1e-12) -> np.ndarray:
    """Indices of the elements having ``point`` as a vertex."""
    d = np.linalg.norm(mesh.nodes - np.asarray(point), axis=1)
    hits = np.flatnonzero(d < tol)
    if hits.size == 0:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(np.isin(mesh.triangles, hits).any(axis=1))


def elementwise_squared(mesh, rule: QuadratureRule, fn, refine=None, levels: int = 1):
    """Per-element ``int_t fn(x, y, bary, elem)^2``.

    ``fn`` receives quadrature coordinates, barycentric coordinates ``(q, 3)``
    and element indices ``(m,)`` and returns an ``(m, q)`` array (or a tuple of
    arrays whose squares are summed).  Elements in ``refine`` use the rule
    subdivided ``levels`` times.
    """
    out = np.zeros(mesh.num_elements)
    groups = [(np.arange(mesh.num_elements), rule)]
    if refine is not None and len(refine):
        mask = np.ones(mesh.num_elements, dtype=bool)
        mask[refine] = False
        groups = [(np.flatnonzero(mask), rule), (np.asarray(refine), rule.subdivided(levels))]
    for elems, r in groups:
        if elems.size == 0:
            continue
        pts = physical_points(mesh, r, elems)
        vals = fn(pts[..., 0], pts[..., 1], r.points, elems)
        vals = vals if isinstance(vals, tuple) else (vals,)
        sq = sum(np.asarray(v) ** 2 for v in vals)
        out[elems] = mesh.areas[elems] * (sq @ r.weights)
    return out


def error_norms(mesh, u, a, b, problem: ProblemSpec, rule: QuadratureRule = DEGREE5,
                corner_levels: int = 1) -> ErrorReport:
    """The four error norms; quadrature is subdivided next to a singular corner."""
    exact = problem.require_exact()
    u = np.asarray(u, dtype=float)
    gx, gy = gradient_operators(mesh)
    dux, duy = gx @ u, gy @ u
    rgx, rgy = a @ u, b @ u
    rlap = gx @ rgx + gy @ rgy
    tri = mesh.triangles

    refine = None
    if problem.singular_point is not None:
        refine = singular_elements(mesh, problem.singular_point)

    def interp(nodal, bary, elems):
        return nodal[tri[elems]] @ bary.T

    e_u = elementwise_squared(
        mesh, rule, lambda x, y, bary, el: exact.u(x, y) - interp(u, bary, el), refine, corner_levels
    )

    def grads(x, y, bary, el):
        g = exact.grad(x, y)
        return (
            g[..., 0] - dux[el, None],
            g[..., 1] - duy[el, None],
            g[..., 0] - interp(rgx, bary, el),
            g[..., 1] - interp(rgy, bary, el),
        )

    # evaluate the exact gradient once for both gradient norms
    def grad_pair(which):
        def fn(x, y, bary, el):
            parts = grads(x, y, bary, el)
            return parts[:2] if which == 0 else parts[2:]
        return fn

    e_h1 = elementwise_squared(mesh, rule, grad_pair(0), refine, corner_levels)
    e_rg = elementwise_squared(mesh, rule, grad_pair(1), refine, corner_levels)
    e_rl = elementwise_squared(
        mesh, rule, lambda x, y, bary, el: exact.lap(x, y) - rlap[el, None], refine, corner_levels
    )
    return ErrorReport(
        mesh.num_nodes,
        math.sqrt(e_u.sum()),
        math.sqrt(e_h1.sum()),
        math.sqrt(e_rg.sum()),
        math.sqrt(e_rl.sum()),
    )


def _log_h_ratios(dofs, hs):
    """``log(h_prev / h_next)`` per consecutive pair; ``h ~ dof^(-1/2)`` unless
    mesh sizes ``hs`` are given."""
    dofs = list(dofs)
    if any(n <= p for p, n in zip(dofs, dofs[1:])):
        raise ValueError("reports must have increasing dof")
    if hs is None:
        return [0.5 * math.log(n / p) for p, n in zip(dofs, dofs[1:])]
    hs = list(hs)
    if len(hs) != len(dofs):
        raise ValueError("need one mesh size per level")
    return [math.log(p / n) for p, n in zip(hs, hs[1:])]


def orders_from_errors(errors, dofs, hs=None) -> list[float | None]:
    """Observed orders of one error column; ``None`` where an error is exactly zero."""
    errors = list(errors)
    out = []
    for ep, en, lh in zip(errors, errors[1:], _log_h_ratios(dofs, hs)):
        out.append(None if ep == 0 or en == 0 else math.log(ep / en) / lh)
    return out


def convergence_orders(reports, hs=None) -> list[tuple[float | None, ...]]:
    """Orders of all four norms between consecutive reports.

    ``h`` is taken as ``dof^(-1/2)`` so that unstructured meshes can be
    compared; pass ``hs`` (e.g. ``h_max`` of nested uniform meshes) to use
    mesh sizes instead.
    """
    reports = list(reports)
    if len(reports) < 2:
        raise ValueError("need at least two reports")
    dofs = [r.dof for r in reports]
    cols = [orders_from_errors([r.errors[k] for r in reports], dofs, hs) for k in range(4)]
    return list(zip(*cols))


def report_rows(reports, hs=None) -> list[dict]:
    """CSV rows (``CSV_COLUMNS``) with orders against the previous level."""
    reports = list(reports)
    orders = [(None,) * 4] + (convergence_orders(reports, hs) if len(reports) > 1 else [])
    rows = []
    for k, (rep, ords) in enumerate(zip(reports, orders)):
        row = {"dof": rep.dof}
        for (err_key, ord_key), err, order in zip(
            [("l2_u", "order_u"), ("h1_u", "order_h1"), ("l2_rg", "order_rg"), ("l2_rl", "order_rl")],
            rep.errors,
            ords,
        ):
            row[err_key] = f"{err:.6e}"
            if k == 0:
                row[ord_key] = "--"
            elif order is None:
                row[ord_key] = "exact"
            else:
                row[ord_key] = f"{order:.4f}"
        rows.append(row)
    return rows

