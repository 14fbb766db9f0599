"""Weighted-averaging recovery of piecewise constants into nodal linear fields.

``G`` maps an elementwise-constant field to the continuous piecewise linear
field whose value at node ``z`` is a convex combination of the values on the
patch ``omega_z``.  Applied to both components of ``grad u_h`` it defines the
recovered gradient, and its divergence the recovered (discrete) Laplacian.
"""
from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np
from scipy import sparse

from .mesh import TriMesh


class RecoveryWeights(str, enum.Enum):
    SIMPLE = "simple"
    HARMONIC = "harmonic"


def averaging_matrix(mesh: TriMesh, weights=RecoveryWeights.SIMPLE) -> sparse.csr_matrix:
    """N x M matrix of patch weights; every row sums to one.

    ``simple`` gives each element of the patch weight ``1/#omega_z``;
    ``harmonic`` weights by inverse area, ``(1/|t|) / sum_{t' in omega_z} 1/|t'|``.
    """
    weights = RecoveryWeights(weights)
    inc = mesh.node_element_incidence
    if weights is RecoveryWeights.SIMPLE:
        raw = inc.copy()
    else:
        raw = inc @ sparse.diags(1.0 / mesh.areas)
    raw = sparse.csr_matrix(raw)
    row_sums = np.asarray(raw.sum(axis=1)).ravel()
    avg = sparse.diags(1.0 / row_sums) @ raw
    avg = sparse.csr_matrix(avg)
    avg.sort_indices()
    return avg


def apply_recovery(avg: sparse.spmatrix, w) -> np.ndarray:
    """Nodal values of ``G(w)`` for an elementwise-constant field ``w``."""
    w = np.asarray(w, dtype=float)
    if w.shape[0] != avg.shape[1]:
        raise ValueError(
            f"element field has length {w.shape[0]}, expected {avg.shape[1]}"
        )
    return avg @ w


def gradient_operators(mesh: TriMesh) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """M x N matrices mapping nodal coefficients to elementwise d/dx, d/dy."""
    m = mesh.num_elements
    rows = np.repeat(np.arange(m), 3)
    cols = mesh.triangles.ravel()
    g = mesh.basis_gradients
    shape = (m, mesh.num_nodes)
    gx = sparse.csr_matrix((g[:, :, 0].ravel(), (rows, cols)), shape=shape)
    gy = sparse.csr_matrix((g[:, :, 1].ravel(), (rows, cols)), shape=shape)
    return gx, gy


@lru_cache(maxsize=8)
def _cached_matrices(mesh: TriMesh, weights: RecoveryWeights):
    avg = averaging_matrix(mesh, weights)
    gx, gy = gradient_operators(mesh)
    a = sparse.csr_matrix(avg @ gx)
    b = sparse.csr_matrix(avg @ gy)
    a.sort_indices()
    b.sort_indices()
    for mat in (a, b):
        mat.data.setflags(write=False)
    return a, b


def recovered_gradient_matrices(mesh: TriMesh, weights=RecoveryWeights.SIMPLE):
    """N x N matrices ``(A, B)`` with ``A @ U`` and ``B @ U`` the nodal values
    of the recovered x- and y-derivatives of ``u_h = sum U_j phi_j``.

    Results are cached per (mesh, weights).
    """
    return _cached_matrices(mesh, RecoveryWeights(weights))


def laplacian_operator(mesh: TriMesh, a, b) -> sparse.csr_matrix:
    """M x N matrix mapping ``U`` to the elementwise values of div G(grad u_h)."""
    gx, gy = gradient_operators(mesh)
    return sparse.csr_matrix(gx @ a + gy @ b)


def recover_laplacian(mesh: TriMesh, a, b, u) -> np.ndarray:
    """Elementwise-constant recovered Laplacian ``div G(grad u_h)``."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != mesh.num_nodes:
        raise ValueError("nodal field has the wrong length")
    gx, gy = gradient_operators(mesh)
    return gx @ (a @ u) + gy @ (b @ u)
