"""Generate quasi-uniform unstructured meshes of the unit square.

Nodes are seeded on a jittered hexagonal lattice, relaxed by Lloyd-type
smoothing (each interior node moves to the area-weighted mean of its incident
triangle centroids) and triangulated by Delaunay.  The node counts match the unstructured-mesh
columns of the convergence tables.

    python scripts/make_unstructured_meshes.py [--out data/meshes] [--seed 7]
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.spatial import Delaunay

from rfem.mesh import TriMesh, export_mesh

DOF_COUNTS = (499, 1920, 7566, 29952)


def _boundary(m: int) -> np.ndarray:
    t = np.arange(m) / m
    zeros, ones = np.zeros(m), np.ones(m)
    return np.concatenate([
        np.column_stack([t, zeros]),
        np.column_stack([ones, t]),
        np.column_stack([1 - t, ones]),
        np.column_stack([zeros, 1 - t]),
    ])


def _hex_rows(spacing: float, margin: float) -> np.ndarray:
    dy = spacing * np.sqrt(3.0) / 2
    pts = []
    for k, y in enumerate(np.arange(margin + 0.5 * dy, 1 - margin, dy)):
        xs = np.arange(margin + (0.5 * spacing if k % 2 else 0.0), 1 - margin, spacing)
        pts.append(np.column_stack([xs, np.full(len(xs), y)]))
    return np.concatenate(pts)


def _hex_lattice(h: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` points of a jittered hexagonal lattice inside the square.

    The spacing is bisected to the coarsest lattice holding ``count`` points;
    the few surplus points are dropped at random and smoothing closes the gaps.
    """
    lo, hi = 0.5 * h, 2.0 * h  # lattice sizes bracketing count
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if len(_hex_rows(mid, 0.5 * h)) >= count:
            lo = mid
        else:
            hi = mid
    pts = _hex_rows(lo, 0.5 * h)
    pts = pts[np.sort(rng.choice(len(pts), size=count, replace=False))]
    return pts + rng.uniform(-0.1, 0.1, pts.shape) * lo


def _triangulate(points: np.ndarray) -> np.ndarray:
    tri = Delaunay(points).simplices
    p = points[tri]
    area = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    tri = tri[np.abs(area) > 1e-14]  # slivers along collinear boundary nodes
    area = area[np.abs(area) > 1e-14]
    tri[area < 0] = tri[area < 0][:, [0, 2, 1]]
    return tri


def smoothed_mesh(dof: int, rng: np.random.Generator, sweeps: int = 100) -> TriMesh:
    # equilateral spacing h for dof nodes: dof ~ 2 / (sqrt(3) h^2)
    h = np.sqrt(2.0 / (np.sqrt(3.0) * dof))
    m = int(round(1.0 / h))
    bnd = _boundary(m)
    n_int = dof - len(bnd)
    interior = _hex_lattice(h, n_int, rng)
    for _ in range(sweeps):
        pts = np.vstack([bnd, interior])
        tri = _triangulate(pts)
        p = pts[tri]
        cent = p.mean(axis=1)
        area = 0.5 * np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                            - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        rows = tri.ravel()
        cols = np.repeat(np.arange(len(tri)), 3)
        inc = sparse.csr_matrix((np.repeat(area, 3), (rows, cols)), shape=(len(pts), len(tri)))
        weight = np.asarray(inc.sum(axis=1)).ravel()
        new = (inc @ cent) / weight[:, None]
        interior = new[len(bnd):]
    pts = np.vstack([bnd, interior])
    return TriMesh(pts, _triangulate(pts))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("data/meshes"))
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    for k, dof in enumerate(DOF_COUNTS, start=1):
        mesh = smoothed_mesh(dof, rng)
        path = args.out / f"unstructured{k}.msh"
        export_mesh(mesh, path)
        print(f"{path}: {mesh.num_nodes} nodes, {mesh.num_elements} triangles, "
              f"min angle {np.degrees(mesh.min_angle()):.1f} deg")


if __name__ == "__main__":
    main()
