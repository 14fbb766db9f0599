"""Triangular meshes: connectivity, boundary extraction, generators, I/O and
newest-vertex bisection.

Triangles are stored counterclockwise with the *newest vertex first*, so the
refinement edge of ``triangles[t]`` is always ``(triangles[t, 1],
triangles[t, 2])``.  All constructors in this module label initial meshes so
that the refinement edge is the longest edge of each triangle.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree


class MeshError(ValueError):
    """Raised for malformed or non-conforming meshes."""


@dataclass(frozen=True)
class PolygonDomain:
    """Simple polygon given by its corners in counterclockwise order."""

    corners: tuple[tuple[float, float], ...]
    name: str = "polygon"

    def __post_init__(self):
        corners = tuple((float(x), float(y)) for x, y in self.corners)
        object.__setattr__(self, "corners", corners)
        if len(corners) < 3:
            raise MeshError("a polygon needs at least 3 corners")
        if abs(self.signed_area) < 1e-14:
            raise MeshError("degenerate polygon (zero area)")
        if self.signed_area < 0:
            raise MeshError("polygon corners must be counterclockwise")
        if _self_intersects(np.array(corners)):
            raise MeshError("polygon is not simple")

    @property
    def signed_area(self) -> float:
        p = np.array(self.corners)
        x, y = p[:, 0], p[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def contains(self, x, y) -> np.ndarray:
        """Even-odd point-in-polygon test (boundary points are unreliable)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        p = np.array(self.corners)
        for (x1, y1), (x2, y2) in zip(p, np.roll(p, -1, axis=0)):
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (x < xc)
        return inside


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 * o2 < 0 and o3 * o4 < 0


def _self_intersects(p: np.ndarray) -> bool:
    n = len(p)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]):
                return True
    return False


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Conforming triangulation of a polygonal domain.

    Parameters
    ----------
    nodes : (N, 2) array of float
        Node coordinates.
    triangles : (M, 3) array of int
        Counterclockwise vertex indices, newest vertex first.
    parent : (M,) array of int, optional
        Index of the element in the previous mesh that each element was
        refined from (set by :func:`bisect`).

    Notes
    -----
    Instances are immutable; all derived connectivity is computed lazily and
    cached.  Construction validates positive orientation and conformity.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    parent: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        tris = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise MeshError("nodes must have shape (N, 2)")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise MeshError("triangles must have shape (M, 3)")
        if tris.size and (tris.min() < 0 or tris.max() >= len(nodes)):
            raise MeshError("triangle references a node index out of range")
        nodes.setflags(write=False)
        tris.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", tris)
        if np.any(self.signed_areas <= 0):
            bad = int(np.flatnonzero(self.signed_areas <= 0)[0])
            raise MeshError(f"triangle {bad} has zero or negative area")
        self._check_conformity()

    # ------------------------------------------------------------------ sizes
    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_elements(self) -> int:
        return len(self.triangles)

    # --------------------------------------------------------------- geometry
    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return self.signed_areas

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        """(M, 3) lengths; column k is the edge opposite local vertex k."""
        p = self.nodes[self.triangles]
        return np.stack(
            [
                np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
                np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
                np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
            ],
            axis=1,
        )

    @cached_property
    def diameters(self) -> np.ndarray:
        return self.edge_lengths.max(axis=1)

    @property
    def h_max(self) -> float:
        return float(self.diameters.max())

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """(M, 3, 2) constant gradients of the three local hat functions."""
        p = self.nodes[self.triangles]
        x, y = p[..., 0], p[..., 1]
        two_area = 2.0 * self.signed_areas
        gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        return np.stack([gx, gy], axis=2) / two_area[:, None, None]

    def min_angle(self) -> float:
        """Smallest interior angle over all elements, in radians."""
        a, b, c = self.edge_lengths.T
        cos_a = (b**2 + c**2 - a**2) / (2 * b * c)
        cos_b = (a**2 + c**2 - b**2) / (2 * a * c)
        cos_c = (a**2 + b**2 - c**2) / (2 * a * b)
        cosines = np.clip(np.stack([cos_a, cos_b, cos_c]), -1.0, 1.0)
        return float(np.arccos(cosines).min())

    # ----------------------------------------------------------- connectivity
    @cached_property
    def _directed_edges(self) -> np.ndarray:
        t = self.triangles
        # local edge k runs between the two vertices other than k, ccw
        return np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])

    def _check_conformity(self):
        if self.num_elements == 0:
            raise MeshError("mesh has no triangles")
        d = self._directed_edges
        n = self.num_nodes
        key = d[:, 0] * n + d[:, 1]
        if len(np.unique(key)) != len(key):
            raise MeshError("non-conforming connectivity: repeated directed edge")
        lo, hi = np.minimum(d[:, 0], d[:, 1]), np.maximum(d[:, 0], d[:, 1])
        _, counts = np.unique(lo * n + hi, return_counts=True)
        if np.any(counts > 2):
            raise MeshError("non-conforming connectivity: edge shared by >2 triangles")
        # hanging nodes show up as boundary nodes inside another boundary edge
        be = self.boundary_edges
        bnodes = np.unique(be)
        tree = cKDTree(self.nodes[bnodes])
        p0, p1 = self.nodes[be[:, 0]], self.nodes[be[:, 1]]
        length = np.linalg.norm(p1 - p0, axis=1)
        hits = tree.query_ball_point(0.5 * (p0 + p1), 0.5 * length * (1 - 1e-9))
        for e, cand in enumerate(hits):
            for c in cand:
                z = bnodes[c]
                if z in be[e]:
                    continue
                q = self.nodes[z]
                tang = p1[e] - p0[e]
                r = q - p0[e]
                if abs(tang[0] * r[1] - tang[1] * r[0]) <= 1e-12 * length[e] ** 2:
                    raise MeshError("non-conforming connectivity: hanging node")

    @cached_property
    def _boundary_info(self):
        d = self._directed_edges
        n = self.num_nodes
        fwd = d[:, 0] * n + d[:, 1]
        rev = d[:, 1] * n + d[:, 0]
        is_bnd = ~np.isin(fwd, rev)
        idx = np.flatnonzero(is_bnd)
        elem = idx % self.num_elements
        return d[idx], elem

    @property
    def boundary_edges(self) -> np.ndarray:
        """(K, 2) boundary edges oriented counterclockwise along the boundary."""
        return self._boundary_info[0]

    @property
    def boundary_edge_elements(self) -> np.ndarray:
        return self._boundary_info[1]

    @cached_property
    def boundary_lengths(self) -> np.ndarray:
        be = self.boundary_edges
        return np.linalg.norm(self.nodes[be[:, 1]] - self.nodes[be[:, 0]], axis=1)

    @cached_property
    def boundary_normals(self) -> np.ndarray:
        """(K, 2) outward unit normals of the boundary edges."""
        be = self.boundary_edges
        t = self.nodes[be[:, 1]] - self.nodes[be[:, 0]]
        return np.stack([t[:, 1], -t[:, 0]], axis=1) / self.boundary_lengths[:, None]

    @cached_property
    def boundary_node_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_nodes, dtype=bool)
        mask[self.boundary_edges.ravel()] = True
        return mask

    @cached_property
    def node_element_incidence(self) -> sparse.csr_matrix:
        """N x M 0/1 matrix; row z marks the patch omega_z."""
        m = self.num_elements
        rows = self.triangles.ravel()
        cols = np.repeat(np.arange(m), 3)
        inc = sparse.csr_matrix(
            (np.ones(3 * m), (rows, cols)), shape=(self.num_nodes, m)
        )
        inc.sort_indices()
        return inc

    @cached_property
    def patch_sizes(self) -> np.ndarray:
        return np.diff(self.node_element_incidence.indptr)

    @cached_property
    def node_patches(self) -> list[np.ndarray]:
        inc = self.node_element_incidence
        return [inc.indices[inc.indptr[z] : inc.indptr[z + 1]] for z in range(self.num_nodes)]

    @cached_property
    def edges(self) -> np.ndarray:
        """(E, 2) unique undirected edges, sorted node pairs."""
        d = self._directed_edges
        return np.unique(np.sort(d, axis=1), axis=0)

    def interpolate(self, fn) -> np.ndarray:
        """Nodal interpolant of a pointwise evaluator ``fn(x, y)``."""
        return np.asarray(fn(self.nodes[:, 0], self.nodes[:, 1]), dtype=float) * np.ones(
            self.num_nodes
        )


def _label_longest_edge(nodes: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Rotate each triangle so that the edge opposite vertex 0 is the longest."""
    p = nodes[tris]
    lengths = np.stack(
        [
            np.sum((p[:, 2] - p[:, 1]) ** 2, axis=1),
            np.sum((p[:, 0] - p[:, 2]) ** 2, axis=1),
            np.sum((p[:, 1] - p[:, 0]) ** 2, axis=1),
        ],
        axis=1,
    )
    k = np.argmax(lengths, axis=1)
    rows = np.arange(len(tris))[:, None]
    return tris[rows, (k[:, None] + np.arange(3)) % 3]


# ---------------------------------------------------------------- generators
def regular_grid(n: int) -> TriMesh:
    """Unit square split into ``n x n`` cells, each cut along the diagonal
    from lower-left to upper-right."""
    if n < 1:
        raise ValueError("n must be >= 1")
    s = np.linspace(0.0, 1.0, n + 1)
    x, y = np.meshgrid(s, s)
    nodes = np.stack([x.ravel(), y.ravel()], axis=1)
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    p00 = (j * (n + 1) + i).ravel()
    p10, p01, p11 = p00 + 1, p00 + n + 1, p00 + n + 2
    # newest vertex first: the refinement edge is the diagonal
    lower = np.stack([p10, p11, p00], axis=1)
    upper = np.stack([p01, p00, p11], axis=1)
    tris = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return TriMesh(nodes, tris)


def _ear_clip(corners: np.ndarray) -> np.ndarray:
    """Ear clipping that always cuts the ear with the largest minimum angle."""

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def min_angle(a, b, c):
        pts = np.array([a, b, c])
        angles = []
        for k in range(3):
            u = pts[(k + 1) % 3] - pts[k]
            v = pts[(k + 2) % 3] - pts[k]
            cosv = u @ v / (np.linalg.norm(u) * np.linalg.norm(v))
            angles.append(np.arccos(np.clip(cosv, -1, 1)))
        return min(angles)

    remaining = list(range(len(corners)))
    tris = []
    while len(remaining) > 3:
        best, best_q = None, -1.0
        m = len(remaining)
        for k in range(m):
            i, j, l = remaining[k - 1], remaining[k], remaining[(k + 1) % m]
            a, b, c = corners[i], corners[j], corners[l]
            if cross(a, b, c) <= 1e-14:
                continue
            blocked = False
            for o in remaining:
                if o in (i, j, l):
                    continue
                p = corners[o]
                if cross(a, b, p) >= 0 and cross(b, c, p) >= 0 and cross(c, a, p) >= 0:
                    blocked = True
                    break
            if blocked:
                continue
            q = min_angle(a, b, c)
            if q > best_q:
                best, best_q = k, q
        if best is None:
            raise MeshError("ear clipping failed; polygon may not be simple")
        m = len(remaining)
        tris.append((remaining[best - 1], remaining[best], remaining[(best + 1) % m]))
        remaining.pop(best)
    tris.append(tuple(remaining))
    return np.array(tris, dtype=np.int64)


def triangulate_polygon(domain: PolygonDomain, target_h: float) -> TriMesh:
    """Conforming mesh of a polygon with all element diameters <= ``target_h``.

    The corner list is ear-clipped and the result is refined by uniform
    newest-vertex bisection until the size target is met.
    """
    corners = np.array(domain.corners)
    tris = _ear_clip(corners)
    mesh = TriMesh(corners, _label_longest_edge(corners, tris))
    while mesh.h_max > target_h:
        mesh = bisect(mesh, np.arange(mesh.num_elements))
    return TriMesh(mesh.nodes, mesh.triangles)


# ------------------------------------------------------------------------ I/O
def export_mesh(mesh: TriMesh, path) -> None:
    """Write the plain-text ``nodes``/``triangles`` format."""
    lines = [f"nodes {mesh.num_nodes}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.nodes]
    lines.append(f"triangles {mesh.num_elements}")
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    write_atomic(path, "\n".join(lines) + "\n")


def import_mesh(path) -> TriMesh:
    """Read a mesh from the plain-text format written by :func:`export_mesh`."""
    tokens = Path(path).read_text(encoding="utf-8").split()
    try:
        if tokens[0] != "nodes":
            raise MeshError("expected 'nodes <N>' header")
        n = int(tokens[1])
        pos = 2
        nodes = np.array(tokens[pos : pos + 2 * n], dtype=float).reshape(n, 2)
        pos += 2 * n
        if tokens[pos] != "triangles":
            raise MeshError("expected 'triangles <M>' header")
        m = int(tokens[pos + 1])
        pos += 2
        raw = tokens[pos : pos + 3 * m]
        if len(raw) != 3 * m or len(tokens) != pos + 3 * m:
            raise MeshError("triangle block has the wrong number of entries")
        tris = np.array(raw, dtype=np.int64).reshape(m, 3)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"cannot parse mesh file {path}: {exc}") from exc
    if tris.size and (tris.min() < 0 or tris.max() >= n):
        raise MeshError("triangle references a node index out of range")
    mesh = TriMesh(nodes, tris)
    return TriMesh(mesh.nodes, _label_longest_edge(mesh.nodes, mesh.triangles))


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ----------------------------------------------------------------- bisection
def bisect(mesh: TriMesh, marked) -> TriMesh:
    """Newest-vertex bisection of the marked elements with conforming closure.

    Every marked element is bisected at least once.  The returned mesh keeps
    the index of the originating element of ``mesh`` in ``parent``.
    """
    marked = np.unique(np.asarray(list(marked) if isinstance(marked, set) else marked,
                                  dtype=np.int64))
    if marked.size == 0:
        return mesh
    if marked.min() < 0 or marked.max() >= mesh.num_elements:
        raise IndexError("marked element index out of range")

    n = mesh.num_nodes
    t = mesh.triangles
    local = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
    keys = np.minimum(local[:, 0], local[:, 1]) * n + np.maximum(local[:, 0], local[:, 1])
    edge_keys, inverse = np.unique(keys, return_inverse=True)
    m = mesh.num_elements
    elem2edge = inverse.reshape(3, m).T  # column 0 is the refinement edge

    cut = np.zeros(len(edge_keys), dtype=bool)
    cut[elem2edge[marked, 0]] = True
    while True:
        needs = cut[elem2edge].any(axis=1) & ~cut[elem2edge[:, 0]]
        if not needs.any():
            break
        cut[elem2edge[needs, 0]] = True

    cut_idx = np.flatnonzero(cut)
    a, b = edge_keys[cut_idx] // n, edge_keys[cut_idx] % n
    mids = 0.5 * (mesh.nodes[a] + mesh.nodes[b])
    nodes = np.concatenate([mesh.nodes, mids])
    mid_of = np.full(len(edge_keys), -1, dtype=np.int64)
    mid_of[cut_idx] = n + np.arange(len(cut_idx))
    big = len(nodes)
    cut_keys = a * big + b
    mid_nodes = mid_of[cut_idx]
    order = np.argsort(cut_keys)
    cut_keys, mid_nodes = cut_keys[order], mid_nodes[order]

    tris = t.copy()
    parent = np.arange(m)
    while True:
        e_lo = np.minimum(tris[:, 1], tris[:, 2])
        e_hi = np.maximum(tris[:, 1], tris[:, 2])
        k = e_lo * big + e_hi
        pos = np.searchsorted(cut_keys, k)
        pos = np.minimum(pos, len(cut_keys) - 1)
        hit = cut_keys[pos] == k
        if not hit.any():
            break
        mid = mid_nodes[pos[hit]]
        p1, p2, p3 = tris[hit, 0], tris[hit, 1], tris[hit, 2]
        child1 = np.stack([mid, p1, p2], axis=1)
        child2 = np.stack([mid, p3, p1], axis=1)
        keep = tris[~hit]
        tris = np.concatenate([keep, child1, child2])
        parent = np.concatenate([parent[~hit], parent[hit], parent[hit]])

    order = np.argsort(parent, kind="stable")
    return TriMesh(nodes, tris[order], parent=parent[order])
