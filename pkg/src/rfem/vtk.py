"""Legacy ASCII VTK output for triangle meshes with nodal and element fields."""
from __future__ import annotations

import io

import numpy as np

from .mesh import TriMesh, write_atomic

_TRIANGLE = 5


def _fmt(values) -> str:
    return "\n".join(f"{v:.9g}" for v in np.asarray(values, dtype=float).ravel())


def write_vtk(mesh: TriMesh, path, point_data=None, cell_data=None, title="rfem") -> None:
    """Write ``mesh`` and named scalar fields as a legacy unstructured grid.

    ``point_data`` maps names to arrays of length ``num_nodes``;
    ``cell_data`` to arrays of length ``num_elements``.
    """
    point_data = dict(point_data or {})
    cell_data = dict(cell_data or {})
    for name, arr in point_data.items():
        if np.shape(arr) != (mesh.num_nodes,):
            raise ValueError(f"point field {name!r} must have {mesh.num_nodes} entries")
    for name, arr in cell_data.items():
        if np.shape(arr) != (mesh.num_elements,):
            raise ValueError(f"cell field {name!r} must have {mesh.num_elements} entries")
    for name in (*point_data, *cell_data):
        if not name or any(c.isspace() for c in name):
            raise ValueError(f"field name {name!r} must be a non-empty word")

    out = io.StringIO()
    out.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
    out.write(f"POINTS {mesh.num_nodes} double\n")
    for x, y in mesh.nodes:
        out.write(f"{x:.9g} {y:.9g} 0\n")
    m = mesh.num_elements
    out.write(f"CELLS {m} {4 * m}\n")
    for a, b, c in mesh.triangles:
        out.write(f"3 {a} {b} {c}\n")
    out.write(f"CELL_TYPES {m}\n")
    out.write("\n".join([str(_TRIANGLE)] * m) + "\n")
    for header, fields in (("POINT_DATA", point_data), ("CELL_DATA", cell_data)):
        if not fields:
            continue
        out.write(f"{header} {mesh.num_nodes if header == 'POINT_DATA' else m}\n")
        for name, arr in fields.items():
            out.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n{_fmt(arr)}\n")
    write_atomic(path, out.getvalue())


def read_vtk(path) -> dict:
    """Parse a file produced by :func:`write_vtk`.

    Returns ``{"points": (N, 3), "cells": (M, 3), "cell_types": (M,),
    "point_data": {...}, "cell_data": {...}}``.
    """
    tokens = open(path, encoding="utf-8").read().split("\n")
    if not tokens[0].startswith("# vtk DataFile"):
        raise ValueError("not a legacy VTK file")
    words = " ".join(tokens[2:]).split()
    pos = 0
    result = {"point_data": {}, "cell_data": {}}
    section = None

    def take(n):
        nonlocal pos
        chunk = words[pos:pos + n]
        if len(chunk) < n:
            raise ValueError("unexpected end of file")
        pos += n
        return chunk

    while pos < len(words):
        key = take(1)[0]
        if key in ("ASCII", "DATASET", "UNSTRUCTURED_GRID"):
            continue
        if key == "POINTS":
            n, _ = take(2)
            result["points"] = np.array(take(3 * int(n)), dtype=float).reshape(-1, 3)
        elif key == "CELLS":
            m, size = map(int, take(2))
            raw = np.array(take(size), dtype=np.int64).reshape(m, -1)
            if np.any(raw[:, 0] != 3):
                raise ValueError("only triangle cells are supported")
            result["cells"] = raw[:, 1:]
        elif key == "CELL_TYPES":
            m = int(take(1)[0])
            result["cell_types"] = np.array(take(m), dtype=np.int64)
        elif key in ("POINT_DATA", "CELL_DATA"):
            section = ("point_data" if key == "POINT_DATA" else "cell_data", int(take(1)[0]))
        elif key == "SCALARS":
            name, _, _ = take(3)
            if take(2) != ["LOOKUP_TABLE", "default"]:
                raise ValueError("expected a default lookup table")
            result[section[0]][name] = np.array(take(section[1]), dtype=float)
        else:
            raise ValueError(f"unexpected token {key!r}")
    return result
