import numpy as np
import pytest

from rfem.mesh import TriMesh, regular_grid


def assert_conforming(mesh: TriMesh):
    """Interior edges have two triangles, boundary edges one, no hanging nodes."""
    t = mesh.triangles
    d = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
    key = np.sort(d, axis=1)
    _, counts = np.unique(key, axis=0, return_counts=True)
    assert counts.max() <= 2
    assert np.sum(counts == 1) == len(mesh.boundary_edges)
    # Euler characteristic of a simply connected triangulated polygon
    assert mesh.num_nodes - len(counts) + mesh.num_elements == 1


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid4():
    return regular_grid(4)


@pytest.fixture
def unit_triangle():
    return TriMesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.VERDICTS:
            terminalreporter.write_line(line)
