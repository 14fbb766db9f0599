import numpy as np
import pytest
from scipy import sparse

from rfem.assembly import LinearSystem, discretize
from rfem.mesh import regular_grid
from rfem.problems import example1, example2
from rfem.solve import (
    ConvergenceError,
    SolverConfig,
    SolverError,
    pcg,
    solve,
)


@pytest.fixture(scope="module")
def grid4_system():
    prob = example1()
    return discretize(regular_grid(4), prob).system(prob)


@pytest.mark.parametrize("method", ["cg", "direct", "sparse"])
def test_identity_system(method):
    b = np.array([1.0, -2.0, 3.5])
    u = solve(LinearSystem(sparse.identity(3, format="csr"), b), SolverConfig(method))
    np.testing.assert_allclose(u, b, rtol=1e-15)


@pytest.mark.parametrize("method", ["cg", "sparse"])
def test_matches_dense_oracle(grid4_system, method):
    ref = solve(grid4_system, SolverConfig("direct"))
    u = solve(grid4_system, SolverConfig(method))
    assert np.max(np.abs(u - ref)) <= 1e-8
    k, f = grid4_system.matrix, grid4_system.rhs
    assert np.linalg.norm(k @ u - f) <= 1e-10 * np.linalg.norm(f)
    np.testing.assert_array_equal(u[grid4_system.dirichlet_nodes], grid4_system.dirichlet_values)


@pytest.mark.parametrize("method", ["cg", "sparse"])
def test_residual_bound_on_medium_mesh(method):
    prob = example2()
    sys_ = discretize(regular_grid(24), prob).system(prob)
    u = solve(sys_, SolverConfig(method))
    assert np.linalg.norm(sys_.matrix @ u - sys_.rhs) <= 1e-10 * np.linalg.norm(sys_.rhs)


@pytest.mark.parametrize("method", ["cg", "direct", "sparse"])
def test_indefinite_rejected(method):
    k = sparse.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    if method == "sparse":
        k = sparse.csr_matrix(np.array([[-1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(SolverError):
        solve(LinearSystem(k, np.array([1.0, 0.0])), SolverConfig(method))


def test_nonsymmetric_rejected():
    k = sparse.csr_matrix(np.array([[2.0, 1.0], [0.0, 2.0]]))
    with pytest.raises(SolverError, match="symmetric"):
        solve(LinearSystem(k, np.ones(2)))


def test_iteration_cap_reports_residual(grid4_system):
    with pytest.raises(ConvergenceError) as info:
        solve(grid4_system, SolverConfig("cg", max_iter=2))
    assert info.value.residual > 1e-10


def test_cg_energy_error_monotone(grid4_system):
    k, f = grid4_system.matrix, grid4_system.rhs
    exact = solve(grid4_system, SolverConfig("direct"))
    errs = []
    pcg(k, f, rel_tol=1e-12, callback=lambda x: errs.append((x - exact) @ (k @ (x - exact))))
    assert len(errs) > 3
    errs = np.sqrt(np.maximum(errs, 0))
    assert np.all(np.diff(errs) <= 1e-12 * errs[0])


def test_deterministic_iterates(grid4_system):
    runs = []
    for _ in range(2):
        its = []
        pcg(grid4_system.matrix, grid4_system.rhs, callback=lambda x: its.append(x.copy()))
        runs.append(np.array(its))
    assert np.array_equal(runs[0], runs[1])


def test_zero_rhs():
    k = sparse.csr_matrix(np.diag([2.0, 3.0]))
    x, its = pcg(k, np.zeros(2))
    assert its == 0 and np.all(x == 0)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)
    with pytest.raises(ValueError):
        SolverConfig("gmres")


def test_dense_limit():
    n = 3001
    sys_ = LinearSystem(sparse.identity(n, format="csr"), np.ones(n))
    with pytest.raises(SolverError):
        solve(sys_, SolverConfig("direct"))
