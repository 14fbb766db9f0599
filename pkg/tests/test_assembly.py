import numpy as np
import pytest
from scipy import sparse

from rfem.assembly import (
    LinearSystem,
    PenaltyConfig,
    apply_dirichlet,
    discretize,
    gradient_gram_matrices,
    load_vector,
    normal_trace_operator,
    penalty_matrix,
    volume_matrix,
)
from rfem.mesh import bisect, regular_grid, triangulate_polygon
from rfem.problems import L_SHAPE, example1, example2, example5
from rfem.recovery import recover_laplacian, recovered_gradient_matrices
from rfem.solve import SolverConfig, solve

MESHES = [regular_grid(3), triangulate_polygon(L_SHAPE, 0.6), bisect(regular_grid(2), [1, 6])]


def _classical_stiffness(mesh):
    n = mesh.num_nodes
    k = np.zeros((n, n))
    for t, tri in enumerate(mesh.triangles):
        p = mesh.nodes[tri]
        v = np.column_stack([np.ones(3), p])
        g = np.linalg.solve(v, np.eye(3))[1:, :].T
        k[np.ix_(tri, tri)] += mesh.areas[t] * g @ g.T
    return k


def test_gram_single_triangle(unit_triangle):
    p, q, s, t = gradient_gram_matrices(unit_triangle)
    assert p[0, 0] == pytest.approx(0.5)
    assert t[0, 0] == pytest.approx(0.5)
    assert q[0, 0] == pytest.approx(0.5)  # (-1)(-1) * 1/2


@pytest.mark.parametrize("mesh", MESHES)
def test_gram_identities(mesh):
    p, q, s, t = gradient_gram_matrices(mesh)
    assert abs(s - q.T).max() <= 1e-14
    assert abs(p - p.T).max() <= 1e-14
    assert abs(t - t.T).max() <= 1e-14
    np.testing.assert_allclose((p + t).toarray(), _classical_stiffness(mesh), atol=1e-13)


def _volume(mesh, weights="simple"):
    a, b = recovered_gradient_matrices(mesh, weights)
    return a, b, volume_matrix(a, b, *gradient_gram_matrices(mesh))


@pytest.mark.parametrize("mesh", MESHES)
@pytest.mark.parametrize("weights", ["simple", "harmonic"])
def test_volume_symmetric_and_kills_affine(mesh, weights):
    a, b, k = _volume(mesh, weights)
    assert abs(k - k.T).max() <= 1e-12 * abs(k).max()
    u = 0.3 - 1.2 * mesh.nodes[:, 0] + 2.5 * mesh.nodes[:, 1]
    assert abs(u @ (k @ u)) <= 1e-10


def test_volume_energy_equals_recovered_laplacian_integral(rng):
    mesh = regular_grid(2)
    a, b, k = _volume(mesh)
    u = rng.standard_normal(mesh.num_nodes)
    direct = np.sum(mesh.areas * recover_laplacian(mesh, a, b, u) ** 2)
    assert u @ (k @ u) == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("mesh", MESHES)
def test_volume_is_psd(mesh):
    _, _, k = _volume(mesh)
    assert np.linalg.eigvalsh(k.toarray()).min() >= -1e-9 * abs(k).max()


@pytest.mark.parametrize("n", [2, 4, 7])
def test_penalty_of_x_is_two_over_h_squared(n):
    mesh = regular_grid(n)
    a, b = recovered_gradient_matrices(mesh)
    pen = penalty_matrix(mesh, a, b, PenaltyConfig(1.0, "global"))
    u = mesh.nodes[:, 0].copy()
    assert u @ (pen @ u) == pytest.approx(2.0 / mesh.h_max**2, rel=1e-12)


def test_penalty_zero_for_constants_and_linear_in_sigma():
    mesh = MESHES[1]
    a, b = recovered_gradient_matrices(mesh)
    pen1 = penalty_matrix(mesh, a, b, PenaltyConfig(1.0))
    pen2 = penalty_matrix(mesh, a, b, PenaltyConfig(2.0))
    u = np.full(mesh.num_nodes, 2.0)
    assert abs(u @ (pen1 @ u)) <= 1e-12 * abs(pen1).sum() * 4
    assert abs(pen2 - 2 * pen1).max() == 0.0
    assert abs(pen1 - pen1.T).max() <= 1e-12 * abs(pen1).max()


def test_penalty_uses_edge_normals():
    # trace rows are n . (A, B) evaluated at the edge endpoints
    mesh = regular_grid(2)
    a, b = recovered_gradient_matrices(mesh)
    u = 3 * mesh.nodes[:, 0] - mesh.nodes[:, 1]
    trace = (normal_trace_operator(mesh, a, b) @ u).reshape(-1, 2)
    expected = mesh.boundary_normals @ np.array([3.0, -1.0])
    np.testing.assert_allclose(trace, np.column_stack([expected, expected]), atol=1e-13)


def test_edge_scaling_quadruples_under_uniform_refinement():
    coarse, fine = regular_grid(3), regular_grid(6)
    cfg = PenaltyConfig(1.0, "edge")
    fc, ff = cfg.edge_factors(coarse), cfg.edge_factors(fine)
    np.testing.assert_allclose(ff, 4 * fc[0], rtol=1e-12)
    np.testing.assert_allclose(fc, fc[0])


def test_invalid_sigma():
    with pytest.raises(ValueError):
        PenaltyConfig(0.0)


def test_load_zero_data():
    mesh = MESHES[0]
    a, b = recovered_gradient_matrices(mesh)
    zero = example5()
    zero = type(zero)("zero", zero.domain, lambda x, y: 0 * x, zero.g1, zero.g2)
    np.testing.assert_array_equal(load_vector(mesh, zero, a, b, PenaltyConfig()), 0.0)


def test_load_unit_f_single_triangle(unit_triangle):
    a, b = recovered_gradient_matrices(unit_triangle)
    rhs = load_vector(unit_triangle, example5(), a, b, PenaltyConfig())
    np.testing.assert_allclose(rhs, 1 / 6, rtol=1e-14)


def test_load_penalty_part_supported_near_boundary():
    mesh = regular_grid(6)
    a, b = recovered_gradient_matrices(mesh)
    prob = example2()
    no_g2 = type(prob)("exm2-f", prob.domain, prob.f, prob.g1, lambda x, y, nx, ny: 0 * x)
    cfg = PenaltyConfig()
    pen_part = load_vector(mesh, prob, a, b, cfg) - load_vector(mesh, no_g2, a, b, cfg)
    support = np.asarray(abs(normal_trace_operator(mesh, a, b)).sum(axis=0)).ravel() > 0
    assert np.any(pen_part != 0)
    assert np.all(pen_part[~support] == 0)


def test_dirichlet_homogeneous():
    mesh = regular_grid(3)
    disc = discretize(mesh, example1())
    sys_ = disc.system(example1())
    interior = ~mesh.boundary_node_mask
    np.testing.assert_array_equal(sys_.rhs[interior], disc.rhs[interior])
    bnd = np.flatnonzero(mesh.boundary_node_mask)
    dense = sys_.matrix.toarray()
    np.testing.assert_array_equal(dense[bnd], np.eye(mesh.num_nodes)[bnd])
    assert np.all(sys_.rhs[bnd] == 0)
    assert abs(sys_.matrix - sys_.matrix.T).max() <= 1e-13 * abs(sys_.matrix).max()


def test_dirichlet_unit_values_without_coupling():
    k = sparse.identity(4, format="csr")
    out = apply_dirichlet(LinearSystem(k, np.zeros(4)), [0, 3], [1.0, 1.0])
    u = solve(out, SolverConfig("direct"))
    np.testing.assert_array_equal(u, [1.0, 0.0, 0.0, 1.0])


def test_dirichlet_matches_lagrange_constrained_solve(rng):
    m = rng.standard_normal((5, 5))
    k = m @ m.T + 5 * np.eye(5)
    f = rng.standard_normal(5)
    node, value = 2, 0.7
    reduced = apply_dirichlet(LinearSystem(sparse.csr_matrix(k), f), [node], [value])
    u = solve(reduced, SolverConfig("direct"))
    # oracle: saddle-point system with a multiplier for u[node] = value
    big = np.zeros((6, 6))
    big[:5, :5] = k
    big[5, node] = big[node, 5] = 1.0
    sol = np.linalg.solve(big, np.append(f, value))
    np.testing.assert_allclose(u, sol[:5], atol=1e-12)


@pytest.mark.parametrize("problem", [example1(), example2()])
def test_reduced_system_is_spd(problem):
    sys_ = discretize(regular_grid(4), problem).system(problem)
    dense = sys_.matrix.toarray()
    assert np.max(np.abs(dense - dense.T)) <= 1e-12 * np.abs(dense).max()
    assert np.linalg.eigvalsh(dense).min() > 0


@pytest.mark.parametrize("problem", [example1(), example2()])
def test_energy_is_minimised(problem, rng):
    mesh = regular_grid(8)
    disc = discretize(mesh, problem)
    u = solve(disc.system(problem), SolverConfig("direct"))
    j0 = disc.energy(u)
    interior = ~mesh.boundary_node_mask
    for _ in range(20):
        v = np.where(interior, rng.standard_normal(mesh.num_nodes), 0.0)
        for eps in (1e-3, -1e-3):
            assert j0 <= disc.energy(u + eps * v)


def test_residual_after_solve():
    problem = example2()
    sys_ = discretize(regular_grid(8), problem).system(problem)
    u = solve(sys_, SolverConfig("cg"))
    assert np.linalg.norm(sys_.matrix @ u - sys_.rhs) <= 1e-10 * np.linalg.norm(sys_.rhs)
