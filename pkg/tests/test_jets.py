import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rfem import jets
from rfem.jets import MULTI_INDICES, Jet4

_STENCILS = {
    0: [1.0],
    1: [-0.5, 0.0, 0.5],
    2: [1.0, -2.0, 1.0],
    3: [-0.5, 1.0, 0.0, -1.0, 0.5],
    4: [1.0, -4.0, 6.0, -4.0, 1.0],
}


def fd_derivative(fn, x, y, a, b, h=1e-2):
    """d^{a+b} fn / dx^a dy^b by tensor central differences in long double,
    Richardson-extrapolated twice from steps h, 2h and 4h (error O(h^6)).

    Smaller steps lose to round-off on fourth derivatives even in long
    double (eps * 16 / h^4 ~ 1e-6 at h = 1e-3)."""

    def central(step):
        step = np.longdouble(step)
        sx, sy = _STENCILS[a], _STENCILS[b]
        mx, my = len(sx) // 2, len(sy) // 2
        total = np.longdouble(0)
        for i, cx in enumerate(sx):
            for j, cy in enumerate(sy):
                if cx == 0 or cy == 0:
                    continue
                px = np.longdouble(x) + (i - mx) * step
                py = np.longdouble(y) + (j - my) * step
                total += np.longdouble(cx) * np.longdouble(cy) * fn(px, py)
        return total / step ** (a + b)

    d1, d2, d4 = central(h), central(2 * h), central(4 * h)
    r1, r2 = (4 * d1 - d2) / 3, (4 * d2 - d4) / 3
    return float((16 * r1 - r2) / 15)


def _check_all_coefficients(jet, fn, x, y, rtol=1e-5):
    scale = max(abs(jet.d(a, b)) for a, b in MULTI_INDICES)
    for a, b in MULTI_INDICES:
        ref = fd_derivative(fn, x, y, a, b)
        assert abs(jet.d(a, b) - ref) <= rtol * max(abs(ref), 1e-3 * scale), (a, b)


def test_monomial_x2y2():
    x, y = Jet4.variables(1.0, 1.0)
    u = x**2 * y**2
    assert u.d(2, 2) == pytest.approx(4.0)
    assert u.bilaplacian == pytest.approx(8.0)
    assert u.value == pytest.approx(1.0)
    assert u.d(4, 0) == 0.0


def test_affine_has_no_higher_derivatives():
    x, y = Jet4.variables(np.array([0.2, -1.3]), np.array([0.7, 2.0]))
    u = 3.0 - 2.0 * x + 0.5 * y
    for a, b in MULTI_INDICES:
        if a + b >= 2:
            np.testing.assert_array_equal(u.d(a, b), 0.0)
    np.testing.assert_allclose(u.gradient, [[-2.0, 0.5], [-2.0, 0.5]])


def test_smooth_example_matches_finite_differences():
    x, y = Jet4.variables(0.3, 0.7)
    u = jets.sin(math.pi * x) ** 2 * jets.sin(math.pi * y) ** 2
    fn = lambda px, py: np.sin(np.pi * px) ** 2 * np.sin(np.pi * py) ** 2
    _check_all_coefficients(u, fn, 0.3, 0.7)


# pool of (jet expression, long-double evaluator) on x, y in [0.5, 1.5]
_POOL = [
    (lambda x, y: jets.exp(0.7 * x - 0.4 * y), lambda x, y: np.exp(0.7 * x - 0.4 * y)),
    (lambda x, y: jets.sin(x * y), lambda x, y: np.sin(x * y)),
    (lambda x, y: jets.cos(2 * x + y), lambda x, y: np.cos(2 * x + y)),
    (lambda x, y: jets.log(x + y * y), lambda x, y: np.log(x + y * y)),
    (lambda x, y: jets.power(x * x + y * y, 0.77), lambda x, y: (x * x + y * y) ** np.longdouble(0.77)),
    (lambda x, y: jets.sqrt(x + 2 * y), lambda x, y: np.sqrt(x + 2 * y)),
    (lambda x, y: 1.0 / (1.0 + x * y), lambda x, y: 1 / (1 + x * y)),
    (lambda x, y: jets.atan2(y, x), lambda x, y: np.arctan2(y, x)),
    (lambda x, y: (x - y) ** 3, lambda x, y: (x - y) ** 3),
]


def test_product_rule_on_random_pairs(rng):
    for _ in range(50):
        i, j = rng.integers(len(_POOL), size=2)
        px, py = rng.uniform(0.5, 1.5, size=2)
        (f_jet, f_np), (g_jet, g_np) = _POOL[i], _POOL[j]
        x, y = Jet4.variables(px, py)
        prod = f_jet(x, y) * g_jet(x, y)
        _check_all_coefficients(prod, lambda a, b: f_np(a, b) * g_np(a, b), px, py)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 1.5), st.floats(0.5, 1.5), st.integers(0, len(_POOL) - 1))
def test_quotient_consistency(px, py, k):
    x, y = Jet4.variables(px, py)
    f = _POOL[k][0](x, y) + 3.0  # keep away from zero
    one = f * (1.0 / f)
    assert one.value == pytest.approx(1.0)
    for a, b in MULTI_INDICES[1:]:
        assert abs(one.d(a, b)) <= 1e-9 * max(1.0, abs(f.d(a, b)))


def test_vectorised_batch_matches_scalar():
    xs = np.array([[0.1, 0.4], [0.9, 1.3]])
    ys = np.array([[0.2, 0.5], [0.3, 0.8]])
    x, y = Jet4.variables(xs, ys)
    u = jets.exp(x) * jets.cos(y)
    for idx in np.ndindex(xs.shape):
        xs1, ys1 = Jet4.variables(xs[idx], ys[idx])
        single = jets.exp(xs1) * jets.cos(ys1)
        np.testing.assert_allclose(u.c[(slice(None),) + idx], single.c, rtol=1e-15)


def test_numpy_scalar_on_the_left():
    x, _ = Jet4.variables(0.5, 0.5)
    left = np.float64(2.0) * x
    assert isinstance(left, Jet4)
    assert left.d(1, 0) == 2.0


def test_power_rejects_nonpositive_base():
    x, y = Jet4.variables(0.0, 0.0)
    with pytest.raises(ValueError):
        jets.power(x * x + y * y, 0.75)
    with pytest.raises(ValueError):
        jets.log(x)
    # integer powers are fine anywhere
    assert (x**3).d(3, 0) == pytest.approx(6.0)


def test_atan2_branch():
    # branch starting at -pi/4 returns angles in [-pi/4, 7pi/4)
    xs = np.array([1.0, -1.0, 0.0, 0.5])
    ys = np.array([-0.5, -0.01, -1.0, -0.1])
    x, y = Jet4.variables(xs, ys)
    theta = jets.atan2(y, x, branch_start=-np.pi / 4).value
    expected = np.mod(np.arctan2(ys, xs) + np.pi / 4, 2 * np.pi) - np.pi / 4
    np.testing.assert_allclose(theta, expected, rtol=1e-15)
    assert np.all((theta >= -np.pi / 4) & (theta < 7 * np.pi / 4))


def test_wrong_coefficient_count():
    with pytest.raises(ValueError):
        Jet4(np.zeros(10))
