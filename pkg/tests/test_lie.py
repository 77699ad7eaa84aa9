import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy.linalg import expm, logm

from manifold_kf.lie import (
    SO2,
    GroupElement,
    Product,
    RealN,
    compose,
    inverse,
    phi_series,
    wrap_to_pi,
)

SO2_R2 = Product(SO2(), RealN(2))
GROUPS = [SO2(), RealN(1), RealN(3), SO2_R2, Product(RealN(2), SO2(), SO2())]

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
angles = st.floats(-50.0, 50.0, allow_nan=False, allow_infinity=False)


def deg(x):
    return math.radians(x)


# -- wrap_to_pi ---------------------------------------------------------------


def test_wrap_examples():
    assert wrap_to_pi(0.0) == 0.0
    assert_allclose(wrap_to_pi(3 * math.pi / 2), -math.pi / 2, atol=1e-15)
    assert wrap_to_pi(math.pi) == -math.pi
    assert wrap_to_pi(-math.pi) == -math.pi


def test_wrap_seam_difference():
    # the short way across the seam is 4 degrees; sign follows the order of the difference
    assert_allclose(wrap_to_pi(deg(-178) - deg(178)), deg(4), atol=1e-12)
    assert_allclose(wrap_to_pi(deg(178) - deg(-178)), deg(-4), atol=1e-12)
    assert_allclose(abs(wrap_to_pi(deg(178) - deg(-178))), deg(4), atol=1e-12)


def test_wrap_array_matches_scalar():
    x = np.linspace(-20, 20, 1001)
    out = wrap_to_pi(x)
    assert_array_equal(out, [wrap_to_pi(float(v)) for v in x])


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_wrap_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        wrap_to_pi(bad)
    with pytest.raises(ValueError):
        wrap_to_pi(np.array([0.0, bad]))


@given(finite)
def test_wrap_range_and_congruence(x):
    y = wrap_to_pi(x)
    assert -math.pi <= y < math.pi
    k = (x - y) / (2 * math.pi)
    assert abs(k - round(k)) < 1e-9 * max(1.0, abs(x))


@given(finite)
def test_wrap_idempotent(x):
    y = wrap_to_pi(x)
    assert wrap_to_pi(y) == y


# -- group structure ----------------------------------------------------------


def test_dims():
    assert SO2().dim == 1
    assert RealN(4).dim == 4
    assert SO2_R2.dim == 3
    assert SO2_R2.tangent_dim == 3
    assert_array_equal(SO2_R2.angular_mask, [True, False, False])


def test_product_flattens():
    nested = Product(Product(SO2(), RealN(1)), RealN(1))
    assert nested.factors == (SO2(), RealN(1), RealN(1))
    assert nested.dim == 3
    assert nested == Product(SO2(), RealN(1), RealN(1))


@pytest.mark.parametrize("bad", [0, -2, 1.5])
def test_realn_validates(bad):
    with pytest.raises(ValueError):
        RealN(bad)


def test_empty_product_rejected():
    with pytest.raises(ValueError):
        Product()
    with pytest.raises(TypeError):
        Product(3)


def test_compose_examples():
    g = SO2()
    half = g.element([math.pi / 2])
    assert_array_equal(compose(half, half).coords, [-math.pi])
    a = SO2_R2.element([0.1, 1.0, 0.2])
    b = SO2_R2.element([0.2, 0.5, 0.1])
    assert_allclose((a @ b).coords, [0.3, 1.5, 0.3], atol=1e-15)


def test_compose_group_mismatch():
    with pytest.raises(ValueError):
        compose(SO2().identity(), RealN(1).identity())


def test_inverse_examples():
    assert_array_equal(inverse(SO2().element([0.7])).coords, [-0.7])
    assert inverse(SO2_R2.identity()) == SO2_R2.identity()
    g = Product(SO2(), RealN(1))
    assert_allclose(g.element([0.3, 1.5]).inverse().coords, [-0.3, -1.5])


def test_inverse_is_transpose_for_rotation():
    x = SO2().element([0.7])
    assert_allclose(x.inverse().matrix(), x.matrix().T, atol=1e-15)


def test_element_is_immutable():
    x = SO2_R2.element([0.1, 2.0, 3.0])
    with pytest.raises(AttributeError):
        x.coords = np.zeros(3)
    with pytest.raises(ValueError):
        x.coords[0] = 1.0


def test_element_wrong_length():
    with pytest.raises(ValueError):
        SO2_R2.element([1.0, 2.0])


def test_angle_property():
    assert SO2_R2.element([0.4, 1, 2]).angle == 0.4
    with pytest.raises(AttributeError):
        RealN(2).identity().angle


@pytest.mark.parametrize("G", GROUPS, ids=repr)
def test_group_axioms(G, rng):
    for _ in range(1000):
        a, b, c = (G.random(rng, scale=10.0) for _ in range(3))
        lhs, rhs = compose(compose(a, b), c), compose(a, compose(b, c))
        d = G.log_between(lhs, rhs)
        assert np.max(np.abs(d)) <= 1e-12
        assert np.max(np.abs(G.log(compose(a, inverse(a))))) <= 1e-12
        assert compose(a, G.identity()) == a


@pytest.mark.parametrize("G", GROUPS, ids=repr)
def test_compose_matches_matrix_product(G, rng):
    for _ in range(200):
        a, b = G.random(rng), G.random(rng)
        assert_allclose(compose(a, b).matrix(), a.matrix() @ b.matrix(), atol=1e-12)


def test_rotation_matrix_orthogonal(rng):
    for _ in range(1000):
        R = SO2().random(rng).matrix()
        assert_allclose(R.T @ R, np.eye(2), atol=1e-12)
        assert abs(np.linalg.det(R) - 1.0) <= 1e-12


# -- exp / log ----------------------------------------------------------------


def test_exp_log_examples():
    g = SO2()
    assert g.exp([0.0]) == g.identity()
    assert_allclose(g.exp([math.pi / 3]).coords, [math.pi / 3])
    assert_allclose(g.exp([0.4 + 2 * math.pi]).coords, g.exp([0.4]).coords, atol=1e-15)
    assert_array_equal(g.log(g.identity()), [0.0])
    assert_allclose(g.log(g.exp([math.pi / 3])), [math.pi / 3])
    assert_allclose(g.log(g.exp([3 * math.pi / 2])), [-math.pi / 2], atol=1e-15)


def test_exp_rejects_non_finite():
    with pytest.raises(ValueError):
        SO2_R2.exp([0.0, math.nan, 0.0])


def test_log_principal_branch_tie():
    g = SO2()
    assert_array_equal(g.log(g.exp([math.pi])), [-math.pi])


@pytest.mark.parametrize("G", GROUPS, ids=repr)
def test_exp_matches_matrix_exponential(G, rng):
    for _ in range(100):
        v = rng.normal(0.0, 3.0, G.dim)
        assert_allclose(G.exp(v).matrix(), expm(G.hat(v)), atol=1e-10)


@pytest.mark.parametrize("G", GROUPS, ids=repr)
def test_log_matches_matrix_logarithm(G, rng):
    for _ in range(50):
        x = G.random(rng)
        # stay off the branch cut where logm is ill-defined
        if np.any(np.abs(x.coords[G.angular_mask]) > 3.1):
            continue
        assert_allclose(G.vee(np.real(logm(x.matrix()))), G.log(x), atol=1e-9)


@pytest.mark.parametrize("G", GROUPS, ids=repr)
def test_from_matrix_roundtrip(G, rng):
    for _ in range(100):
        x = G.random(rng, scale=5.0)
        assert np.max(np.abs(G.log_between(G.from_matrix(x.matrix()), x))) <= 1e-12


@given(st.lists(angles, min_size=3, max_size=3))
def test_exp_log_roundtrip_property(values):
    v = np.array(values)
    canonical = v.copy()
    canonical[0] = wrap_to_pi(v[0])
    out = SO2_R2.log(SO2_R2.exp(v))
    assert np.max(np.abs(out - canonical)) <= 1e-12


# -- hat / vee ----------------------------------------------------------------


def test_hat_examples():
    assert_array_equal(SO2().hat([2.0]), [[0, -2], [2, 0]])
    assert_array_equal(SO2().hat([0.0]), np.zeros((2, 2)))
    assert_array_equal(RealN(1).hat([1.5]), [[0, 1.5], [0, 0]])


def test_hat_block_layout():
    m = SO2_R2.hat([0.3, 1.0, 2.0])
    expected = np.zeros((6, 6))
    expected[0:2, 0:2] = [[0, -0.3], [0.3, 0]]
    expected[2:4, 2:4] = [[0, 1.0], [0, 0]]
    expected[4:6, 4:6] = [[0, 2.0], [0, 0]]
    assert_array_equal(m, expected)


def test_vee_rejects_outside_algebra():
    m = SO2().hat([1.0])
    m[0, 0] = 1e-3
    with pytest.raises(ValueError):
        SO2().vee(m)
    with pytest.raises(ValueError):
        SO2().vee(np.zeros((3, 3)))


def test_vee_tolerates_tiny_residual():
    m = SO2().hat([1.0])
    m[0, 0] = 1e-12
    assert_array_equal(SO2().vee(m), [1.0])


@given(st.lists(finite, min_size=3, max_size=3))
def test_vee_hat_exact(values):
    assert_array_equal(SO2_R2.vee(SO2_R2.hat(values)), values)


@given(st.lists(finite, min_size=3, max_size=3), st.lists(finite, min_size=3, max_size=3), finite)
def test_hat_linear(a, b, s):
    a, b = np.array(a), np.array(b)
    assert_allclose(SO2_R2.hat(a + s * b), SO2_R2.hat(a) + s * SO2_R2.hat(b), rtol=1e-12, atol=1e-9)


# -- adjoints and the Phi series -----------------------------------------------


def test_adjoint_examples():
    assert_array_equal(SO2().Ad(SO2().element([1.2])), [[1.0]])
    assert_array_equal(SO2_R2.ad([0.3, 1.0, 2.0]), np.zeros((3, 3)))
    assert_array_equal(SO2_R2.Ad(SO2_R2.identity()), np.eye(3))


@pytest.mark.parametrize("G", GROUPS, ids=repr)
def test_generic_adjoints_agree_with_shortcut(G, rng):
    for _ in range(50):
        x = G.random(rng)
        v = rng.normal(size=G.dim)
        assert_allclose(G.Ad(x, generic=True), G.Ad(x), atol=1e-12)
        assert_array_equal(G.ad(v, generic=True), G.ad(v))
        assert_allclose(G.phi(v, generic=True), G.phi(v), atol=1e-15)


def test_phi_identity_on_abelian():
    assert_array_equal(SO2().phi([0.9], 3), [[1.0]])
    assert_array_equal(SO2_R2.phi([0.3, 1.0, 2.0]), np.eye(3))
    with pytest.raises(ValueError):
        SO2().phi([0.1], 0)


def _integral_of_exp(A):
    # int_0^1 exp(-sA) ds from the top-right block of an augmented exponential
    p = A.shape[0]
    M = np.zeros((2 * p, 2 * p))
    M[:p, :p] = -A
    M[:p, p:] = np.eye(p)
    return expm(M)[:p, p:]


def test_phi_series_direct_sum(rng):
    A = rng.normal(size=(3, 3))
    expected = sum(
        (-1) ** m * np.linalg.matrix_power(A, m) / math.factorial(m + 1) for m in range(11)
    )
    assert_allclose(phi_series(A, 10), expected, rtol=1e-14, atol=1e-14)


def test_phi_series_converges_to_integral(rng):
    A = 0.3 * rng.normal(size=(4, 4))
    assert_allclose(phi_series(A, 25), _integral_of_exp(A), atol=1e-13)


def test_phi_series_order_validation():
    with pytest.raises(ValueError):
        phi_series(np.zeros((2, 2)), 0)
