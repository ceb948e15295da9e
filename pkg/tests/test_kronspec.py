import math

import numpy as np
import pytest

from fcgl import fracfd, kronspec
from fcgl.tensorops import vec

from oracles import (
    dense_kron_sum,
    exp_action_dense,
    matrix_function_dense,
    phi_action_dense,
    phi_series_hp,
    resolvent_action_dense,
)


def crandn(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def make_operator(dims, alphas=None, coefficient=1 + 1j, fd_order=2, h=0.2):
    alphas = alphas or [1.2, 1.8, 1.5, 1.4][: len(dims)]
    ops = tuple(fracfd.build_operator(a, fd_order, n, h) for a, n in zip(alphas, dims))
    return kronspec.KronSumOperator(coefficient, ops)


def dense_K(op):
    return dense_kron_sum([op.a_matrix(mu) for mu in range(1, op.d + 1)])


class TestApplyK:
    def test_zero(self):
        op = make_operator((3, 4))
        u = np.zeros((3, 4), dtype=complex)
        np.testing.assert_array_equal(kronspec.apply_K(op, u), u)

    @pytest.mark.parametrize("dims", [(3, 3), (2, 3, 4)])
    def test_against_dense(self, rng, dims):
        op = make_operator(dims)
        kd = dense_K(op)
        u = crandn(rng, dims)
        lhs = vec(kronspec.apply_K(op, u))
        rhs = kd @ vec(u)
        assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()

    def test_dim_mismatch(self, rng):
        op = make_operator((3, 4))
        with pytest.raises(ValueError):
            kronspec.apply_K(op, crandn(rng, (4, 3)))


class TestEigenTensor:
    def test_d1_is_scaled_spectrum(self):
        op = make_operator((5,), alphas=[1.5], coefficient=2 + 3j)
        cache = kronspec.SpectralCache(op)
        expected = (2 + 3j) * fracfd.eigendecompose(op.ops[0]).eigenvalues
        np.testing.assert_allclose(cache.eigen, expected, rtol=1e-14)

    def test_matches_dense_spectrum_as_multiset(self, rng):
        op = make_operator((3, 3))
        cache = kronspec.SpectralCache(op)
        ours = np.sort_complex(vec(cache.eigen))
        dense = np.sort_complex(np.linalg.eigvals(dense_K(op)))
        assert np.abs(ours - dense).max() <= 1e-10 * np.abs(dense).max()

    def test_real_negative_for_real_coefficient(self):
        op = make_operator((4, 5), coefficient=1.0 + 0.0j)
        cache = kronspec.SpectralCache(op)
        assert np.abs(cache.eigen.imag).max() == 0.0
        assert cache.eigen.real.max() < 0.0


class TestFilters:
    def test_constant_one(self, rng):
        cache = kronspec.SpectralCache(make_operator((3, 4)))
        f = cache.build_filter(lambda z: np.ones_like(z), 0.3)
        np.testing.assert_array_equal(f, np.ones((3, 4)))

    def test_resolvent_filter_definition(self):
        cache = kronspec.SpectralCache(make_operator((4, 4)))
        theta = 2.0 * 0.04 / 3.0  # 2 tau / 3 for tau = 0.04
        filt = cache.resolvent_filter(theta)
        np.testing.assert_allclose(filt, 1.0 / (1.0 - theta * cache.eigen), rtol=1e-15)

    def test_phi_filter_matches_series_oracle(self):
        cache = kronspec.SpectralCache(make_operator((3, 3)))
        theta = 0.05
        filt = cache.phi_filter(1, theta)
        expected = np.array([[phi_series_hp(1, theta * z) for z in row] for row in cache.eigen.T]).T
        np.testing.assert_allclose(filt, expected, rtol=1e-13)

    def test_reuse_is_bitwise(self):
        cache = kronspec.SpectralCache(make_operator((4, 5)))
        a = cache.phi_filter(2, 0.125)
        b = cache.phi_filter(2, 0.125)
        assert a is b
        c = cache.resolvent_filter(0.125)
        d = cache.resolvent_filter(0.125)
        assert c is d and not np.shares_memory(a, c)

    def test_pole_reports_offending_eigenvalue(self):
        cache = kronspec.SpectralCache(make_operator((3, 3), coefficient=1.0 + 0.0j))
        lam = cache.eigen[1, 2]
        with pytest.raises(ArithmeticError, match="eigenvalue"):
            cache.build_filter(lambda z: 1.0 / (z - 1.0 * lam), 1.0)


class TestApplyFilter:
    def test_all_ones_filter_is_identity(self, rng):
        cache = kronspec.SpectralCache(make_operator((4, 4)))
        v = crandn(rng, (4, 4))
        ones = cache.build_filter(lambda z: np.ones_like(z), 1.0)
        np.testing.assert_allclose(cache.apply_filter(ones, v), v, rtol=1e-12, atol=1e-13)

    def test_resolvent_matches_dense_solve(self, rng):
        op = make_operator((4, 4))
        cache = kronspec.SpectralCache(op)
        theta = 0.1
        v = crandn(rng, (4, 4))
        got = vec(cache.apply_filter(cache.resolvent_filter(theta), v))
        want = resolvent_action_dense(theta, dense_K(op), vec(v))
        assert np.abs(got - want).max() <= 1e-12 * np.abs(want).max()

    def test_exp_filter_matches_dense_expm_3d(self, rng):
        op = make_operator((2, 2, 3))
        cache = kronspec.SpectralCache(op)
        theta = 0.05
        v = crandn(rng, (2, 2, 3))
        got = vec(cache.apply_filter(cache.build_filter(np.exp, theta), v))
        want = exp_action_dense(theta, dense_K(op), vec(v))
        assert np.abs(got - want).max() <= 1e-12 * np.abs(want).max()


FUNCTIONS = {
    "resolvent": (lambda z: 1.0 / (1.0 - z), resolvent_action_dense),
    "exp": (np.exp, exp_action_dense),
    "phi1": (lambda z: kronspec.phi_scalar(1, z), lambda th, k, v: phi_action_dense(1, th, k, v)),
    "phi2": (lambda z: kronspec.phi_scalar(2, z), lambda th, k, v: phi_action_dense(2, th, k, v)),
    "phi3": (lambda z: kronspec.phi_scalar(3, z), lambda th, k, v: phi_action_dense(3, th, k, v)),
}


@pytest.mark.parametrize("name", list(FUNCTIONS))
@pytest.mark.parametrize("dims", [(6,), (4, 5), (3, 3, 4)])
def test_oracle_equivalence(rng, name, dims):
    """apply_filter against dense matrix-function oracles, several random
    (theta, v) pairs per combination (the acceptance suite runs 20)."""
    f, oracle = FUNCTIONS[name]
    op = make_operator(dims)
    cache = kronspec.SpectralCache(op)
    kd = dense_K(op)
    for _ in range(5):
        theta = float(rng.uniform(0.01, 0.5))
        v = crandn(rng, dims)
        got = vec(cache.apply_filter(cache.build_filter(f, theta), v))
        want = oracle(theta, kd, vec(v))
        assert np.abs(got - want).max() <= 1e-11 * np.abs(want).max()


def test_general_function_against_eig_oracle(rng):
    """A function outside the integrator set, checked against a dense
    diagonalization with numpy's general eigensolver."""
    op = make_operator((4, 3))
    cache = kronspec.SpectralCache(op)
    f = lambda z: np.sqrt(1.0 - z)
    theta = 0.2
    v = crandn(rng, (4, 3))
    got = vec(cache.apply_filter(cache.build_filter(f, theta), v))
    want = matrix_function_dense(f, theta, dense_K(op), vec(v))
    assert np.abs(got - want).max() <= 1e-10 * np.abs(want).max()


class TestPhiScalar:
    def test_values_at_zero(self):
        assert kronspec.phi_scalar(0, 0.0) == 1.0
        assert kronspec.phi_scalar(1, 0.0) == 1.0
        assert kronspec.phi_scalar(2, 0.0) == 0.5
        assert kronspec.phi_scalar(3, 0.0) == pytest.approx(1.0 / 6.0, rel=1e-15)

    def test_phi1_closed_form(self):
        assert kronspec.phi_scalar(1, 1.0) == pytest.approx(math.e - 1.0, rel=1e-15)

    def test_tiny_argument_no_cancellation(self):
        z = 1e-8 * (1 + 1j)
        got = kronspec.phi_scalar(2, z)
        want = phi_series_hp(2, z)
        assert abs(got - want) <= 1e-14 * abs(want)

    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_recurrence_consistency_on_rays(self, ell):
        # z phi_ell(z) + 1/(ell-1)! = phi_{ell-1}(z) along diagonal rays.
        # The identity adds an O(1) constant, so in the far left half-plane
        # (phi_0 = e^z underflows) it can only hold to absolute accuracy at
        # the constant's scale; hence the atol floor.
        radii = np.logspace(-12, 3, 40)
        for direction in (1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j):
            z = radii * (direction / abs(direction))
            lhs = z * kronspec.phi_scalar(ell, z) + 1.0 / math.factorial(ell - 1)
            rhs = kronspec.phi_scalar(ell - 1, z)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 / math.factorial(ell - 1))

    def test_vectorized_matches_scalar(self, rng):
        z = crandn(rng, (7,)) * 3.0
        batch = kronspec.phi_scalar(2, z)
        single = np.array([kronspec.phi_scalar(2, zz) for zz in z])
        np.testing.assert_array_equal(batch, single)

    def test_rejects_negative_ell(self):
        with pytest.raises(ValueError):
            kronspec.phi_scalar(-1, 0.5)


class TestApplyExp:
    def test_theta_zero_identity(self, rng):
        cache = kronspec.SpectralCache(make_operator((3, 4)))
        v = crandn(rng, (3, 4))
        np.testing.assert_allclose(cache.apply_exp(0.0, v), v, rtol=1e-13, atol=1e-14)

    def test_matches_filter_route(self, rng):
        cache = kronspec.SpectralCache(make_operator((4, 4)))
        v = crandn(rng, (4, 4))
        theta = 0.07
        via_filter = cache.apply_filter(cache.build_filter(np.exp, theta), v)
        via_product = cache.apply_exp(theta, v)
        assert np.abs(via_filter - via_product).max() <= 1e-12 * np.abs(via_product).max()

    def test_matches_dense(self, rng):
        op = make_operator((4, 4))
        cache = kronspec.SpectralCache(op)
        v = crandn(rng, (4, 4))
        got = vec(cache.apply_exp(0.3, v))
        want = exp_action_dense(0.3, dense_K(op), vec(v))
        assert np.abs(got - want).max() <= 1e-12 * np.abs(want).max()

    def test_semigroup(self, rng):
        cache = kronspec.SpectralCache(make_operator((3, 5)))
        v = crandn(rng, (3, 5))
        a = cache.apply_exp(0.1, cache.apply_exp(0.25, v))
        b = cache.apply_exp(0.35, v)
        assert np.abs(a - b).max() <= 1e-12 * np.abs(b).max()


class TestSmallExponential:
    def test_theta_zero(self):
        cache = kronspec.SpectralCache(make_operator((5, 3)))
        np.testing.assert_allclose(cache.small_exponential(1, 0.0), np.eye(5), atol=1e-14)

    def test_against_dense_expm(self):
        import scipy.linalg
        op = make_operator((3, 4), alphas=[2.0, 1.5])
        cache = kronspec.SpectralCache(op)
        got = cache.small_exponential(1, 0.2)
        want = scipy.linalg.expm(0.2 * op.a_matrix(1))
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-13)

    def test_contraction_for_positive_theta(self):
        op = make_operator((6, 4), coefficient=0.7 + 1.3j)
        cache = kronspec.SpectralCache(op)
        norm = np.linalg.norm(cache.small_exponential(1, 0.4), ord=2)
        assert norm <= 1.0 + 1e-12


def test_coefficient_requires_positive_real_part():
    ops = (fracfd.build_operator(1.5, 2, 4, 0.1),)
    with pytest.raises(ValueError):
        kronspec.KronSumOperator(-1.0 + 1j, ops)
