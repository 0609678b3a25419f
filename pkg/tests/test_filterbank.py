import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mwt.errors import OrderUnsupportedError
from mwt.filterbank import (
    build_filters,
    derive_psi,
    make_filters,
    measure_rule,
    random_filters,
    validate_filters,
)
from mwt.specfun import BasisKind, eval_basis, make_basis

R2 = math.sqrt(2)
R3 = math.sqrt(3)
R5 = math.sqrt(5)
R15 = math.sqrt(15)

# Chebyshev k=3 multiwavelets as printed (4 decimals), rows are x**2, x, 1
CHEB_PSI_LEFT = [[0, 4.9749, -0.5560], [58.3516, -22.6187, 0.9326], [59.0457, -23.7328, 1.0941]]
CHEB_PSI_RIGHT = [[0, 4.9749, -4.4189], [58.3516, -94.0846, 36.6655], [-59.0457, 94.3586, -36.4070]]


def test_legendre_k1_is_haar():
    fb = build_filters("legendre", 1)
    for m in (fb.H0, fb.H1):
        assert m[0, 0] == pytest.approx(1 / R2, abs=1e-15)
    assert fb.G0[0, 0] == pytest.approx(1 / R2, abs=1e-15)
    assert fb.G1[0, 0] == pytest.approx(-1 / R2, abs=1e-15)


def test_legendre_k3_psi_closed_form():
    psi = derive_psi("legendre", 3)
    x = np.linspace(0, 1, 41)
    left = x <= 0.5
    expected = np.array([
        np.where(left, 6 * x - 1, 6 * x - 5),
        np.where(left, R3 * (30 * x ** 2 - 14 * x + 1), R3 * (30 * x ** 2 - 46 * x + 17)),
        np.where(left, R5 * (24 * x ** 2 - 12 * x + 1), R5 * (-24 * x ** 2 + 36 * x - 13)),
    ])
    # x = 1/2 belongs to the left piece in the closed form
    x_eval = np.where(x == 0.5, 0.5 - 1e-15, x)
    np.testing.assert_allclose(psi.evaluate(x_eval), expected, atol=1e-12)
    np.testing.assert_allclose(psi.evaluate_monomial(x_eval), expected, atol=1e-12)


def test_chebyshev_k3_psi_printed_coefficients():
    psi = derive_psi("chebyshev", 3)
    np.testing.assert_allclose(psi.left[:, ::-1], CHEB_PSI_LEFT, atol=5e-4)
    np.testing.assert_allclose(psi.right[:, ::-1], CHEB_PSI_RIGHT, atol=5e-4)


def test_chebyshev_psi0_value():
    assert derive_psi("chebyshev", 3).evaluate(0.25)[0] == pytest.approx(0.6877, abs=1e-4)


def test_chebyshev_k3_scaling_filters_exact():
    fb = build_filters("chebyshev", 3)
    H0 = [[1 / R2, 0, 0], [-0.5, 1 / (2 * R2), 0], [-0.25, -1 / R2, 1 / (4 * R2)]]
    H1 = [[1 / R2, 0, 0], [0.5, 1 / (2 * R2), 0], [-0.25, 1 / R2, 1 / (4 * R2)]]
    np.testing.assert_allclose(fb.H0, H0, atol=1e-12)
    np.testing.assert_allclose(fb.H1, H1, atol=1e-12)


def test_legendre_sigma_identity():
    for k in range(1, 7):
        fb = build_filters("legendre", k)
        np.testing.assert_array_equal(fb.Sigma0, np.eye(k))
        np.testing.assert_array_equal(fb.Sigma1, np.eye(k))


@pytest.mark.parametrize("kind", list(BasisKind))
@pytest.mark.parametrize("k", range(1, 7))
def test_filter_constraint(kind, k):
    assert validate_filters(build_filters(kind, k)) < 1e-10


@pytest.mark.parametrize("kind", list(BasisKind))
@pytest.mark.parametrize("k", range(1, 7))
def test_psi_orthonormal_and_orthogonal_to_phi(kind, k):
    x, w = measure_rule(kind, k)
    psi = derive_psi(kind, k).evaluate(x)
    phi = eval_basis(make_basis(kind, k), x)
    np.testing.assert_allclose((psi * w) @ psi.T, np.eye(k), atol=1e-10)
    assert np.abs((psi * w) @ phi.T).max() < 1e-10


def test_sigma_symmetric_positive_definite():
    fb = build_filters("chebyshev", 5)
    for S in (fb.Sigma0, fb.Sigma1):
        np.testing.assert_allclose(S, S.T, atol=0)
        assert np.linalg.eigvalsh(S).min() > 0


def test_chebyshev_sigma_mirror_symmetry():
    # reflecting x -> 1 - x flips the sign of odd-index couplings
    fb = build_filters("chebyshev", 4)
    sign = (-1.0) ** np.add.outer(np.arange(4), np.arange(4))
    np.testing.assert_allclose(fb.Sigma1, sign * fb.Sigma0, atol=1e-13)


def test_random_bank_violates_constraint():
    fb = random_filters(4, seed=3)
    assert fb.kind is None
    assert validate_filters(fb) > 1e-3
    for m in (fb.H0, fb.H1, fb.G0, fb.G1):
        assert np.linalg.norm(m, 2) == pytest.approx(1.0)


def test_random_bank_deterministic():
    a, b = random_filters(3, 11), random_filters(3, 11)
    np.testing.assert_array_equal(a.G1, b.G1)
    assert not np.array_equal(a.G1, random_filters(3, 12).G1)


def test_make_filters_by_name():
    assert make_filters("random", 2, seed=1).kind is None
    assert make_filters("leg", 2).kind is BasisKind.LEGENDRE


@pytest.mark.parametrize("k", [0, 7, 2.5])
def test_order_rejected(k):
    with pytest.raises(OrderUnsupportedError):
        build_filters("legendre", k)


def test_filters_readonly():
    fb = build_filters("legendre", 2)
    with pytest.raises(ValueError):
        fb.H0[0, 0] = 1.0


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(list(BasisKind)), st.integers(1, 6), st.integers(0, 5))
def test_vanishing_moments(kind, k, i):
    i = min(i, k - 1)
    x, w = measure_rule(kind, k)
    psi = derive_psi(kind, k).evaluate(x)
    assert np.abs(psi @ (w * x ** i)).max() < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.floats(0, 1))
def test_psi_stable_and_monomial_routes_agree(k, x):
    psi = derive_psi("legendre", k)
    np.testing.assert_allclose(psi.evaluate(x), psi.evaluate_monomial(x), atol=1e-8)
