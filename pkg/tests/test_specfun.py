import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mwt.errors import DomainError, OrderUnsupportedError
from mwt.specfun import BasisKind, eval_basis, make_basis, make_quadrature


def chebyshev_moment(m):
    # weighted moment of x**m on [0, 1]: (pi / 2) * C(2m, m) / 4**m
    return math.pi / 2 * math.comb(2 * m, m) / 4 ** m


def test_legendre_two_point_rule():
    q = make_quadrature("legendre", 2)
    r = 1 / (2 * math.sqrt(3))
    np.testing.assert_allclose(q.nodes, [0.5 - r, 0.5 + r], atol=1e-15)
    np.testing.assert_allclose(q.weights, [0.5, 0.5], atol=1e-15)


def test_chebyshev_weights_sum():
    q = make_quadrature("chebyshev", 5)
    assert abs(q.weights.sum() - math.pi / 2) < 1e-14
    np.testing.assert_allclose(q.weights, math.pi / 10)


def test_single_point_rule_is_midpoint():
    for kind in BasisKind:
        q = make_quadrature(kind, 1)
        assert q.nodes[0] == pytest.approx(0.5)
        assert q.weights[0] == pytest.approx(kind.total_weight)


@pytest.mark.parametrize("n", [0, 65, -1])
def test_quadrature_order_rejected(n):
    with pytest.raises(OrderUnsupportedError):
        make_quadrature("legendre", n)


@pytest.mark.parametrize("n", range(1, 9))
def test_quadrature_exact_on_monomials(n):
    leg = make_quadrature("legendre", n)
    cheb = make_quadrature("chebyshev", n)
    for m in range(2 * n):
        assert abs(leg.integrate(lambda x: x ** m) - 1 / (m + 1)) < 1e-12
        assert abs(cheb.integrate(lambda x: x ** m) - chebyshev_moment(m)) < 1e-12


def test_high_order_rule_nodes_sorted_inside():
    q = make_quadrature("legendre", 64)
    assert np.all(np.diff(q.nodes) > 0)
    assert 0 < q.nodes[0] and q.nodes[-1] < 1
    assert abs(q.weights.sum() - 1) < 1e-13


def test_basis_values_at_zero():
    leg = eval_basis(make_basis("legendre", 3), 0.0)
    np.testing.assert_allclose(leg, [1, -math.sqrt(3), math.sqrt(5)], atol=1e-14)
    cheb = eval_basis(make_basis("chebyshev", 3), 0.0)
    np.testing.assert_allclose(cheb, [math.sqrt(2 / math.pi), -2 / math.sqrt(math.pi), 2 / math.sqrt(math.pi)])


def test_chebyshev_closed_forms():
    x = np.linspace(0, 1, 11)
    vals = eval_basis(make_basis("chebyshev", 3), x)
    np.testing.assert_allclose(vals[1], 2 / math.sqrt(math.pi) * (2 * x - 1), atol=1e-14)
    np.testing.assert_allclose(vals[2], 2 / math.sqrt(math.pi) * (8 * x ** 2 - 8 * x + 1), atol=1e-14)


def test_recurrence_matches_monomial_table():
    x = np.linspace(0, 1, 17)
    for kind in BasisKind:
        b = make_basis(kind, 6)
        from_table = np.array([np.polynomial.polynomial.polyval(x, c) for c in b.coeffs])
        np.testing.assert_allclose(eval_basis(b, x), from_table, atol=1e-10)


@pytest.mark.parametrize("kind", list(BasisKind))
@pytest.mark.parametrize("k", range(1, 7))
def test_basis_orthonormal(kind, k):
    b = make_basis(kind, k)
    q = make_quadrature(kind, k + 1)
    phi = eval_basis(b, q.nodes)
    gram = (phi * q.weights) @ phi.T
    assert np.abs(gram - np.eye(k)).max() < 1e-12


def test_domain_error_outside_unit_interval():
    b = make_basis("legendre", 2)
    for bad in (-1e-9, 1.5, np.nan):
        with pytest.raises(DomainError):
            eval_basis(b, bad)


def test_basis_order_rejected():
    with pytest.raises(OrderUnsupportedError):
        make_basis("chebyshev", 7)


def test_kind_aliases():
    assert BasisKind.parse("Cheb") is BasisKind.CHEBYSHEV
    assert BasisKind.parse("leg") is BasisKind.LEGENDRE
    with pytest.raises(ValueError):
        BasisKind.parse("hermite")


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(list(BasisKind)), st.integers(1, 20), st.lists(st.floats(-3, 3), min_size=1, max_size=8))
def test_rule_integrates_random_polynomials(kind, n, coeffs):
    coeffs = coeffs[: 2 * n]
    q = make_quadrature(kind, n)
    approx = q.integrate(lambda x: np.polynomial.polynomial.polyval(x, coeffs))
    if kind is BasisKind.LEGENDRE:
        exact = sum(c / (m + 1) for m, c in enumerate(coeffs))
    else:
        exact = sum(c * chebyshev_moment(m) for m, c in enumerate(coeffs))
    assert abs(approx - exact) < 1e-11 * (1 + sum(abs(c) for c in coeffs))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1), st.integers(1, 6))
def test_basis_shape(x, k):
    b = make_basis("legendre", k)
    assert eval_basis(b, x).shape == (k,)
    assert eval_basis(b, np.full((2, 3), x)).shape == (k, 2, 3)
