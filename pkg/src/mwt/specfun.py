"""Shifted orthogonal polynomials on [0, 1] and their Gaussian quadrature rules.

Two families are supported:

* Legendre, weight ``w(x) = 1``;
* Chebyshev of the first kind, weight ``w(x) = 1 / sqrt(1 - (2x - 1)**2)``.

Polynomials are evaluated with their three-term recurrences in ``t = 2x - 1``.
The monomial coefficient tables kept on :class:`OrthoBasis` are for inspection
and exact-integration cross checks only.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

from mwt.errors import DomainError, OrderUnsupportedError

MAX_QUADRATURE_ORDER = 64
MAX_BASIS_ORDER = 6


class BasisKind(enum.Enum):
    LEGENDRE = "legendre"
    CHEBYSHEV = "chebyshev"

    @classmethod
    def parse(cls, value: "BasisKind | str") -> "BasisKind":
        if isinstance(value, cls):
            return value
        name = str(value).strip().lower()
        aliases = {"leg": "legendre", "cheb": "chebyshev", "chb": "chebyshev"}
        try:
            return cls(aliases.get(name, name))
        except ValueError:
            raise ValueError(f"unknown basis kind {value!r}; expected legendre or chebyshev") from None

    def weight(self, x):
        """Weight function on (0, 1)."""
        x = np.asarray(x, dtype=float)
        if self is BasisKind.LEGENDRE:
            return np.ones_like(x)
        return 1.0 / np.sqrt(1.0 - (2.0 * x - 1.0) ** 2)

    @property
    def total_weight(self) -> float:
        """Integral of the weight over [0, 1]."""
        return 1.0 if self is BasisKind.LEGENDRE else math.pi / 2


@dataclass(frozen=True)
class QuadratureRule:
    kind: BasisKind
    n: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f) -> float:
        """Approximate the weighted integral of ``f`` over [0, 1]."""
        return float(np.dot(self.weights, f(self.nodes)))


@dataclass(frozen=True)
class OrthoBasis:
    """The first ``k`` normalized shifted polynomials of one family.

    ``coeffs[i, p]`` is the coefficient of ``x**p`` in ``phi_i``.
    """

    kind: BasisKind
    k: int
    coeffs: np.ndarray

    def __call__(self, x):
        return eval_basis(self, x)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _legendre_pair(n, t):
    """Return (P_n(t), P_{n-1}(t), P_n'(t)) by the three-term recurrence."""
    p_prev = np.ones_like(t)
    p = t.copy()
    for m in range(1, n):
        p_prev, p = p, ((2 * m + 1) * t * p - m * p_prev) / (m + 1)
    dp = n * (t * p - p_prev) / (t * t - 1.0)
    return p, p_prev, dp


def _legendre_nodes(n: int):
    # Newton iteration seeded with Chebyshev nodes; roots are in decreasing t
    i = np.arange(1, n + 1)
    t = np.cos(np.pi * (i - 0.5) / n)
    if n == 1:
        return np.zeros(1)
    for _ in range(100):
        p, _, dp = _legendre_pair(n, t)
        step = p / dp
        t = t - step
        if np.max(np.abs(step)) < 1e-15:
            break
    return t


def make_quadrature(kind: BasisKind | str, n: int) -> QuadratureRule:
    """Gauss rule with ``n`` nodes for the weight of ``kind`` on [0, 1].

    Exact for polynomials of degree ``2n - 1``.
    """
    kind = BasisKind.parse(kind)
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= MAX_QUADRATURE_ORDER):
        raise OrderUnsupportedError(
            f"quadrature order must be in [1, {MAX_QUADRATURE_ORDER}], got {n!r}")
    return _make_quadrature(kind, int(n))


@lru_cache(maxsize=None)
def _make_quadrature(kind: BasisKind, n: int) -> QuadratureRule:
    if kind is BasisKind.LEGENDRE:
        t = _legendre_nodes(n)
        if n == 1:
            w = np.ones(1)
        else:
            _, p_prev, dp = _legendre_pair(n, t)
            w = 1.0 / (n * dp * p_prev)
    else:
        i = np.arange(1, n + 1)
        t = np.cos(np.pi * (i - 0.5) / n)
        w = np.full(n, np.pi / (2 * n))
    order = np.argsort(t)
    return QuadratureRule(kind, n, _readonly((t[order] + 1.0) / 2.0), _readonly(w[order]))


def _normalization(kind: BasisKind, k: int) -> np.ndarray:
    i = np.arange(k)
    if kind is BasisKind.LEGENDRE:
        return np.sqrt(2 * i + 1.0)
    out = np.full(k, 2.0 / math.sqrt(math.pi))
    out[0] = math.sqrt(2.0 / math.pi)
    return out


def _monomial_table(kind: BasisKind, k: int) -> np.ndarray:
    to_poly = npleg.leg2poly if kind is BasisKind.LEGENDRE else npcheb.cheb2poly
    norm = _normalization(kind, k)
    table = np.zeros((k, k))
    for i in range(k):
        unit = np.zeros(i + 1)
        unit[i] = 1.0
        in_t = to_poly(unit)
        in_x = np.zeros(1)
        for p, a in enumerate(in_t):
            in_x = nppoly.polyadd(in_x, a * nppoly.polypow([-1.0, 2.0], p))
        table[i, : len(in_x)] = norm[i] * in_x
    return table


def make_basis(kind: BasisKind | str, k: int) -> OrthoBasis:
    kind = BasisKind.parse(kind)
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= MAX_BASIS_ORDER):
        raise OrderUnsupportedError(f"basis order k must be in [1, {MAX_BASIS_ORDER}], got {k!r}")
    return _make_basis(kind, int(k))


@lru_cache(maxsize=None)
def _make_basis(kind: BasisKind, k: int) -> OrthoBasis:
    return OrthoBasis(kind, k, _readonly(_monomial_table(kind, k)))


def eval_basis(basis: OrthoBasis, x):
    """Evaluate ``phi_0 .. phi_{k-1}`` at ``x``.

    Returns an array of shape ``(k,) + np.shape(x)``. Raises :class:`DomainError`
    for points outside [0, 1].
    """
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("basis functions are defined on [0, 1] only")
    return _eval_recurrence(basis.kind, basis.k, x)


def _eval_recurrence(kind: BasisKind, k: int, x: np.ndarray) -> np.ndarray:
    t = 2.0 * x - 1.0
    out = np.empty((k,) + t.shape)
    out[0] = 1.0
    if k > 1:
        out[1] = t
    for m in range(1, k - 1):
        if kind is BasisKind.LEGENDRE:
            out[m + 1] = ((2 * m + 1) * t * out[m] - m * out[m - 1]) / (m + 1)
        else:
            out[m + 1] = 2.0 * t * out[m] - out[m - 1]
    norm = _normalization(kind, k)
    return out * norm.reshape((k,) + (1,) * t.ndim)
