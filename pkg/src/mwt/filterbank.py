"""Multiwavelet bases and the two-scale filter matrices.

Everything is expressed in coordinates of the fine space ``V_1``: the basis
``sqrt(2) phi_j(2x)`` on the left half and ``sqrt(2) phi_j(2x - 1)`` on the right
half. In those coordinates ``phi_i`` is row ``i`` of ``[H0 H1]``, ``psi_i`` is row
``i`` of ``[G0 G1]``, and the inner product of the reference measure is the
block-diagonal Gram matrix ``diag(Sigma0, Sigma1)``. Orthonormality of the
scaling and wavelet functions is then exactly the filter constraint

    [H; G] diag(Sigma0, Sigma1) [H; G]^T = I.

The reference measure is realized by a 2k-point rule. For Legendre it is the
composite k-point Gauss-Legendre rule on each half interval, which integrates
piecewise polynomials exactly. For Chebyshev it is the 2k-point Gauss-Chebyshev
rule on [0, 1]; the even node count keeps x = 1/2 off the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as nppoly

from mwt.errors import DegenerateBasisError, FilterValidationError, OrderUnsupportedError
from mwt.specfun import (
    MAX_BASIS_ORDER,
    BasisKind,
    _eval_recurrence,
    make_basis,
    make_quadrature,
)

SQRT2 = math.sqrt(2.0)
CONSTRAINT_TOL = 1e-8
RANK_TOL = 1e-10


def _check_order(k):
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= MAX_BASIS_ORDER):
        raise OrderUnsupportedError(f"filter order k must be in [1, {MAX_BASIS_ORDER}], got {k!r}")
    return int(k)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def measure_rule(kind: BasisKind, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights realizing the reference measure for order ``k``."""
    kind = BasisKind.parse(kind)
    if kind is BasisKind.LEGENDRE:
        q = make_quadrature(kind, k)
        x = np.concatenate([q.nodes / 2, 0.5 + q.nodes / 2])
        w = np.concatenate([q.weights, q.weights]) / 2
    else:
        q = make_quadrature(kind, 2 * k)
        x, w = q.nodes, q.weights
    return _readonly(x), _readonly(w)


@dataclass(frozen=True)
class FilterBank:
    """Decomposition filters and correction matrices.

    ``kind`` is None for a random (non-derived) bank.
    """

    kind: BasisKind | None
    k: int
    H0: np.ndarray
    H1: np.ndarray
    G0: np.ndarray
    G1: np.ndarray
    Sigma0: np.ndarray
    Sigma1: np.ndarray
    seed: int | None = None

    def matrices(self) -> dict[str, np.ndarray]:
        return {"H0": self.H0, "H1": self.H1, "G0": self.G0, "G1": self.G1,
                "Sigma0": self.Sigma0, "Sigma1": self.Sigma1}


@dataclass(frozen=True)
class PiecewiseBasis:
    """Multiwavelets ``psi_0 .. psi_{k-1}`` on [0, 1].

    ``left[i, p]`` / ``right[i, p]`` are the monomial coefficients of ``x**p`` in
    ``psi_i`` on [0, 1/2) and [1/2, 1].
    """

    kind: BasisKind
    k: int
    left: np.ndarray
    right: np.ndarray
    _g0: np.ndarray = field(repr=False)
    _g1: np.ndarray = field(repr=False)

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        """Values of all ``psi_i`` at ``x``, shape ``(k,) + np.shape(x)``."""
        x = np.asarray(x, dtype=float)
        is_left = x < 0.5
        xl = np.clip(2.0 * x, 0.0, 1.0)
        xr = np.clip(2.0 * x - 1.0, 0.0, 1.0)
        pl = np.tensordot(self._g0, _eval_recurrence(self.kind, self.k, xl), axes=1)
        pr = np.tensordot(self._g1, _eval_recurrence(self.kind, self.k, xr), axes=1)
        return SQRT2 * np.where(is_left, pl, pr)

    def evaluate_monomial(self, x):
        """Same as :meth:`evaluate` but from the monomial tables."""
        x = np.asarray(x, dtype=float)
        pl = nppoly.polyval(x, self.left.T)
        pr = nppoly.polyval(x, self.right.T)
        return np.where(x < 0.5, pl, pr)


def _phi_at(kind, k, x):
    return _eval_recurrence(kind, k, np.asarray(x, dtype=float))


@lru_cache(maxsize=None)
def _derive(kind: BasisKind, k: int):
    q = make_quadrature(kind, 2 * k)
    xm, wm = q.nodes, q.weights
    phi_x = _phi_at(kind, k, xm)
    H0 = (_phi_at(kind, k, xm / 2) * wm) @ phi_x.T / SQRT2
    H1 = (_phi_at(kind, k, (xm + 1) / 2) * wm) @ phi_x.T / SQRT2

    if kind is BasisKind.LEGENDRE:
        S0 = np.eye(k)
        S1 = np.eye(k)
    else:
        x, w = measure_rule(kind, k)
        lo, hi = x < 0.5, x > 0.5
        pl = _phi_at(kind, k, 2 * x[lo])
        pr = _phi_at(kind, k, 2 * x[hi] - 1)
        S0 = 2.0 * (pl * w[lo]) @ pl.T
        S1 = 2.0 * (pr * w[hi]) @ pr.T
        S0 = (S0 + S0.T) / 2
        S1 = (S1 + S1.T) / 2

    metric = np.zeros((2 * k, 2 * k))
    metric[:k, :k] = S0
    metric[k:, k:] = S1
    phi_coords = np.hstack([H0, H1])

    psi_coords = []
    for i in range(k):
        seed = np.zeros(2 * k)
        seed[i] = 1.0
        v = seed.copy()
        # two passes of modified Gram-Schmidt
        for _ in range(2):
            for u in list(phi_coords) + psi_coords:
                v = v - (u @ metric @ v) * u
        norm = math.sqrt(max(v @ metric @ v, 0.0))
        if norm < RANK_TOL:
            raise DegenerateBasisError(f"Gram-Schmidt lost rank at psi_{i} (norm {norm:.3e})")
        v = v / norm
        left = v[:k]
        lead = np.flatnonzero(np.abs(left) > 1e-8 * np.abs(left).max())
        if left[lead[-1]] < 0:
            v = -v
        psi_coords.append(v)
    G = np.array(psi_coords)
    return H0, H1, G[:, :k], G[:, k:], S0, S1


def _monomials(kind, k, coords, right: bool):
    """Monomial table of sum_j coords[i, j] sqrt(2) phi_j(2x - right)."""
    table = make_basis(kind, k).coeffs
    shift = [-1.0, 2.0] if right else [0.0, 2.0]
    out = np.zeros((k, k))
    for j in range(k):
        pj = np.zeros(1)
        for p, a in enumerate(table[j]):
            pj = nppoly.polyadd(pj, a * nppoly.polypow(shift, p))
        pj = np.pad(pj, (0, k - len(pj)))[:k]
        out += SQRT2 * np.outer(coords[:, j], pj)
    return out


def derive_psi(kind: BasisKind | str, k: int) -> PiecewiseBasis:
    """Orthonormal multiwavelets of order ``k`` for the family ``kind``."""
    kind = BasisKind.parse(kind)
    k = _check_order(k)
    _, _, G0, G1, _, _ = _derive(kind, k)
    return PiecewiseBasis(
        kind, k,
        _readonly(_monomials(kind, k, G0, right=False)),
        _readonly(_monomials(kind, k, G1, right=True)),
        _readonly(G0), _readonly(G1),
    )


def build_filters(kind: BasisKind | str, k: int) -> FilterBank:
    kind = BasisKind.parse(kind)
    k = _check_order(k)
    fb = FilterBank(kind, k, *(_readonly(m) for m in _derive(kind, k)))
    residual = validate_filters(fb)
    if residual > CONSTRAINT_TOL:
        raise FilterValidationError(
            f"filter constraint residual {residual:.3e} exceeds {CONSTRAINT_TOL:g} "
            f"for {kind.value} k={k}")
    return fb


def validate_filters(fb: FilterBank) -> float:
    """Max entrywise deviation of ``[H;G] diag(Sigma) [H;G]^T`` from the identity."""
    k = fb.k
    M = np.block([[fb.H0, fb.H1], [fb.G0, fb.G1]])
    S = np.zeros((2 * k, 2 * k))
    S[:k, :k] = fb.Sigma0
    S[k:, k:] = fb.Sigma1
    return float(np.abs(M @ S @ M.T - np.eye(2 * k)).max())


def random_filters(k: int, seed: int) -> FilterBank:
    """Random filter bank with identity corrections.

    Entries are uniform on [-1, 1], then each matrix is divided by its spectral
    norm.
    """
    k = _check_order(k)
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(4):
        m = rng.uniform(-1.0, 1.0, size=(k, k))
        mats.append(_readonly(m / np.linalg.norm(m, 2)))
    eye = _readonly(np.eye(k))
    return FilterBank(None, k, *mats, eye, eye, seed=int(seed))


def make_filters(basis: str, k: int, seed: int = 0) -> FilterBank:
    """Filter bank by name: ``legendre``, ``chebyshev`` or ``random``."""
    if str(basis).lower() in ("random", "rnd"):
        return random_filters(k, seed)
    return build_filters(basis, k)
