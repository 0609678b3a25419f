"""Two-point boundary-value problems ``u^(p) - omega^2 u = f`` on [0, 1].

Order 4 (clamped beam): ``u(0) = u(1) = u'(0) = u'(1) = 0``.
Order 3: ``u(0) = u(1) = u'(0) = 0``.

Derivatives use 9-point finite-difference stencils (weights from Fornberg's
recursion) on a vertex grid ``j / M``; stencils shift to one side near the
boundary. Boundary conditions replace the equations at the boundary nodes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from mwt.errors import ResonanceError, ShapeError

STENCIL = 9
DEFAULT_OMEGA = 215.0
# Reciprocal condition number times M**order stays near 75 away from resonance
# and drops below 1e-2 at a discrete eigenfrequency, for every grid size.
RESONANCE_RCOND = 1e-1


def fd_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Weights ``c[d, j]`` approximating the ``d``-th derivative at ``z`` from
    values at ``x[j]``, for ``d = 0..m`` (Fornberg's algorithm)."""
    x = np.asarray(x, dtype=float)
    n = len(x) - 1
    c = np.zeros((m + 1, n + 1))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n + 1):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


@lru_cache(maxsize=None)
def derivative_matrix(M: int, order: int, width: int = STENCIL) -> np.ndarray:
    """Dense ``(M+1) x (M+1)`` matrix of the ``order``-th derivative on ``j / M``."""
    if M + 1 < width:
        raise ShapeError(f"grid with {M + 1} nodes is too small for a {width}-point stencil")
    h = 1.0 / M
    D = np.zeros((M + 1, M + 1))
    half = width // 2
    offsets = np.arange(width, dtype=float)
    for i in range(M + 1):
        lo = min(max(i - half, 0), M + 1 - width)
        D[i, lo:lo + width] = fd_weights(i - lo, offsets, order)[order] / h ** order
    D.setflags(write=False)
    return D


@dataclass(frozen=True)
class BeamOperator:
    M: int
    omega: float
    order: int
    matrix: np.ndarray
    lu: tuple
    eq_rows: np.ndarray


def _boundary_rows(M, order):
    """(row index, derivative order, node) triples for the boundary conditions."""
    rows = [(0, 0, 0), (M, 0, M), (1, 1, 0)]
    if order == 4:
        rows.append((M - 1, 1, M))
    return rows


@lru_cache(maxsize=32)
def beam_operator(M: int, omega: float, order: int) -> BeamOperator:
    if order not in (3, 4):
        raise ValueError(f"order must be 3 or 4, got {order}")
    A = derivative_matrix(M, order) - omega ** 2 * np.eye(M + 1)
    A = A * (1.0 / M) ** order
    eq = np.ones(M + 1, dtype=bool)
    for row, d, node in _boundary_rows(M, order):
        A[row] = 0.0
        if d == 0:
            A[row, node] = 1.0
        else:
            A[row] = derivative_matrix(M, 1)[node] / M
        eq[row] = False
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu = scipy.linalg.lu_factor(A)
        except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError, ValueError) as exc:
            raise ResonanceError(f"boundary-value system is singular at omega={omega}: {exc}") from exc
    rcond = scipy.linalg.lapack.dgecon(lu[0], np.linalg.norm(A, 1), norm="1")[0]
    if not np.isfinite(rcond) or rcond * float(M) ** order < RESONANCE_RCOND:
        raise ResonanceError(f"boundary-value system is singular at omega={omega} "
                             f"(scaled reciprocal condition {rcond * float(M) ** order:.2e})")
    A.setflags(write=False)
    return BeamOperator(M, omega, order, A, lu, np.flatnonzero(eq))


def solve_beam_dense(f_dense, omega: float = DEFAULT_OMEGA, order: int = 4, refine: int = 2):
    """Solve on the grid of ``f_dense`` (``M + 1`` nodes, trailing axis)."""
    f_dense = np.asarray(f_dense, dtype=float)
    M = f_dense.shape[-1] - 1
    op = beam_operator(M, float(omega), int(order))
    scale = (1.0 / M) ** order
    rhs = np.zeros_like(f_dense)
    rhs[..., op.eq_rows] = f_dense[..., op.eq_rows] * scale
    rhs2 = rhs.reshape(-1, M + 1).T
    u = scipy.linalg.lu_solve(op.lu, rhs2)
    for _ in range(refine):
        u += scipy.linalg.lu_solve(op.lu, rhs2 - op.matrix @ u)
    if not np.all(np.isfinite(u)):
        raise ResonanceError(f"non-finite solution at omega={omega}")
    return u.T.reshape(f_dense.shape)


def interior_residual(u_dense, f_dense, omega: float, order: int) -> float:
    """``||D u - omega^2 u - f|| / ||f||`` over the equation rows."""
    M = u_dense.shape[-1] - 1
    op = beam_operator(M, float(omega), int(order))
    r = (u_dense @ derivative_matrix(M, order).T - omega ** 2 * u_dense - f_dense)[..., op.eq_rows]
    return float(np.linalg.norm(r) / np.linalg.norm(f_dense[..., op.eq_rows]))


def solve_beam(f, omega: float = DEFAULT_OMEGA, order: int = 4, oversample: int = 4,
               f_func=None):
    """Solve for ``u`` on the output grid ``i / n``, ``i = 0..n-1``.

    The system is solved on a grid ``oversample`` times finer. The forcing on the
    fine grid comes from ``f_func(x)`` when given, else from periodic linear
    interpolation of the samples ``f`` (exact at the output nodes).
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    M = oversample * n
    x = np.arange(M + 1) / M
    if f_func is not None:
        f_dense = np.asarray(f_func(x), dtype=float)
    else:
        xs = np.arange(n + 1) / n
        ext = np.concatenate([f, f[..., :1]], axis=-1)
        f_dense = np.stack([np.interp(x, xs, row) for row in ext.reshape(-1, n + 1)])
        f_dense = f_dense.reshape(f.shape[:-1] + (M + 1,))
    u = solve_beam_dense(f_dense, omega, order)
    return u[..., :M:oversample]


def resonant_omegas(M: int, order: int, count: int = 3) -> np.ndarray:
    """Smallest real ``omega`` at which the discrete operator is singular."""
    A = derivative_matrix(M, order).copy()
    B = np.eye(M + 1)
    for row, d, node in _boundary_rows(M, order):
        A[row] = derivative_matrix(M, 1)[node] if d else np.eye(M + 1)[node]
        B[row] = 0.0
    vals = scipy.linalg.eigvals(A, B)
    vals = vals[np.isfinite(vals)]
    vals = vals[(np.abs(vals.imag) < 1e-6 * np.abs(vals)) & (vals.real > 0)].real
    return np.sqrt(np.sort(vals)[:count])
