"""Steady Darcy flow ``-div(a grad u) = f`` on the unit square, ``u = 0`` on the boundary.

Vertex grid ``(i / M, j / M)``, ``i, j = 0..M``. The five-point conservative
stencil uses arithmetic means of ``a`` at cell faces; the symmetric positive
definite interior system is solved by Jacobi-preconditioned conjugate gradients.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from mwt.errors import EllipticityError, ShapeError, SolverError

CG_RTOL = 1e-10
HIGH, LOW = 12.0, 3.0


def threshold_coefficient(field, high: float = HIGH, low: float = LOW):
    """Binary coefficient: ``high`` where ``field >= 0``, else ``low``."""
    return np.where(np.asarray(field) >= 0, high, low)


def darcy_matrix(a: np.ndarray) -> sp.csr_matrix:
    """Interior operator for a coefficient given on the full ``(M+1)^2`` grid."""
    M = a.shape[0] - 1
    n = M - 1
    h2 = 1.0 / M ** 2
    ax = 0.5 * (a[1:, :] + a[:-1, :])   # faces between rows i and i+1
    ay = 0.5 * (a[:, 1:] + a[:, :-1])   # faces between columns j and j+1
    idx = np.arange(n * n).reshape(n, n)
    west = ax[:-1, 1:-1]     # face (i-1/2, j) for interior i = 1..n
    east = ax[1:, 1:-1]      # face (i+1/2, j)
    south = ay[1:-1, :-1]
    north = ay[1:-1, 1:]
    diag = (west + east + south + north) / h2
    rows = [idx.ravel()]
    cols = [idx.ravel()]
    vals = [diag.ravel()]
    s_, e_ = slice(1, None), slice(None, -1)
    a_ = slice(None)
    links = (
        (idx[s_, a_], idx[e_, a_], west[s_, a_]),    # west neighbour
        (idx[e_, a_], idx[s_, a_], east[e_, a_]),    # east neighbour
        (idx[a_, s_], idx[a_, e_], south[a_, s_]),   # south neighbour
        (idx[a_, e_], idx[a_, s_], north[a_, e_]),   # north neighbour
    )
    for src, dst, c in links:
        rows.append(src.ravel())
        cols.append(dst.ravel())
        vals.append(-c.ravel() / h2)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n * n, n * n))


def solve_darcy(a, f=1.0, rtol: float = CG_RTOL, maxiter: int | None = None) -> np.ndarray:
    """Solution on the full ``(M+1)^2`` vertex grid, zero on the boundary.

    ``a`` is given on the same grid; ``f`` is a scalar or a grid array.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 3:
        raise ShapeError(f"coefficient must be a square grid with at least 3 nodes, got {a.shape}")
    if not np.all(np.isfinite(a)) or a.min() <= 0:
        raise EllipticityError(f"coefficient must be strictly positive, min is {a.min():g}")
    M = a.shape[0] - 1
    f_full = np.broadcast_to(np.asarray(f, dtype=float), a.shape)
    b = f_full[1:-1, 1:-1].ravel().copy()
    u = np.zeros_like(a)
    if not np.any(b):
        return u
    A = darcy_matrix(a)
    precond = sp.diags(1.0 / A.diagonal())
    sol, info = spla.cg(A, b, rtol=rtol, atol=0.0, M=precond,
                        maxiter=maxiter or 20 * A.shape[0])
    if info != 0:
        raise SolverError(f"conjugate gradients did not converge (info={info})")
    if np.linalg.norm(A @ sol - b) > 10 * rtol * np.linalg.norm(b):
        raise SolverError("conjugate gradients stopped above the residual tolerance")
    u[1:-1, 1:-1] = sol.reshape(M - 1, M - 1)
    return u
