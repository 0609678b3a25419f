"""Multiscale decomposition / reconstruction and non-standard kernel projection.

Coefficient arrays follow the layout ``(k, 2**n)`` in 1-D and
``(k, k, 2**n, 2**n)`` in 2-D. In 2-D there are three detail types per scale,
ordered (H x G, G x H, G x G) for (first axis, second axis), so a 2-D detail
array has shape ``(3, k, k, 2**n, 2**n)``.

Flattened vectors (used by :class:`KernelProjection`) are translation-major:
entry ``l * k + j`` holds polynomial index ``j`` of cell ``l``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mwt.errors import KernelEvaluationError, ScaleError, ShapeError
from mwt.filterbank import FilterBank
from mwt.specfun import _eval_recurrence, make_quadrature


def _log2_exact(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ShapeError(f"length {n} is not a power of two")
    return n.bit_length() - 1


@dataclass
class MultiresCoeffs:
    """Multiscale (``s``) and multiwavelet (``d``) coefficients keyed by scale."""

    k: int
    N: int
    L: int
    s: dict[int, np.ndarray] = field(default_factory=dict)
    d: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def ndim(self) -> int:
        return self.s[self.N].ndim // 2


@dataclass(frozen=True)
class KronBank:
    """Tensor-product filters for 2-D transforms.

    ``dec[(p, q)][(a, b)]`` is the ``k**2 x k**2`` matrix ``P^(a) (x) Q^(b)``
    with ``p, q`` in ``"HG"`` and child position ``(a, b)``; ``sigma[(a, b)]`` is
    ``Sigma^(a) (x) Sigma^(b)``.
    """

    k: int
    dec: dict
    sigma: dict

    DETAIL_TYPES = (("H", "G"), ("G", "H"), ("G", "G"))


def kron_bank(fb: FilterBank) -> KronBank:
    one = {"H": (fb.H0, fb.H1), "G": (fb.G0, fb.G1)}
    sig = (fb.Sigma0, fb.Sigma1)
    dec = {}
    for p in "HG":
        for q in "HG":
            dec[(p, q)] = {(a, b): np.kron(one[p][a], one[q][b]) for a in (0, 1) for b in (0, 1)}
    sigma = {(a, b): np.kron(sig[a], sig[b]) for a in (0, 1) for b in (0, 1)}
    return KronBank(fb.k, dec, sigma)


def _check_levels(N, L):
    if not (0 <= L < N):
        raise ScaleError(f"coarsest scale L={L} must satisfy 0 <= L < N={N}")


# -- 1-D ---------------------------------------------------------------------

def _dec1(fb, s):
    even, odd = s[:, 0::2], s[:, 1::2]
    return fb.H0 @ even + fb.H1 @ odd, fb.G0 @ even + fb.G1 @ odd


def _rec1(fb, s, d):
    out = np.empty((s.shape[0], 2 * s.shape[1]))
    out[:, 0::2] = fb.Sigma0 @ (fb.H0.T @ s + fb.G0.T @ d)
    out[:, 1::2] = fb.Sigma1 @ (fb.H1.T @ s + fb.G1.T @ d)
    return out


# -- 2-D ---------------------------------------------------------------------

def _dec2(kb, s):
    k = kb.k
    m = s.shape[-1]
    flat = s.reshape(k * k, m, m)
    child = {(a, b): flat[:, a::2, b::2] for a in (0, 1) for b in (0, 1)}

    def apply(pq):
        mats = kb.dec[pq]
        out = sum(np.tensordot(mats[ab], child[ab], axes=1) for ab in child)
        return out.reshape(k, k, m // 2, m // 2)

    s_new = apply(("H", "H"))
    d_new = np.stack([apply(t) for t in KronBank.DETAIL_TYPES])
    return s_new, d_new


def _rec2(kb, s, d):
    k = kb.k
    m = s.shape[-1]
    sf = s.reshape(k * k, m, m)
    df = d.reshape(3, k * k, m, m)
    out = np.empty((k * k, 2 * m, 2 * m))
    for a in (0, 1):
        for b in (0, 1):
            acc = np.tensordot(kb.dec[("H", "H")][(a, b)].T, sf, axes=1)
            for t, pq in enumerate(KronBank.DETAIL_TYPES):
                acc = acc + np.tensordot(kb.dec[pq][(a, b)].T, df[t], axes=1)
            out[:, a::2, b::2] = np.tensordot(kb.sigma[(a, b)], acc, axes=1)
    return out.reshape(k, k, 2 * m, 2 * m)


def decompose(fb: FilterBank, s_fine, L: int = 0) -> MultiresCoeffs:
    """Decompose finest-scale coefficients down to the coarsest scale ``L``.

    ``s_fine`` has shape ``(k, 2**N)`` (1-D) or ``(k, k, 2**N, 2**N)`` (2-D).
    """
    s_fine = np.asarray(s_fine, dtype=float)
    k = fb.k
    if s_fine.ndim == 2:
        if s_fine.shape[0] != k:
            raise ShapeError(f"expected leading dimension k={k}, got shape {s_fine.shape}")
        N = _log2_exact(s_fine.shape[1])
        step = lambda s: _dec1(fb, s)  # noqa: E731
    elif s_fine.ndim == 4:
        if s_fine.shape[:2] != (k, k) or s_fine.shape[2] != s_fine.shape[3]:
            raise ShapeError(f"expected shape (k, k, M, M) with k={k}, got {s_fine.shape}")
        N = _log2_exact(s_fine.shape[2])
        kb = kron_bank(fb)
        step = lambda s: _dec2(kb, s)  # noqa: E731
    else:
        raise ShapeError(f"expected a 2-D or 4-D coefficient array, got ndim={s_fine.ndim}")
    _check_levels(N, L)
    out = MultiresCoeffs(k, N, L)
    out.s[N] = s_fine
    s = s_fine
    for n in range(N - 1, L - 1, -1):
        s, d = step(s)
        out.s[n] = s
        out.d[n] = d
    return out


def reconstruct(fb: FilterBank, coeffs: MultiresCoeffs) -> np.ndarray:
    """Rebuild the finest-scale coefficients from ``s^L`` and ``d^L .. d^{N-1}``."""
    k, N, L = coeffs.k, coeffs.N, coeffs.L
    if k != fb.k:
        raise ShapeError(f"coefficients have k={k}, filter bank has k={fb.k}")
    _check_levels(N, L)
    s = np.asarray(coeffs.s[L], dtype=float)
    two_d = s.ndim == 4
    kb = kron_bank(fb) if two_d else None
    for n in range(L, N):
        d = np.asarray(coeffs.d[n], dtype=float)
        m = 2 ** n
        want_s = (k, k, m, m) if two_d else (k, m)
        want_d = (3,) + want_s if two_d else want_s
        if s.shape != want_s or d.shape != want_d:
            raise ShapeError(f"scale {n}: got s{s.shape}, d{d.shape}; expected s{want_s}, d{want_d}")
        s = _rec2(kb, s, d) if two_d else _rec1(fb, s, d)
    return s


# -- kernel projection ---------------------------------------------------------

def _flatten(c):
    """(k, m) -> translation-major vector of length k*m."""
    return np.ascontiguousarray(c.T).reshape(-1)


def _unflatten(v, k):
    return v.reshape(-1, k).T


def _level_matrices(fb: FilterBank, n: int):
    """Dense one-level analysis (S, D) and synthesis (Rs, Rd) at fine scale n+1."""
    k = fb.k
    m = 2 ** n
    size = k * 2 ** (n + 1)
    eye = np.eye(size)
    S = np.empty((k * m, size))
    D = np.empty((k * m, size))
    for col in range(size):
        s, d = _dec1(fb, _unflatten(eye[:, col], k))
        S[:, col] = _flatten(s)
        D[:, col] = _flatten(d)
    Rs = np.empty((size, k * m))
    Rd = np.empty((size, k * m))
    zero = np.zeros((k, m))
    small = np.eye(k * m)
    for col in range(k * m):
        unit = _unflatten(small[:, col], k)
        Rs[:, col] = _flatten(_rec1(fb, unit, zero))
        Rd[:, col] = _flatten(_rec1(fb, zero, unit))
    return S, D, Rs, Rd


def finest_projection_matrix(fb: FilterBank, N: int):
    """Quadrature nodes on [0, 1] and the matrix mapping node values to ``s^N``.

    Each of the ``2**N`` cells carries the 2k-point rule of the filter family.
    Returns ``(nodes, P)`` with ``P`` of shape ``(k * 2**N, len(nodes))``.
    """
    k = fb.k
    if fb.kind is None:
        raise ValueError("kernel projection needs a derived (non-random) filter bank")
    q = make_quadrature(fb.kind, 2 * k)
    m = 2 ** N
    nodes = ((np.arange(m)[:, None] + q.nodes[None, :]) / m).reshape(-1)
    phi = _eval_recurrence(fb.kind, k, q.nodes)  # (k, Q)
    local = phi * q.weights * 2.0 ** (-N / 2)
    P = np.zeros((k * m, nodes.size))
    Q = q.n
    for cell in range(m):
        P[cell * k:(cell + 1) * k, cell * Q:(cell + 1) * Q] = local
    return nodes, P


@dataclass
class KernelProjection:
    """Non-standard form of an integral kernel.

    ``A[i], B[i], C[i]`` (``i = L+1 .. N``) act on the coefficients at scale
    ``i - 1``: ``A`` maps wavelet to wavelet, ``B`` scaling to wavelet, ``C``
    wavelet to scaling. ``T_bar`` maps ``s^L`` to ``s^L``. ``T_fine`` is the dense
    finest-scale matrix the blocks were derived from.
    """

    k: int
    N: int
    L: int
    threshold: float
    A: dict[int, np.ndarray]
    B: dict[int, np.ndarray]
    C: dict[int, np.ndarray]
    T_bar: np.ndarray
    T_fine: np.ndarray
    filters: FilterBank = field(repr=False)

    def masks(self) -> dict[str, dict[int, np.ndarray]]:
        out = {name: {i: np.abs(blk) > self.threshold for i, blk in getattr(self, name).items()}
               for name in "ABC"}
        out["T"] = {self.L: np.abs(self.T_bar) > self.threshold}
        return out

    def fraction_above(self, name: str, i: int | None = None) -> float:
        blocks = getattr(self, name)
        chosen = [blocks[i]] if i is not None else list(blocks.values())
        total = sum(b.size for b in chosen)
        return float(sum(np.count_nonzero(np.abs(b) > self.threshold) for b in chosen) / total)

    def apply(self, s_fine: np.ndarray) -> np.ndarray:
        """Apply the operator to ``s^N`` (shape ``(k, 2**N)``) via the blocks.

        Returns the finest-scale coefficients of the output.
        """
        fb = self.filters
        c = decompose(fb, s_fine, self.L)
        u_d, u_shat = {}, {}
        for i in range(self.L + 1, self.N + 1):
            d = _flatten(c.d[i - 1])
            s = _flatten(c.s[i - 1])
            u_d[i - 1] = _unflatten(self.A[i] @ d + self.B[i] @ s, self.k)
            u_shat[i - 1] = _unflatten(self.C[i] @ d, self.k)
        u = _unflatten(self.T_bar @ _flatten(c.s[self.L]), self.k)
        for n in range(self.L, self.N):
            u = _rec1(fb, u + u_shat[n], u_d[n])
        return u


def project_kernel(K, fb: FilterBank, N: int, L: int = 0, threshold: float = 1e-8) -> KernelProjection:
    """Project the kernel ``K(x, y)`` on [0, 1]^2 into non-standard form.

    The finest-scale matrix is computed by tensor-product quadrature (2k-point
    rule per cell and variable); coarser blocks follow from one-level
    transforms of it, which for piecewise-polynomial bases is the same as
    integrating against the scaled ``phi``/``psi`` at every scale.
    """
    if N > 8:
        raise ScaleError(f"dense kernel projection supports N <= 8, got {N}")
    _check_levels(N, L)
    nodes, P = finest_projection_matrix(fb, N)
    X, Y = np.meshgrid(nodes, nodes, indexing="ij")
    kmat = np.asarray(K(X, Y), dtype=float)
    if kmat.shape != X.shape:
        kmat = np.broadcast_to(kmat, X.shape)
    if not np.all(np.isfinite(kmat)):
        raise KernelEvaluationError("kernel produced non-finite values")
    T = P @ kmat @ P.T
    A, B, C = {}, {}, {}
    current = T
    for n in range(N - 1, L - 1, -1):
        S, D, Rs, Rd = _level_matrices(fb, n)
        A[n + 1] = D @ current @ Rd
        B[n + 1] = D @ current @ Rs
        C[n + 1] = S @ current @ Rd
        current = S @ current @ Rs
    return KernelProjection(fb.k, N, L, float(threshold), A, B, C, current, T, fb)
