"""Differentiable primitives with hand-written backward passes.

Arrays are channel-last: ``(batch, *spatial, channels)``. Every ``*_forward``
returns ``(output, cache)`` and the matching ``*_backward`` takes
``(cache, grad_output)`` and returns the input gradient followed by
parameter gradients.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


def linear_forward(x, W, b=None):
    y = x @ W
    if b is not None:
        y = y + b
    return y, x


def linear_backward(x, g, W, with_bias=True):
    cin, cout = W.shape
    gW = x.reshape(-1, cin).T @ g.reshape(-1, cout)
    gx = g @ W.T
    gb = g.reshape(-1, cout).sum(axis=0) if with_bias else None
    return gx, gW, gb


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(mask, g):
    return g * mask


def conv_offsets(width: int, dim: int):
    r = width // 2
    base = range(-r, width - r)
    return list(itertools.product(base, repeat=dim))


def conv_forward(x, W, offsets):
    """Circular convolution over the spatial axes.

    ``W`` has shape ``(len(offsets), cin, cout)``;
    ``y[i] = sum_o x[i + o] @ W[o]`` with periodic wrap-around.
    """
    dim = x.ndim - 2
    axes = tuple(range(1, dim + 1))
    y = None
    for o, w in zip(offsets, W):
        shifted = np.roll(x, tuple(-v for v in o), axis=axes) if any(o) else x
        term = shifted @ w
        y = term if y is None else y + term
    return y, x


def conv_backward(x, g, W, offsets):
    dim = x.ndim - 2
    axes = tuple(range(1, dim + 1))
    cin = x.shape[-1]
    cout = g.shape[-1]
    g2 = g.reshape(-1, cout)
    gW = np.empty_like(W)
    gx = np.zeros_like(x)
    for idx, (o, w) in enumerate(zip(offsets, W)):
        shifted = np.roll(x, tuple(-v for v in o), axis=axes) if any(o) else x
        gW[idx] = shifted.reshape(-1, cin).T @ g2
        back = g @ w.T
        gx += np.roll(back, o, axis=axes) if any(o) else back
    return gx, gW


@lru_cache(maxsize=64)
def _dft_tables(n: int, modes: int):
    m = np.arange(modes)[:, None]
    i = np.arange(n)[None, :]
    ang = 2.0 * math.pi * m * i / n
    cos, sin = np.cos(ang), np.sin(ang)
    c = np.full((modes, 1), 2.0)
    c[0] = 1.0
    if n % 2 == 0 and modes - 1 == n // 2:
        c[-1] = 1.0
    tables = (cos, sin, c * cos / n, -c * sin / n)
    for t in tables:
        t.setflags(write=False)
    return tables


def spectral_forward(x, Wr, Wi):
    """Truncated Fourier convolution along the single spatial axis.

    Keeps the lowest ``min(modes, n // 2 + 1)`` modes; ``Wr``/``Wi`` are the real
    and imaginary parts of complex weights with shape ``(modes, cin, cout)``.
    """
    n = x.shape[1]
    used = min(Wr.shape[0], n // 2 + 1)
    cos, sin, icos, isin = _dft_tables(n, used)
    xr = np.einsum("mn,bnc->bmc", cos, x)
    xi = -np.einsum("mn,bnc->bmc", sin, x)
    wr, wi = Wr[:used], Wi[:used]
    zr = np.einsum("bmc,mcd->bmd", xr, wr) - np.einsum("bmc,mcd->bmd", xi, wi)
    zi = np.einsum("bmc,mcd->bmd", xr, wi) + np.einsum("bmc,mcd->bmd", xi, wr)
    y = np.einsum("mn,bmd->bnd", icos, zr) + np.einsum("mn,bmd->bnd", isin, zi)
    return y, (xr, xi, n, used)


def spectral_backward(cache, g, Wr, Wi):
    xr, xi, n, used = cache
    cos, sin, icos, isin = _dft_tables(n, used)
    wr, wi = Wr[:used], Wi[:used]
    gzr = np.einsum("mn,bnd->bmd", icos, g)
    gzi = np.einsum("mn,bnd->bmd", isin, g)
    gWr = np.zeros_like(Wr)
    gWi = np.zeros_like(Wi)
    gWr[:used] = np.einsum("bmc,bmd->mcd", xr, gzr) + np.einsum("bmc,bmd->mcd", xi, gzi)
    gWi[:used] = np.einsum("bmc,bmd->mcd", xr, gzi) - np.einsum("bmc,bmd->mcd", xi, gzr)
    gxr = np.einsum("bmd,mcd->bmc", gzr, wr) + np.einsum("bmd,mcd->bmc", gzi, wi)
    gxi = np.einsum("bmd,mcd->bmc", gzi, wr) - np.einsum("bmd,mcd->bmc", gzr, wi)
    gx = np.einsum("mn,bmc->bnc", cos, gxr) - np.einsum("mn,bmc->bnc", sin, gxi)
    return gx, gWr, gWi
