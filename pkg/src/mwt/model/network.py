"""Multiwavelet neural operator with an explicit reverse pass.

Per sample, the lifted field holds ``g`` groups of ``k**dim`` multiscale
coefficients at every grid point. Each layer runs the decomposition ladder down
to the coarsest scale ``L``, mixes coefficients with the learned maps

    Ud^n = A(d^n) + B(s^n),   Us_hat^n = C(d^n),   Us^L = T(s^L)

and then reconstructs, adding ``Us_hat^n`` to the running scaling coefficients
before every reconstruction step. Detail arrays carry one extra axis of detail
types (one in 1-D, three in 2-D).
"""
from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass

import numpy as np

from mwt.errors import ConfigError, ShapeError
from mwt.filterbank import FilterBank, make_filters
from mwt.model import ops
from mwt.transform import KronBank, kron_bank


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyper-parameters.

    ``groups`` is the number of independent coefficient blocks per grid point,
    so the working channel count is ``groups * k**dim``. ``modes`` switches
    A/B/C from plain convolution to a truncated Fourier convolution (1-D only).
    ``head`` inserts a hidden ReLU layer of that width before the projection.
    """

    basis: str = "legendre"
    k: int = 4
    dim: int = 1
    layers: int = 2
    L: int = 0
    groups: int = 1
    width: int = 3
    hidden: int | None = None
    modes: int | None = None
    head: int | None = None
    activation: bool = True
    filter_seed: int = 0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if self.layers < 1 or self.groups < 1 or self.width < 1 or self.L < 0:
            raise ConfigError("layers, groups and width must be positive and L non-negative")
        if self.head is not None and self.head < 1:
            raise ConfigError("head width must be positive")
        if self.modes is not None and (self.dim != 1 or self.modes < 1):
            raise ConfigError("spectral convolution needs dim=1 and modes >= 1")

    @property
    def kk(self) -> int:
        return self.k ** self.dim

    @property
    def channels(self) -> int:
        return self.groups * self.kk

    @property
    def n_types(self) -> int:
        return 1 if self.dim == 1 else 3

    @property
    def hidden_channels(self) -> int:
        return self.hidden or self.channels

    def to_dict(self):
        return asdict(self)


class _Ladder:
    """Child-position filters for one decomposition / reconstruction step."""

    def __init__(self, fb: FilterBank, dim: int):
        if dim == 1:
            self.children = [(0,), (1,)]
            self.H = [fb.H0, fb.H1]
            self.G = [[fb.G0, fb.G1]]
            self.Sigma = [fb.Sigma0, fb.Sigma1]
        else:
            kb: KronBank = kron_bank(fb)
            self.children = [(a, b) for a in (0, 1) for b in (0, 1)]
            self.H = [kb.dec[("H", "H")][c] for c in self.children]
            self.G = [[kb.dec[t][c] for c in self.children] for t in KronBank.DETAIL_TYPES]
            self.Sigma = [kb.sigma[c] for c in self.children]
        self.dim = dim

    def _slices(self, c):
        return (slice(None),) + tuple(slice(a, None, 2) for a in c)

    def dec(self, x):
        """``x``: (B, *sp, g, kk) -> s (B, *sp/2, g, kk), d (B, *sp/2, T, g, kk)."""
        parts = [x[self._slices(c)] for c in self.children]
        s = sum(p @ H.T for p, H in zip(parts, self.H))
        d = np.stack([sum(p @ Gc.T for p, Gc in zip(parts, Gt)) for Gt in self.G], axis=-3)
        return s, d

    def dec_backward(self, gs, gd, shape):
        gx = np.empty(shape)
        for i, c in enumerate(self.children):
            acc = gs @ self.H[i]
            for t, Gt in enumerate(self.G):
                acc = acc + gd[..., t, :, :] @ Gt[i]
            gx[self._slices(c)] = acc
        return gx

    def rec(self, s, d):
        shape = (s.shape[0],) + tuple(2 * n for n in s.shape[1:-2]) + s.shape[-2:]
        x = np.empty(shape)
        for i, c in enumerate(self.children):
            acc = s @ self.H[i]
            for t, Gt in enumerate(self.G):
                acc = acc + d[..., t, :, :] @ Gt[i]
            x[self._slices(c)] = acc @ self.Sigma[i]
        return x

    def rec_backward(self, gx):
        gs = 0.0
        gd = []
        for i, c in enumerate(self.children):
            gpre = gx[self._slices(c)] @ self.Sigma[i].T
            gs = gs + gpre @ self.H[i].T
            gd.append([gpre @ Gt[i].T for Gt in self.G])
        gd = np.stack([sum(gd[i][t] for i in range(len(self.children)))
                       for t in range(len(self.G))], axis=-3)
        return gs, gd


def _uniform(rng, shape, fan_in):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class OperatorModel:
    """Lift, cascaded multiwavelet layers with ReLU in between, project."""

    def __init__(self, config: ModelConfig, params: dict | None = None, seed: int = 0,
                 filters: FilterBank | None = None):
        self.config = config
        self.filters = filters if filters is not None else make_filters(
            config.basis, config.k, seed=config.filter_seed)
        if self.filters.k != config.k:
            raise ConfigError("filter bank order does not match config.k")
        self._ladder = _Ladder(self.filters, config.dim)
        self._offsets = ops.conv_offsets(config.width, config.dim)
        self.params = params if params is not None else self.init_params(seed)
        self._check_params()

    # -- parameters ----------------------------------------------------------

    def param_shapes(self) -> dict[str, tuple]:
        cfg = self.config
        C, T, H = cfg.channels, cfg.n_types, cfg.hidden_channels
        shapes = {"lift.W": (1, C), "lift.b": (C,)}
        io = {"A": (T * C, T * C), "B": (C, T * C), "C": (T * C, C)}
        for i in range(cfg.layers):
            for name, (cin, cout) in io.items():
                p = f"layer{i}.{name}"
                if cfg.modes is None:
                    shapes[f"{p}.conv"] = (len(self._offsets), cin, H)
                else:
                    shapes[f"{p}.spec_re"] = (cfg.modes, cin, H)
                    shapes[f"{p}.spec_im"] = (cfg.modes, cin, H)
                shapes[f"{p}.lin"] = (H, cout)
            shapes[f"layer{i}.T"] = (C, C)
        if cfg.head is not None:
            shapes["head.W"] = (C, cfg.head)
            shapes["head.b"] = (cfg.head,)
        shapes["proj.W"] = (cfg.head or C, 1)
        shapes["proj.b"] = (1,)
        return shapes

    def init_params(self, seed: int = 0) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        out = {}
        for name, shape in self.param_shapes().items():
            if name.endswith(".conv"):
                fan_in = shape[0] * shape[1]
            elif ".spec_" in name:
                fan_in = shape[1]
            elif name.endswith(".b"):
                fan_in = self.param_shapes()[name[:-1] + "W"][0]
            else:
                fan_in = shape[0]
            out[name] = _uniform(rng, shape, fan_in)
        return out

    def _check_params(self):
        shapes = self.param_shapes()
        if set(shapes) != set(self.params):
            raise ConfigError("parameter names do not match the architecture")
        for name, shape in shapes.items():
            if self.params[name].shape != shape:
                raise ConfigError(f"parameter {name} has shape {self.params[name].shape}, expected {shape}")

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy(self) -> "OperatorModel":
        return OperatorModel(self.config, {k: v.copy() for k, v in self.params.items()},
                             filters=self.filters)

    def zero_(self):
        for v in self.params.values():
            v[...] = 0.0
        return self

    # -- shape handling ------------------------------------------------------

    def levels(self, shape) -> int:
        """Number of decomposition steps per layer for a sample of ``shape``."""
        cfg = self.config
        shape = tuple(shape)
        if len(shape) != cfg.dim:
            raise ShapeError(f"expected a {cfg.dim}-D sample, got shape {shape}")
        if cfg.dim == 2 and shape[0] != shape[1]:
            raise ShapeError(f"2-D input must be square, got {shape}")
        n = shape[0]
        if n < 2 or n & (n - 1):
            raise ShapeError(f"input length {n} is not a power of two")
        N = n.bit_length() - 1
        if N < cfg.L + 1:
            raise ShapeError(f"input length {n} too short for coarsest scale L={cfg.L}")
        return N - cfg.L

    def _batch(self, a):
        a = np.asarray(a, dtype=float)
        single = a.ndim == self.config.dim
        if single:
            a = a[None]
        self.levels(a.shape[1:])
        return a, single

    # -- one layer -----------------------------------------------------------

    def _net_forward(self, prefix, x):
        P = self.params
        if self.config.modes is None:
            h, c1 = ops.conv_forward(x, P[prefix + ".conv"], self._offsets)
        else:
            h, c1 = ops.spectral_forward(x, P[prefix + ".spec_re"], P[prefix + ".spec_im"])
        y, c2 = ops.linear_forward(h, P[prefix + ".lin"])
        return y, (c1, c2)

    def _net_backward(self, prefix, cache, g, grads):
        P = self.params
        c1, c2 = cache
        gh, gW, _ = ops.linear_backward(c2, g, P[prefix + ".lin"], with_bias=False)
        grads[prefix + ".lin"] += gW
        if self.config.modes is None:
            gx, gC = ops.conv_backward(c1, gh, P[prefix + ".conv"], self._offsets)
            grads[prefix + ".conv"] += gC
        else:
            gx, gr, gi = ops.spectral_backward(c1, gh, P[prefix + ".spec_re"], P[prefix + ".spec_im"])
            grads[prefix + ".spec_re"] += gr
            grads[prefix + ".spec_im"] += gi
        return gx

    def _layer_forward(self, i, x, n_levels):
        cfg = self.config
        lad = self._ladder
        g, kk, T = cfg.groups, cfg.kk, cfg.n_types
        p = f"layer{i}"
        caches = []
        ud_list, us_list = [], []
        s = x
        shapes = []
        for _ in range(n_levels):
            shapes.append(s.shape)
            s_new, d = lad.dec(s)
            sp = s_new.shape[:-2]
            d_flat = d.reshape(sp + (T * g * kk,))
            s_flat = s_new.reshape(sp + (g * kk,))
            a_out, ca = self._net_forward(p + ".A", d_flat)
            b_out, cb = self._net_forward(p + ".B", s_flat)
            c_out, cc = self._net_forward(p + ".C", d_flat)
            ud_list.append((a_out + b_out).reshape(d.shape))
            us_list.append(c_out.reshape(s_new.shape))
            caches.append((ca, cb, cc))
            s = s_new
        s_flat = s.reshape(s.shape[:-2] + (g * kk,))
        tb, ct = ops.linear_forward(s_flat, self.params[p + ".T"])
        y = tb.reshape(s.shape)
        for lev in reversed(range(n_levels)):
            y = lad.rec(y + us_list[lev], ud_list[lev])
        return y, (caches, shapes, ct)

    def _layer_backward(self, i, cache, gy, grads):
        cfg = self.config
        lad = self._ladder
        g, kk, T = cfg.groups, cfg.kk, cfg.n_types
        p = f"layer{i}"
        caches, shapes, ct = cache
        n_levels = len(caches)
        g_ud, g_us = [None] * n_levels, [None] * n_levels
        for lev in range(n_levels):
            gpre, g_ud[lev] = lad.rec_backward(gy)
            g_us[lev] = gpre
            gy = gpre
        sp = gy.shape[:-2]
        gflat, gT, _ = ops.linear_backward(ct, gy.reshape(sp + (g * kk,)), self.params[p + ".T"],
                                           with_bias=False)
        grads[p + ".T"] += gT
        gs = gflat.reshape(gy.shape)
        for lev in reversed(range(n_levels)):
            ca, cb, cc = caches[lev]
            sp = gs.shape[:-2]
            gud = g_ud[lev].reshape(sp + (T * g * kk,))
            gd = self._net_backward(p + ".A", ca, gud, grads)
            gd = gd + self._net_backward(p + ".C", cc, g_us[lev].reshape(sp + (g * kk,)), grads)
            gs = gs + self._net_backward(p + ".B", cb, gud, grads).reshape(gs.shape)
            gs = lad.dec_backward(gs, gd.reshape(sp + (T, g, kk)), shapes[lev])
        return gs

    # -- full model ----------------------------------------------------------

    def forward(self, a, return_cache: bool = False):
        """Apply the operator to one sample or a batch of samples."""
        cfg = self.config
        a, single = self._batch(a)
        n_levels = self.levels(a.shape[1:])
        P = self.params
        h, c_lift = ops.linear_forward(a[..., None], P["lift.W"], P["lift.b"])
        x = h.reshape(h.shape[:-1] + (cfg.groups, cfg.kk))
        layer_caches, relu_masks = [], []
        for i in range(cfg.layers):
            x, c = self._layer_forward(i, x, n_levels)
            layer_caches.append(c)
            if cfg.activation and i < cfg.layers - 1:
                x, m = ops.relu_forward(x)
                relu_masks.append(m)
        flat = x.reshape(x.shape[:-2] + (cfg.channels,))
        c_head = None
        if cfg.head is not None:
            z, c_lin = ops.linear_forward(flat, P["head.W"], P["head.b"])
            flat, m = ops.relu_forward(z)
            c_head = (c_lin, m)
        y, c_proj = ops.linear_forward(flat, P["proj.W"], P["proj.b"])
        y = y[..., 0]
        if single:
            y = y[0]
        if return_cache:
            return y, (single, c_lift, layer_caches, relu_masks, c_head, c_proj)
        return y

    __call__ = forward

    def backward(self, cache, grad_out):
        """Gradients of ``sum(grad_out * forward(a))`` for every parameter and ``a``."""
        cfg = self.config
        single, c_lift, layer_caches, relu_masks, c_head, c_proj = cache
        P = self.params
        grads = {k: np.zeros_like(v) for k, v in P.items()}
        g = np.asarray(grad_out, dtype=float)
        if single:
            g = g[None]
        gflat, gW, gb = ops.linear_backward(c_proj, g[..., None], P["proj.W"])
        grads["proj.W"] += gW
        grads["proj.b"] += gb
        if c_head is not None:
            c_lin, m = c_head
            gflat, gW, gb = ops.linear_backward(c_lin, ops.relu_backward(m, gflat), P["head.W"])
            grads["head.W"] += gW
            grads["head.b"] += gb
        gx = gflat.reshape(gflat.shape[:-1] + (cfg.groups, cfg.kk))
        for i in reversed(range(cfg.layers)):
            if cfg.activation and i < cfg.layers - 1:
                gx = ops.relu_backward(relu_masks[i], gx)
            gx = self._layer_backward(i, layer_caches[i], gx, grads)
        gh = gx.reshape(gx.shape[:-2] + (cfg.channels,))
        ga, gW, gb = ops.linear_backward(c_lift, gh, P["lift.W"])
        grads["lift.W"] += gW
        grads["lift.b"] += gb
        ga = ga[..., 0]
        if single:
            ga = ga[0]
        return grads, ga

    def value_and_grad(self, a, grad_fn):
        """Forward pass, then backward with ``grad_fn(pred) -> (value, dvalue/dpred)``."""
        pred, cache = self.forward(a, return_cache=True)
        value, gpred = grad_fn(pred)
        grads, _ = self.backward(cache, gpred)
        return value, grads


def forward(model: OperatorModel, a):
    return model.forward(a)


def forward_2d(model: OperatorModel, a):
    if model.config.dim != 2:
        raise ShapeError("forward_2d needs a model built with dim=2")
    return model.forward(a)


def backward(model: OperatorModel, a, upstream):
    """Parameter and input gradients of ``sum(upstream * model(a))``."""
    _, cache = model.forward(a, return_cache=True)
    return model.backward(cache, upstream)


def clone_params(params: dict) -> dict:
    return copy.deepcopy(params)
