"""Relative L2 loss, Adam, and a deterministic mini-batch training loop."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from mwt.errors import ConfigError, DegenerateTargetError, DivergenceError
from mwt.model.network import OperatorModel


def relative_l2(pred, truth) -> float:
    """Mean over samples of ``||pred - truth|| / ||truth||``.

    A single unbatched sample is accepted as well.
    """
    loss, _ = relative_l2_grad(pred, truth, need_grad=False)
    return loss


def relative_l2_grad(pred, truth, need_grad: bool = True, sample_ndim: int | None = None):
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    if sample_ndim is None:
        sample_ndim = pred.ndim - 1 if pred.ndim > 1 else pred.ndim
    batched = pred.ndim > sample_ndim
    p = pred.reshape(-1, int(np.prod(pred.shape[-sample_ndim:]))) if batched else pred.reshape(1, -1)
    t = truth.reshape(p.shape)
    tn = np.linalg.norm(t, axis=1)
    if np.any(tn == 0):
        raise DegenerateTargetError("relative L2 undefined for a zero-norm target")
    diff = p - t
    dn = np.linalg.norm(diff, axis=1)
    loss = float(np.mean(dn / tn))
    if not need_grad:
        return loss, None
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(dn > 0, 1.0 / (dn * tn), 0.0) / p.shape[0]
    grad = (diff * scale[:, None]).reshape(pred.shape)
    return loss, grad


@dataclass
class TrainConfig:
    """Optimiser and schedule settings.

    ``shift_augment`` rolls every training pair by a random circular shift per
    batch; only valid for periodic, translation-invariant problems.
    ``normalize_targets`` fits outputs divided by their training RMS and folds
    the scale back into the output projection; the relative L2 is unchanged.
    """

    epochs: int = 500
    batch_size: int = 20
    lr: float = 1e-3
    gamma: float = 0.5
    step: int = 100
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    shift_augment: bool = False
    normalize_targets: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if not self.lr > 0:
            raise ConfigError("learning rate must be positive")
        if self.batch_size < 1 or self.step < 1:
            raise ConfigError("batch_size and step must be positive")

    def lr_at(self, epoch: int) -> float:
        """Learning rate for zero-based ``epoch``."""
        return self.lr * self.gamma ** (epoch // self.step)

    def to_dict(self):
        return asdict(self)


class Adam:
    """Adam with bias correction and optional L2 weight decay folded into the gradient."""

    def __init__(self, params: dict, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.weight_decay = weight_decay
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: dict, lr: float):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for name, p in self.params.items():
            g = grads[name]
            if self.weight_decay:
                g = g + self.weight_decay * p
            m, v = self.m[name], self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class EpochRecord:
    epoch: int
    train_rel_l2: float
    test_rel_l2: float
    lr: float
    seconds: float = field(default=0.0, compare=False)


@dataclass
class TrainResult:
    model: OperatorModel
    history: list[EpochRecord]


def _as_pair(data):
    if data is None:
        return None
    if hasattr(data, "inputs"):
        return np.asarray(data.inputs, dtype=float), np.asarray(data.outputs, dtype=float)
    a, u = data
    return np.asarray(a, dtype=float), np.asarray(u, dtype=float)


def random_shift(rng, a, u, dim: int):
    """Roll each sample of ``a`` and ``u`` by the same random shift along every grid axis."""
    for ax in range(1, dim + 1):
        n = a.shape[ax]
        shift = rng.integers(0, n, size=len(a))
        idx = (np.arange(n)[None, :] - shift[:, None]) % n
        idx = idx.reshape((len(a),) + (1,) * (ax - 1) + (n,) + (1,) * (dim - ax))
        a = np.take_along_axis(a, np.broadcast_to(idx, a.shape), axis=ax)
        u = np.take_along_axis(u, np.broadcast_to(idx, u.shape), axis=ax)
    return a, u


def evaluate(model: OperatorModel, data, batch_size: int = 50) -> float:
    """Mean relative L2 error of ``model`` over a dataset."""
    a, u = _as_pair(data)
    total = 0.0
    for lo in range(0, len(a), batch_size):
        pred = model.forward(a[lo:lo + batch_size])
        n = len(pred)
        total += relative_l2_grad(pred, u[lo:lo + batch_size], need_grad=False,
                                  sample_ndim=model.config.dim)[0] * n
    return total / len(a)


def train(model: OperatorModel, train_data, config: TrainConfig, test_data=None,
          callback=None) -> TrainResult:
    """Train a copy of ``model``; the input model is left untouched.

    ``train_data`` / ``test_data`` are ``(inputs, outputs)`` pairs or objects with
    ``inputs`` and ``outputs`` attributes. Shuffling uses ``config.seed`` only.
    """
    a, u = _as_pair(train_data)
    if len(a) == 0:
        raise ConfigError("training set is empty")
    test = _as_pair(test_data)
    scale = 1.0
    if config.normalize_targets:
        scale = float(np.sqrt(np.mean(u ** 2))) or 1.0
        u = u / scale
        if test is not None:
            test = (test[0], test[1] / scale)
    model = model.copy()
    opt = Adam(model.params, config.beta1, config.beta2, config.eps, config.weight_decay)
    rng = np.random.default_rng(config.seed)
    dim = model.config.dim
    history = []
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        lr = config.lr_at(epoch)
        order = rng.permutation(len(a))
        running = 0.0
        for lo in range(0, len(a), config.batch_size):
            idx = order[lo:lo + config.batch_size]
            xb, yb = a[idx], u[idx]
            if config.shift_augment:
                xb, yb = random_shift(rng, xb, yb, dim)
            loss, grads = model.value_and_grad(
                xb, lambda p, t=yb: relative_l2_grad(p, t, sample_ndim=dim))
            if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise DivergenceError(epoch + 1)
            opt.step(grads, lr)
            running += loss * len(idx)
        train_err = running / len(a)
        test_err = evaluate(model, test) if test is not None else float("nan")
        rec = EpochRecord(epoch + 1, train_err, test_err, lr, time.perf_counter() - t0)
        history.append(rec)
        if callback is not None:
            callback(rec)
    if scale != 1.0:
        model.params["proj.W"] *= scale
        model.params["proj.b"] *= scale
    return TrainResult(model, history)


HISTORY_HEADER = "epoch,train_rel_l2,test_rel_l2,lr"


def history_csv(history: list[EpochRecord]) -> str:
    lines = [HISTORY_HEADER]
    for r in history:
        lines.append(f"{r.epoch},{r.train_rel_l2:.17g},{r.test_rel_l2:.17g},{r.lr:.17g}")
    return "\n".join(lines) + "\n"
