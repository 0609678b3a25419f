"""Input/output sample pairs, their ``MWTD`` file format, and generation.

Layout: magic ``MWTD`` | version u8 | equation name | metadata block |
sample count u32 | sample shape header | inputs | outputs (float64 LE).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mwt.errors import FormatError, IncompatibleCheckpointError, ShapeError, SolverDivergenceError
from mwt.fileformat import Reader, Writer, check_magic
from mwt.pdedata import beam, darcy, spectral
from mwt.pdedata.samplers import (
    BURGERS_GRF,
    DARCY_GRF,
    KDV_GRF,
    GrfSpec,
    sample_grf,
    sample_smooth_random,
    sample_sqexp_periodic,
)

MAGIC = b"MWTD"
VERSION = 1
EQUATIONS = ("kdv", "burgers", "beam", "beam3", "darcy", "identity")
BEAM_FORCING = GrfSpec(sigma2=5.0 ** 4, tau=5.0, alpha=2.0)


def subsample(field, factor: int, axes=None):
    """Every ``factor``-th point starting at index 0 along ``axes`` (default: all)."""
    field = np.asarray(field)
    factor = int(factor)
    axes = range(field.ndim) if axes is None else axes
    index = [slice(None)] * field.ndim
    for ax in axes:
        if factor < 1 or field.shape[ax] % factor:
            raise ShapeError(f"factor {factor} does not divide length {field.shape[ax]}")
        index[ax] = slice(None, None, factor)
    return field[tuple(index)]


@dataclass
class PdeDataset:
    equation: str
    inputs: np.ndarray
    outputs: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.outputs = np.asarray(self.outputs, dtype=float)
        if self.inputs.shape != self.outputs.shape:
            raise ShapeError(f"inputs {self.inputs.shape} and outputs {self.outputs.shape} differ")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.outputs))):
            raise FormatError("dataset contains non-finite values")

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def sample_shape(self) -> tuple:
        return self.inputs.shape[1:]

    @property
    def resolution(self) -> int:
        return self.inputs.shape[1]

    @property
    def dim(self) -> int:
        return self.inputs.ndim - 1

    def take(self, index) -> "PdeDataset":
        return PdeDataset(self.equation, self.inputs[index], self.outputs[index], dict(self.metadata))

    def split(self, n_train: int, n_test: int) -> tuple["PdeDataset", "PdeDataset"]:
        """First ``n_train`` samples and the following ``n_test`` samples."""
        if n_train < 1 or n_test < 0 or n_train + n_test > len(self):
            raise ShapeError(f"cannot split {len(self)} samples into {n_train} + {n_test}")
        return self.take(slice(0, n_train)), self.take(slice(n_train, n_train + n_test))

    def subsample(self, factor: int) -> "PdeDataset":
        axes = range(1, self.inputs.ndim)
        meta = dict(self.metadata)
        meta["subsample"] = str(int(meta.get("subsample", 1)) * factor)
        return PdeDataset(self.equation, subsample(self.inputs, factor, axes),
                          subsample(self.outputs, factor, axes), meta)

    def at_resolution(self, resolution: int) -> "PdeDataset":
        if resolution == self.resolution:
            return self
        if self.resolution % resolution:
            raise ShapeError(f"resolution {resolution} does not divide {self.resolution}")
        return self.subsample(self.resolution // resolution)

    def to_bytes(self) -> bytes:
        w = Writer()
        w.raw(MAGIC)
        w.u8(VERSION)
        w.string(self.equation)
        w.metadata(self.metadata)
        w.u32(len(self))
        w.shape(self.sample_shape)
        w.array_data(self.inputs)
        w.array_data(self.outputs)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PdeDataset":
        r = Reader(data)
        check_magic(r, MAGIC, VERSION, IncompatibleCheckpointError)
        name = r.string()
        meta = r.metadata()
        n = r.u32()
        shape = r.shape()
        inputs = r.array_data((n,) + shape)
        outputs = r.array_data((n,) + shape)
        r.expect_end()
        return cls(name, inputs, outputs, meta)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "PdeDataset":
        return cls.from_bytes(Path(path).read_bytes())


def expected_file_size(equation: str, metadata: dict, n: int, shape: tuple) -> int:
    """Byte length of an ``MWTD`` file, from its header fields."""
    meta = sum(4 + len(str(k).encode()) + len(str(v).encode()) for k, v in metadata.items())
    header = 4 + 1 + 2 + len(equation.encode()) + 4 + meta + 4 + 1 + 4 * len(shape)
    return header + 2 * 8 * n * math.prod(shape)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


@dataclass
class GenerationConfig:
    """Parameters of one dataset; unused fields are ignored by other equations."""

    equation: str = "burgers"
    n_samples: int = 10
    resolution: int = 256
    seed: int = 0
    sampler: str = "grf"
    T: float = 1.0
    dt: float | None = None
    nu: float = 0.1
    omega: float = beam.DEFAULT_OMEGA
    lam: float = 0.5
    sqexp_length: float = 0.5
    sqexp_period: float = 1.0
    oversample: int = 4
    chunk: int = 16

    def metadata(self, extra: dict) -> dict:
        meta = {k: v for k, v in self.__dict__.items() if k != "equation" and v is not None}
        meta.update(extra)
        return {k: str(v) for k, v in meta.items()}


def _periodic_input(cfg: GenerationConfig, n: int, rng, spec: GrfSpec):
    if cfg.sampler == "grf":
        return sample_grf(spec, n, rng)
    if cfg.sampler == "sqexp":
        return sample_sqexp_periodic(cfg.sqexp_length, cfg.sqexp_period, n, rng)
    if cfg.sampler == "smooth":
        return sample_smooth_random(cfg.lam, n, rng)
    raise ValueError(f"unknown sampler {cfg.sampler!r}; expected grf, sqexp or smooth")


def _solve_chunks(solve, inputs, chunk, first_index=0):
    out = np.empty_like(inputs)
    for lo in range(0, len(inputs), chunk):
        block = inputs[lo:lo + chunk]
        try:
            out[lo:lo + chunk] = solve(block)
        except SolverDivergenceError:
            for j in range(len(block)):
                try:
                    solve(block[j:j + 1])
                except SolverDivergenceError as exc:
                    raise SolverDivergenceError(
                        f"sample {first_index + lo + j} diverged: {exc}") from exc
            raise
    return out


def _check_resolution(res, internal):
    if res < 2 or res & (res - 1) or internal % res:
        raise ShapeError(f"resolution {res} must be a power of two dividing {internal}")


def generate_dataset(cfg: GenerationConfig) -> PdeDataset:
    """Build ``cfg.n_samples`` input/output pairs; sample ``i`` uses seed ``(cfg.seed, i)``."""
    eq = cfg.equation.lower()
    n, res = cfg.n_samples, cfg.resolution
    rngs = [sample_rng(cfg.seed, i) for i in range(n)]
    extra = {}
    if eq == "kdv":
        internal = spectral.KDV_RESOLUTION
        _check_resolution(res, internal)
        dt = cfg.dt or 1e-5
        a = np.stack([_periodic_input(cfg, internal, r, KDV_GRF) for r in rngs])
        u = _solve_chunks(lambda b: spectral.solve_kdv(b, T=cfg.T, dt=dt), a, cfg.chunk)
        extra = {"dt": dt, "grf": KDV_GRF.to_dict(), "laplacian": "4pi^2m^2"}
    elif eq == "burgers":
        internal = spectral.BURGERS_RESOLUTION
        _check_resolution(res, internal)
        dt = cfg.dt or 2e-3
        a = np.stack([_periodic_input(cfg, internal, r, BURGERS_GRF) for r in rngs])
        u = _solve_chunks(lambda b: spectral.solve_burgers(b, nu=cfg.nu, T=cfg.T, dt=dt), a, cfg.chunk)
        extra = {"dt": dt, "grf": BURGERS_GRF.to_dict(), "laplacian": "4pi^2m^2"}
    elif eq in ("beam", "beam3"):
        order = 4 if eq == "beam" else 3
        internal = cfg.oversample * res
        _check_resolution(res, internal)
        f = np.stack([sample_grf(BEAM_FORCING, internal, r) for r in rngs])
        f_dense = np.concatenate([f, f[:, :1]], axis=1)
        u = beam.solve_beam_dense(f_dense, cfg.omega, order)[:, :internal]
        a = f
        extra = {"order": order, "grf": BEAM_FORCING.to_dict()}
    elif eq == "darcy":
        internal = cfg.oversample * res
        _check_resolution(res, internal)
        a_list, u_list = [], []
        for r in rngs:
            coef = darcy.threshold_coefficient(sample_grf(DARCY_GRF, internal, r))
            a_list.append(coef[:internal, :internal])
            u_list.append(darcy.solve_darcy(coef, 1.0)[:internal, :internal])
        a, u = np.stack(a_list), np.stack(u_list)
        extra = {"f": 1.0, "a_high": darcy.HIGH, "a_low": darcy.LOW, "grf": DARCY_GRF.to_dict(),
                 "grf_basis": "neumann-cosine"}
    elif eq == "identity":
        # white-noise sanity task: the output is the input
        internal = res
        _check_resolution(res, internal)
        a = np.stack([r.standard_normal(res) for r in rngs])
        u = a.copy()
    else:
        raise ValueError(f"unknown equation {cfg.equation!r}; expected one of {', '.join(EQUATIONS)}")
    factor = internal // res
    axes = range(1, a.ndim)
    a, u = subsample(a, factor, axes), subsample(u, factor, axes)
    extra.update({"solver_resolution": internal, "subsample": factor})
    return PdeDataset(eq, a, u, cfg.metadata(extra))
