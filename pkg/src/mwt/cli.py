"""Command-line entry point.

Every subcommand reads a flat ``key=value`` config (``--config FILE``) and
accepts ``key=value`` overrides on the command line. Exit codes: 0 ok,
1 usage, 2 I/O, 3 numerical divergence, 4 incompatibility.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
import typing
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mwt import errors
from mwt.filterbank import build_filters, validate_filters
from mwt.specfun import make_basis
from mwt.transform import decompose, project_kernel, reconstruct

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DIVERGENCE, EXIT_INCOMPATIBLE = 0, 1, 2, 3, 4

PATH_KEYS = ("dataset", "out_dir", "checkpoint")


@dataclass
class RunConfig:
    # task and data
    equation: str = "burgers"
    n_samples: int = 250
    resolution: int = 256
    sampler: str = "grf"
    T: float = 1.0
    dt: float = 0.0
    nu: float = 0.1
    omega: float = 215.0
    lam: float = 0.5
    n_train: int = 200
    n_test: int = 50
    # model
    basis: str = "legendre"
    k: int = 4
    layers: int = 2
    L: int = 0
    groups: int = 1
    modes: int = 0
    head: int = 0
    width: int = 3
    # optimisation
    epochs: int = 100
    lr: float = 1e-3
    gamma: float = 0.5
    step: int = 100
    batch_size: int = 20
    shift_augment: bool = False
    normalize_targets: bool = False
    seed: int = 0
    # filters, transform and kernel tools
    N: int = 6
    dim: int = 1
    trials: int = 20
    kernel: str = "gaussian"
    threshold: float = 1e-8
    dump_basis: bool = False
    eval_resolution: int = 0
    # paths
    dataset: str = ""
    checkpoint: str = ""
    out_dir: str = "."

    def to_text(self) -> str:
        return "".join(f"{f.name}={_format(getattr(self, f.name))}\n" for f in dataclasses.fields(self))


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(name: str, raw: str, kind):
    try:
        if kind is bool:
            if raw.lower() in ("1", "true", "yes"):
                return True
            if raw.lower() in ("0", "false", "no"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise errors.ConfigError(f"bad value {raw!r} for {name}") from None


def parse_assignments(lines, base_dir: Path | None = None) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment. Unknown keys raise ConfigError."""
    hints = typing.get_type_hints(RunConfig)
    out = {}
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise errors.ConfigError(f"expected key=value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in hints:
            raise errors.ConfigError(f"unknown config key {key!r}")
        value = _parse_value(key, raw, hints[key])
        if key in PATH_KEYS and value and base_dir is not None:
            value = str((base_dir / value).resolve())
        out[key] = value
    return out


def load_config(path=None, overrides=(), env=None) -> RunConfig:
    """Config file, then command-line overrides, then ``MWT_SEED``; paths made absolute."""
    values = {}
    if path is not None:
        path = Path(path)
        values.update(parse_assignments(path.read_text(encoding="utf-8").splitlines(), path.parent))
    values.update(parse_assignments(overrides, Path.cwd()))
    env = os.environ if env is None else env
    if env.get("MWT_SEED"):
        values["seed"] = _parse_value("MWT_SEED", env["MWT_SEED"], int)
    cfg = RunConfig(**values)
    for key in PATH_KEYS:
        if getattr(cfg, key):
            setattr(cfg, key, str(Path(getattr(cfg, key)).resolve()))
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config(cfg: RunConfig, path: Path) -> None:
    path.write_text(cfg.to_text(), encoding="utf-8")


def _matrix_csv(m: np.ndarray) -> str:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    # entries below the printed precision are rounding noise
    m = np.where(np.abs(m) < 1e-13 * max(1.0, np.abs(m).max()), 0.0, m)
    return "".join(",".join(f"{v + 0.0:.12g}" for v in row) + "\n" for row in m)


# -- subcommands -------------------------------------------------------------------

def cmd_filters(cfg: RunConfig) -> int:
    fb = build_filters(cfg.basis, cfg.k)
    out = _out_dir(cfg)
    for name, m in fb.matrices().items():
        (out / f"{name}.csv").write_text(_matrix_csv(m))
    residual = validate_filters(fb)
    (out / "residual.csv").write_text(f"basis,k,residual\n{cfg.basis},{cfg.k},{residual:.3e}\n")
    if cfg.dump_basis:
        (out / "basis.csv").write_text(_matrix_csv(make_basis(cfg.basis, cfg.k).coeffs))
    print(f"{cfg.basis} k={cfg.k} constraint residual {residual:.3e}")
    return EXIT_OK if residual <= 1e-8 else EXIT_DIVERGENCE


def cmd_transform(cfg: RunConfig) -> int:
    """Round-trip self-test on random inputs."""
    fb = build_filters(cfg.basis, cfg.k)
    rng = np.random.default_rng(cfg.seed)
    shape = (cfg.k,) * cfg.dim + (2 ** cfg.N,) * cfg.dim
    worst = 0.0
    for _ in range(cfg.trials):
        x = rng.standard_normal(shape)
        y = reconstruct(fb, decompose(fb, x, cfg.L))
        worst = max(worst, float(np.linalg.norm(y - x) / np.linalg.norm(x)))
    print(f"round trip over {cfg.trials} inputs: max relative residual {worst:.3e}")
    return EXIT_OK if worst <= 1e-9 else EXIT_DIVERGENCE


def cmd_datagen(cfg: RunConfig) -> int:
    from mwt.pdedata import GenerationConfig, generate_dataset

    if not cfg.dataset:
        raise errors.ConfigError("datagen needs dataset=<output path>")
    gen = GenerationConfig(equation=cfg.equation, n_samples=cfg.n_samples, resolution=cfg.resolution,
                           seed=cfg.seed, sampler=cfg.sampler, T=cfg.T, dt=cfg.dt or None, nu=cfg.nu,
                           omega=cfg.omega, lam=cfg.lam)
    t0 = time.perf_counter()
    ds = generate_dataset(gen)
    path = Path(cfg.dataset)
    path.parent.mkdir(parents=True, exist_ok=True)
    ds.save(path)
    _write_config(cfg, path.with_name(path.name + ".cfg"))
    print(f"wrote {len(ds)} samples at resolution {ds.resolution} to {path} "
          f"({time.perf_counter() - t0:.1f} s)")
    return EXIT_OK


def model_config(cfg: RunConfig, dim: int):
    from mwt.model import ModelConfig

    return ModelConfig(basis=cfg.basis, k=cfg.k, dim=dim, layers=cfg.layers, L=cfg.L, groups=cfg.groups,
                       width=cfg.width, modes=cfg.modes or None, head=cfg.head or None, filter_seed=cfg.seed)


def train_config(cfg: RunConfig):
    from mwt.model import TrainConfig

    return TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr, gamma=cfg.gamma,
                       step=cfg.step, seed=cfg.seed, shift_augment=cfg.shift_augment,
                       normalize_targets=cfg.normalize_targets)


def cmd_train(cfg: RunConfig) -> int:
    from mwt.model import OperatorModel, history_csv, train
    from mwt.model.checkpoint import save_checkpoint
    from mwt.pdedata import PdeDataset

    if not cfg.dataset:
        raise errors.ConfigError("train needs dataset=<path>")
    ds = PdeDataset.load(cfg.dataset)
    tr, te = ds.split(cfg.n_train, cfg.n_test)
    tr, te = tr.at_resolution(cfg.resolution), te.at_resolution(cfg.resolution)
    model = OperatorModel(model_config(cfg, ds.inputs.ndim - 1), seed=cfg.seed)
    out = _out_dir(cfg)
    _write_config(cfg, out / "run.cfg")
    t0 = time.perf_counter()

    def report(rec):
        print(f"epoch {rec.epoch} train {rec.train_rel_l2:.6f} test {rec.test_rel_l2:.6f} "
              f"lr {rec.lr:.3g} {rec.seconds:.2f} s", flush=True)

    result = train(model, tr, train_config(cfg), te if len(te) else None, callback=report)
    save_checkpoint(result.model, out / "model.mwtm")
    (out / "metrics.csv").write_text(history_csv(result.history))
    final = result.history[-1].test_rel_l2 if result.history else float("nan")
    if result.history and len(te) == 0:
        final = result.history[-1].train_rel_l2
    print(f"final test relative L2 {final:.6g} in {time.perf_counter() - t0:.1f} s")
    return EXIT_OK


def cmd_eval(cfg: RunConfig) -> int:
    from mwt.model import evaluate
    from mwt.model.checkpoint import load_checkpoint
    from mwt.pdedata import PdeDataset

    if not (cfg.checkpoint and cfg.dataset):
        raise errors.ConfigError("eval needs checkpoint=<path> and dataset=<path>")
    model = load_checkpoint(cfg.checkpoint)
    ds = PdeDataset.load(cfg.dataset)
    if ds.inputs.ndim - 1 != model.config.dim:
        raise errors.IncompatibleCheckpointError(
            f"{model.config.dim}-D checkpoint cannot evaluate {ds.inputs.ndim - 1}-D data")
    if cfg.eval_resolution:
        res = cfg.eval_resolution
        if res & (res - 1):
            raise errors.ConfigError(f"eval_resolution must be a power of two, got {res}")
        ds = ds.at_resolution(res)
    err = evaluate(model, ds)
    print(f"mean relative L2 {err:.6g} over {len(ds)} samples at resolution {ds.resolution}")
    return EXIT_OK


KERNELS = {
    "gaussian": lambda x, y: np.exp(-50.0 * (x - y) ** 2),
    "abs-difference": lambda x, y: np.abs(x - y),
    "polynomial": lambda x, y: 1.0 + x - 2.0 * y + 3.0 * x * y,
    "zero": lambda x, y: 0.0 * x,
}


def cmd_kernelviz(cfg: RunConfig) -> int:
    if cfg.kernel not in KERNELS:
        raise errors.ConfigError(f"unknown kernel {cfg.kernel!r}; choose from {', '.join(KERNELS)}")
    kp = project_kernel(KERNELS[cfg.kernel], build_filters(cfg.basis, cfg.k), cfg.N, cfg.L, cfg.threshold)
    out = _out_dir(cfg)
    rows, coords = ["block,scale,fraction_above"], ["block,scale,row,col"]
    for name, blocks in kp.masks().items():
        for i, mask in sorted(blocks.items()):
            rows.append(f"{name},{i},{mask.mean():.6g}")
            coords.extend(f"{name},{i},{r},{c}" for r, c in zip(*np.nonzero(mask)))
    (out / "sparsity.csv").write_text("\n".join(rows) + "\n")
    (out / "mask.csv").write_text("\n".join(coords) + "\n")
    blocks = [b for name in "ABC" for b in getattr(kp, name).values()]
    overall = sum(np.count_nonzero(np.abs(b) > cfg.threshold) for b in blocks) / sum(b.size for b in blocks)
    print(f"{cfg.kernel}: fraction of A/B/C entries above {cfg.threshold:g} = {overall:.4f}")
    return EXIT_OK


COMMANDS = {
    "filters": cmd_filters,
    "transform": cmd_transform,
    "datagen": cmd_datagen,
    "train": cmd_train,
    "eval": cmd_eval,
    "kernelviz": cmd_kernelviz,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mwt", description="Multiwavelet operator toolkit")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("assignments", nargs="*", metavar="KEY=VALUE", help="config overrides")
    return parser


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, errors.IncompatibleCheckpointError):
        return EXIT_INCOMPATIBLE
    if isinstance(exc, (errors.FormatError, OSError)):
        return EXIT_IO
    if isinstance(exc, (errors.DivergenceError, errors.SolverDivergenceError, errors.FilterValidationError)):
        return EXIT_DIVERGENCE
    return EXIT_USAGE


def main(argv=None) -> int:
    try:
        args = build_parser().parse_intermixed_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = load_config(args.config, args.assignments)
        return COMMANDS[args.command](cfg)
    except (errors.MWTError, OSError, ValueError) as exc:
        code = exit_code(exc)
        if isinstance(exc, errors.DivergenceError):
            print(f"error: diverged at epoch {exc.epoch}: {exc}", file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
