"""Model checkpoints in the ``MWTM`` binary format.

Layout: magic ``MWTM`` | version u8 | basis code u8 | k u32 | layer count u32 |
metadata block (remaining architecture fields) | tensor count u32 | per tensor:
name string, shape header, float64 data.
"""
from __future__ import annotations

import json
from pathlib import Path

from mwt.errors import FormatError, IncompatibleCheckpointError
from mwt.fileformat import Reader, Writer, check_magic
from mwt.model.network import ModelConfig, OperatorModel

MAGIC = b"MWTM"
VERSION = 1
BASIS_CODES = {"legendre": 0, "chebyshev": 1, "random": 2}
_CODE_TO_BASIS = {v: k for k, v in BASIS_CODES.items()}


def _basis_name(basis: str) -> str:
    name = str(basis).lower()
    aliases = {"leg": "legendre", "cheb": "chebyshev", "chb": "chebyshev", "rnd": "random"}
    name = aliases.get(name, name)
    if name not in BASIS_CODES:
        raise FormatError(f"basis {basis!r} cannot be stored in a checkpoint")
    return name


def checkpoint_bytes(model: OperatorModel) -> bytes:
    cfg = model.config.to_dict()
    w = Writer()
    w.raw(MAGIC)
    w.u8(VERSION)
    w.u8(BASIS_CODES[_basis_name(cfg.pop("basis"))])
    w.u32(cfg.pop("k"))
    w.u32(cfg.pop("layers"))
    w.metadata({key: json.dumps(val) for key, val in cfg.items()})
    w.u32(len(model.params))
    for name, value in model.params.items():
        w.string(name)
        w.array(value)
    return w.getvalue()


def checkpoint_from_bytes(data: bytes) -> OperatorModel:
    r = Reader(data)
    check_magic(r, MAGIC, VERSION, IncompatibleCheckpointError)
    code = r.u8()
    if code not in _CODE_TO_BASIS:
        raise IncompatibleCheckpointError(f"unknown basis code {code}")
    fields = {"basis": _CODE_TO_BASIS[code], "k": r.u32(), "layers": r.u32()}
    try:
        fields.update({key: json.loads(val) for key, val in r.metadata().items()})
        cfg = ModelConfig(**fields)
    except (TypeError, ValueError) as exc:
        raise IncompatibleCheckpointError(f"unusable architecture record: {exc}") from exc
    params = {}
    for _ in range(r.u32()):
        name = r.string()
        params[name] = r.array().copy()
    r.expect_end()
    try:
        return OperatorModel(cfg, params)
    except ValueError as exc:
        raise IncompatibleCheckpointError(str(exc)) from exc


def save_checkpoint(model: OperatorModel, path) -> None:
    Path(path).write_bytes(checkpoint_bytes(model))


def load_checkpoint(path) -> OperatorModel:
    return checkpoint_from_bytes(Path(path).read_bytes())
