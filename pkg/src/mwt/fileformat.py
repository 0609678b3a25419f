"""Little-endian binary helpers shared by the dataset and checkpoint formats.

Both formats are ``magic (4 bytes) | version (u8) | ...``. Strings are UTF-8
with a u16 length prefix; a metadata block is a u32 entry count followed by
key/value string pairs; arrays are ``ndim (u8) | dims (u32 each) | float64 data``.
"""
from __future__ import annotations

import io
import struct

import numpy as np

from mwt.errors import FormatError


class Writer:
    def __init__(self):
        self.buf = io.BytesIO()

    def raw(self, b: bytes):
        self.buf.write(b)

    def u8(self, v):
        self.buf.write(struct.pack("<B", v))

    def u16(self, v):
        self.buf.write(struct.pack("<H", v))

    def u32(self, v):
        self.buf.write(struct.pack("<I", v))

    def string(self, s: str):
        b = s.encode("utf-8")
        if len(b) > 0xFFFF:
            raise FormatError("string too long for the file format")
        self.u16(len(b))
        self.raw(b)

    def metadata(self, meta: dict):
        self.u32(len(meta))
        for key in sorted(meta):
            self.string(str(key))
            self.string(str(meta[key]))

    def shape(self, shape):
        self.u8(len(shape))
        for n in shape:
            self.u32(n)

    def array_data(self, a):
        self.raw(np.ascontiguousarray(a, dtype="<f8").tobytes())

    def array(self, a):
        a = np.asarray(a, dtype=float)
        self.shape(a.shape)
        self.array_data(a)

    def getvalue(self) -> bytes:
        return self.buf.getvalue()


class Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def raw(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("file is truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def _unpack(self, fmt):
        return struct.unpack(fmt, self.raw(struct.calcsize(fmt)))[0]

    def u8(self):
        return self._unpack("<B")

    def u16(self):
        return self._unpack("<H")

    def u32(self):
        return self._unpack("<I")

    def string(self) -> str:
        try:
            return self.raw(self.u16()).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError("invalid UTF-8 in string field") from exc

    def metadata(self) -> dict:
        return {self.string(): self.string() for _ in range(self.u32())}

    def shape(self):
        return tuple(self.u32() for _ in range(self.u8()))

    def array_data(self, shape):
        n = int(np.prod(shape, dtype=np.int64))
        return np.frombuffer(self.raw(8 * n), dtype="<f8").astype(float).reshape(shape)

    def array(self):
        return self.array_data(self.shape())

    def expect_end(self):
        if self.pos != len(self.data):
            raise FormatError(f"{len(self.data) - self.pos} trailing bytes after payload")


def check_magic(r: Reader, magic: bytes, supported_version: int, incompatible_error):
    found = r.raw(4)
    if found != magic:
        raise incompatible_error(f"bad magic {found!r}, expected {magic!r}")
    version = r.u8()
    if version != supported_version:
        raise incompatible_error(f"unsupported {magic.decode()} version {version}")
    return version
