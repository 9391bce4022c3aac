"""Shared binary envelope for model files.

Layout: 4-byte magic, uint32 format version, then caller-defined
payload.  Weight matrices are little-endian float32; scalar metadata is
little-endian float64 so hyperparameters round-trip exactly.  Strings
are uint16 length + UTF-8 bytes.
"""

from __future__ import annotations

import struct

import numpy as np


class BadMagic(ValueError):
    """File does not start with the expected magic bytes."""


class VersionMismatch(ValueError):
    """File format version is not supported."""


class ShapeMismatch(ValueError):
    """File is truncated or its payload does not match the declared shapes."""


class Writer:
    def __init__(self, magic: bytes, version: int):
        self._buf = bytearray(magic)
        self.u32(version)

    def u32(self, value: int) -> None:
        self._buf += struct.pack("<I", value)

    def u64(self, value: int) -> None:
        self._buf += struct.pack("<q", value)

    def f64(self, value: float) -> None:
        self._buf += struct.pack("<d", value)

    def text(self, value: str) -> None:
        raw = value.encode("utf-8")
        self._buf += struct.pack("<H", len(raw))
        self._buf += raw

    def matrix_f32(self, array: np.ndarray) -> None:
        self._buf += np.ascontiguousarray(array, dtype="<f4").tobytes()

    def getvalue(self) -> bytes:
        return bytes(self._buf)


class Reader:
    def __init__(self, data: bytes, magic: bytes, version: int):
        self._data = data
        self._pos = 0
        if data[:4] != magic:
            raise BadMagic(f"expected magic {magic!r}, got {data[:4]!r}")
        self._pos = 4
        found = self.u32()
        if found != version:
            raise VersionMismatch(f"format version {found}, expected {version}")

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise ShapeMismatch("file truncated")
        chunk = self._data[self._pos:self._pos + n]
        self._pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def text(self) -> str:
        n = struct.unpack("<H", self._take(2))[0]
        return self._take(n).decode("utf-8")

    def matrix_f32(self, shape: tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape)) if shape else 1
        raw = self._take(4 * count)
        return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)

    def expect_end(self) -> None:
        if self._pos != len(self._data):
            raise ShapeMismatch(
                f"{len(self._data) - self._pos} unexpected trailing bytes")
