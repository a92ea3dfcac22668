"""Stand-alone reader for the artifact's ESTK archive format.

Implemented from the documented layout (magic, u32 version, metadata
dict, recursive tagged estimator block, trailing 8-byte blake2b
checksum) without importing the artifact, so that archive checks stay
independent of the code under test.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"ESTK"
SUPPORTED_VERSION = 1

_T_FLOAT = 0
_T_INT = 1
_T_BOOL = 2
_T_STR = 3
_T_LIST = 4
_T_DICT = 5
_T_ESTIMATOR = 6
_T_ARRAY = 7
_T_SPLITTER = 8
_T_DISTRIBUTION = 9

_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<i8")}


class ArchiveFormatError(Exception):
    pass


@dataclass
class EstimatorBlock:
    kind: str
    params: dict
    fitted: dict | None

    def step(self, name: str) -> "EstimatorBlock":
        """Look up a named child in steps / transformer_list parameters."""
        for key in ("steps", "transformer_list"):
            for item in self.params.get(key, []):
                if item[0] == name:
                    return item[1]
        raise KeyError(name)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise ArchiveFormatError("truncated archive")
        out = self.data[self.pos : self.pos + count]
        self.pos += count
        return out

    def u8(self):
        return self.take(1)[0]

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def i64(self):
        return struct.unpack("<q", self.take(8))[0]

    def u64(self):
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self):
        return struct.unpack("<d", self.take(8))[0]

    def string(self):
        return self.take(self.u32()).decode("utf-8")


def _value(r: _Reader):
    tag = r.u8()
    if tag == _T_FLOAT:
        return r.f64()
    if tag == _T_INT:
        return r.i64()
    if tag == _T_BOOL:
        return bool(r.u8())
    if tag == _T_STR:
        return r.string()
    if tag == _T_LIST:
        return [_value(r) for _ in range(r.u32())]
    if tag == _T_DICT:
        return {r.string(): _value(r) for _ in range(r.u32())}
    if tag == _T_ESTIMATOR:
        kind = r.string()
        params = _value(r)
        fitted = _value(r) if r.u8() else None
        return EstimatorBlock(kind=kind, params=params, fitted=fitted)
    if tag == _T_ARRAY:
        dtype = _DTYPES.get(r.u8())
        if dtype is None:
            raise ArchiveFormatError("unknown array dtype")
        shape = tuple(r.u64() for _ in range(r.u8()))
        count = int(np.prod(shape)) if shape else 1
        return np.frombuffer(r.take(8 * count), dtype=dtype).reshape(shape).copy()
    if tag == _T_SPLITTER:
        return {"scheme": r.string(), "k": r.i64(), "shuffle": bool(r.u8()), "seed": r.i64()}
    if tag == _T_DISTRIBUTION:
        return {"kind": r.string(), "low": r.f64(), "high": r.f64(), "choices": _value(r)}
    raise ArchiveFormatError(f"unknown tag {tag}")


def read_archive(path) -> tuple[dict, EstimatorBlock]:
    """Verify and parse an archive, returning (metadata, root estimator)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ArchiveFormatError("bad magic")
    payload, checksum = blob[:-8], blob[-8:]
    if hashlib.blake2b(payload, digest_size=8).digest() != checksum:
        raise ArchiveFormatError("checksum mismatch")
    r = _Reader(payload)
    r.take(4)
    version = r.u32()
    if version > SUPPORTED_VERSION:
        raise ArchiveFormatError(f"unsupported format version {version}")
    metadata = _value(r)
    root = _value(r)
    if not isinstance(root, EstimatorBlock):
        raise ArchiveFormatError("missing estimator block")
    return metadata, root
