"""Versioned, execution-free model archives.

Layout, all integers little-endian::

    magic "ESTK" | u32 format_version | metadata dict | estimator block | 8-byte checksum

The estimator block is a tagged recursive encoding (kind name, parameter
map, fitted state); nested estimators produce nested blocks, so the file
mirrors the composition tree. Loading verifies the trailing blake2b-64
checksum first, then rebuilds handles purely through registry
construction and state assignment; nothing in the file is ever executed
or evaluated. Archives from a newer format version are refused.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from ._version import __version__
from .errors import ConstructionError, NotFittedError, PersistenceError
from .estimator import EstimatorHandle, construct
from .model_selection import Distribution, Splitter

__all__ = ["FORMAT_VERSION", "MAGIC", "ModelArchive", "load", "load_archive", "save"]

MAGIC = b"ESTK"
FORMAT_VERSION = 1
_CHECKSUM_BYTES = 8

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

_ARRAY_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<i8")}


@dataclass(frozen=True)
class ModelArchive:
    """A decoded archive: the fitted estimator plus file metadata."""

    estimator: EstimatorHandle
    format_version: int
    library_version: str
    label_names: list[str] | None = None


# -- encoding ---------------------------------------------------------------


def _pack_str(out: bytearray, s: str) -> None:
    data = s.encode("utf-8")
    out += struct.pack("<I", len(data))
    out += data


def _pack_value(out: bytearray, value) -> None:
    if isinstance(value, (bool, np.bool_)):
        out.append(_T_BOOL)
        out.append(1 if value else 0)
    elif isinstance(value, (int, np.integer)):
        out.append(_T_INT)
        out += struct.pack("<q", int(value))
    elif isinstance(value, (float, np.floating)):
        out.append(_T_FLOAT)
        out += struct.pack("<d", float(value))
    elif isinstance(value, str):
        out.append(_T_STR)
        _pack_str(out, value)
    elif isinstance(value, np.ndarray):
        out.append(_T_ARRAY)
        if value.dtype.kind == "f":
            code, dtype = 0, _ARRAY_DTYPES[0]
        elif value.dtype.kind in "iu":
            code, dtype = 1, _ARRAY_DTYPES[1]
        else:
            raise PersistenceError(f"cannot archive array of dtype {value.dtype}")
        out.append(code)
        out.append(value.ndim)
        for dim in value.shape:
            out += struct.pack("<Q", dim)
        out += np.ascontiguousarray(value, dtype=dtype).tobytes()
    elif isinstance(value, (list, tuple)):
        out.append(_T_LIST)
        out += struct.pack("<I", len(value))
        for item in value:
            _pack_value(out, item)
    elif isinstance(value, dict):
        out.append(_T_DICT)
        out += struct.pack("<I", len(value))
        for key, item in value.items():
            _pack_str(out, key)
            _pack_value(out, item)
    elif isinstance(value, EstimatorHandle):
        out.append(_T_ESTIMATOR)
        _pack_str(out, value.kind)
        _pack_value(out, dict(value._params))
        fitted = value._fitted
        out.append(0 if fitted is None else 1)
        if fitted is not None:
            _pack_value(out, dict(fitted))
    elif isinstance(value, Splitter):
        out.append(_T_SPLITTER)
        _pack_str(out, value.scheme)
        out += struct.pack("<q", value.k)
        out.append(1 if value.shuffle else 0)
        out += struct.pack("<q", value.random_seed)
    elif isinstance(value, Distribution):
        out.append(_T_DISTRIBUTION)
        _pack_str(out, value.kind)
        out += struct.pack("<dd", value.low, value.high)
        _pack_value(out, list(value.choices))
    else:
        raise PersistenceError(f"cannot archive value of type {type(value).__name__}")


# -- decoding ---------------------------------------------------------------


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise PersistenceError("archive truncated")
        chunk = self.data[self.pos : self.pos + count]
        self.pos += count
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def i64(self) -> int:
        return struct.unpack("<q", self.take(8))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def _unpack_value(r: _Reader):
    tag = r.u8()
    if tag == _T_FLOAT:
        return r.f64()
    if tag == _T_INT:
        return r.i64()
    if tag == _T_BOOL:
        return bool(r.u8())
    if tag == _T_STR:
        return r.string()
    if tag == _T_ARRAY:
        dtype = _ARRAY_DTYPES.get(r.u8())
        if dtype is None:
            raise PersistenceError("unknown array dtype code")
        ndim = r.u8()
        shape = tuple(r.u64() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        raw = r.take(count * 8)
        return np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    if tag == _T_LIST:
        return [_unpack_value(r) for _ in range(r.u32())]
    if tag == _T_DICT:
        return {r.string(): _unpack_value(r) for _ in range(r.u32())}
    if tag == _T_ESTIMATOR:
        kind = r.string()
        params = _unpack_value(r)
        has_fitted = r.u8()
        fitted = _unpack_value(r) if has_fitted else None
        try:
            handle = construct(kind, params)
        except ConstructionError as exc:
            raise PersistenceError(f"archive refused: {exc}") from exc
        if fitted is not None:
            object.__setattr__(handle, "_fitted", fitted)
        return handle
    if tag == _T_SPLITTER:
        scheme = r.string()
        k = r.i64()
        shuffle = bool(r.u8())
        seed = r.i64()
        return Splitter(scheme, k=k, shuffle=shuffle, random_seed=seed)
    if tag == _T_DISTRIBUTION:
        kind = r.string()
        low = r.f64()
        high = r.f64()
        choices = tuple(_unpack_value(r))
        if kind == "choice":
            return Distribution(kind, choices=choices)
        return Distribution(kind, low=low, high=high)
    raise PersistenceError(f"unknown value tag {tag}")


# -- public API ---------------------------------------------------------------


def save(handle: EstimatorHandle, path, label_names: list[str] | None = None) -> None:
    """Write a fitted estimator to a deterministic binary archive."""
    if not handle.is_fitted:
        raise NotFittedError("only fitted estimators are archived; persist parameters as configuration instead")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", FORMAT_VERSION)
    metadata = {"library_version": __version__}
    if label_names is not None:
        metadata["label_names"] = list(label_names)
    _pack_value(out, metadata)
    _pack_value(out, handle)
    out += hashlib.blake2b(bytes(out), digest_size=_CHECKSUM_BYTES).digest()
    with open(path, "wb") as fh:
        fh.write(bytes(out))


def load_archive(path) -> ModelArchive:
    """Verify, decode, and rebuild an archive; never executes stored content."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 4 + _CHECKSUM_BYTES or blob[: len(MAGIC)] != MAGIC:
        raise PersistenceError("not a model archive (bad magic)")
    payload, checksum = blob[:-_CHECKSUM_BYTES], blob[-_CHECKSUM_BYTES:]
    expected = hashlib.blake2b(payload, digest_size=_CHECKSUM_BYTES).digest()
    if checksum != expected:
        raise PersistenceError("archive checksum mismatch; file is corrupt")
    r = _Reader(payload)
    r.take(len(MAGIC))
    version = r.u32()
    if version > FORMAT_VERSION:
        raise PersistenceError(f"archive format version {version} is newer than supported {FORMAT_VERSION}")
    metadata = _unpack_value(r)
    estimator = _unpack_value(r)
    if not isinstance(estimator, EstimatorHandle):
        raise PersistenceError("archive does not contain an estimator block")
    return ModelArchive(
        estimator=estimator,
        format_version=version,
        library_version=str(metadata.get("library_version", "")),
        label_names=metadata.get("label_names"),
    )


def load(path) -> EstimatorHandle:
    """Load the fitted estimator stored at ``path``."""
    return load_archive(path).estimator
