"""VRT1 binary snapshots.

Layout (little-endian): ``b"VRT1"``, u32 n_points, f64 side_length,
f64 time, u8 kind (0 scalar, 1 vector), then n^2 (scalar) or 2 n^2 (vector:
x block then y block) f64 values in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fields import Grid, ScalarField, VectorField

__all__ = ["MAGIC", "encode_snapshot", "decode_snapshot", "write_snapshot", "read_snapshot"]

MAGIC = b"VRT1"
_HEADER = struct.Struct("<4sIddB")
SCALAR, VECTOR = 0, 1


def encode_snapshot(field, time: float) -> bytes:
    grid = field.grid
    if isinstance(field, VectorField):
        kind = VECTOR
        data = np.concatenate([field.x_component.ravel(), field.y_component.ravel()])
    elif isinstance(field, ScalarField):
        kind = SCALAR
        data = field.values.ravel()
    else:
        raise TypeError(f"cannot encode {type(field).__name__}")
    header = _HEADER.pack(MAGIC, grid.n_points, grid.side_length, float(time), kind)
    return header + data.astype("<f8").tobytes()


def decode_snapshot(blob: bytes, dealias_fraction: float = 2.0 / 3.0):
    """Return ``(field, time)``; the dealias fraction is not stored in the file."""
    if len(blob) < _HEADER.size:
        raise ValueError("truncated VRT1 header")
    magic, n, side, time, kind = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    ncomp = {SCALAR: 1, VECTOR: 2}.get(kind)
    if ncomp is None:
        raise ValueError(f"unknown field-kind tag {kind}")
    expected = _HEADER.size + 8 * ncomp * n * n
    if len(blob) != expected:
        raise ValueError(f"VRT1 payload has {len(blob)} bytes, expected {expected}")
    grid = Grid(n, side, dealias_fraction)
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).astype(float)
    if kind == SCALAR:
        return ScalarField(grid, data.reshape(n, n)), time
    return VectorField(grid, data[: n * n].reshape(n, n), data[n * n :].reshape(n, n)), time


def write_snapshot(path, field, time: float) -> None:
    Path(path).write_bytes(encode_snapshot(field, time))


def read_snapshot(path, dealias_fraction: float = 2.0 / 3.0):
    return decode_snapshot(Path(path).read_bytes(), dealias_fraction)
