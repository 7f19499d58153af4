"""Bit-exact on-disk formats: the tensor container and binary PGM dumps.

Container layout: magic ``43 46 54 31``, one byte ndim (1..8), ndim
little-endian uint32 extents, then the float32 payload in row-major
order, little-endian.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .metrics import PixelFrame
from .tensors import F32

__all__ = ["MAGIC", "MAX_NDIM", "export_pgm", "load_tensor", "save_tensor"]

MAGIC = b"CFT1"
MAX_NDIM = 8


def save_tensor(path, t) -> int:
    """Write a float32 tensor; returns the number of bytes written."""
    t = np.asarray(t, dtype=F32)
    if not 1 <= t.ndim <= MAX_NDIM:
        raise FormatError(f"container supports 1..{MAX_NDIM} dims, got {t.ndim}")
    t = np.ascontiguousarray(t)
    if any(d >= 1 << 32 for d in t.shape):
        raise FormatError(f"extent too large for uint32 dims: {t.shape}")
    header = MAGIC + bytes([t.ndim]) + struct.pack(f"<{t.ndim}I", *t.shape)
    payload = t.astype("<f4", copy=False).tobytes()
    data = header + payload
    Path(path).write_bytes(data)
    return len(data)


def load_tensor(path) -> np.ndarray:
    """Read a tensor back; validates magic, ndim, and payload length."""
    data = Path(path).read_bytes()
    if len(data) < 5 or data[:4] != MAGIC:
        raise FormatError(f"bad magic in {path}: {data[:4]!r} != {MAGIC!r}")
    ndim = data[4]
    if not 1 <= ndim <= MAX_NDIM:
        raise FormatError(f"ndim {ndim} outside 1..{MAX_NDIM} in {path}")
    dims_end = 5 + 4 * ndim
    if len(data) < dims_end:
        raise FormatError(f"truncated dims in {path}: {len(data)} bytes, need {dims_end}")
    shape = struct.unpack(f"<{ndim}I", data[5:dims_end])
    expected = 4 * int(np.prod(shape, dtype=np.int64))
    actual = len(data) - dims_end
    if actual != expected:
        raise FormatError(
            f"payload length mismatch in {path}: expected {expected} bytes, got {actual}"
        )
    flat = np.frombuffer(data, dtype="<f4", offset=dims_end)
    return flat.astype(F32, copy=True).reshape(shape)


def export_pgm(frame: PixelFrame, path) -> int:
    """Write a binary PGM (P5, maxval 255); returns the byte count.

    Intensities map by floor(v * 255 + 0.5) (half-up).
    """
    h, w = frame.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    values = np.floor(frame.grid * 255.0 + 0.5).astype(np.uint8)
    data = header + values.tobytes()
    Path(path).write_bytes(data)
    return len(data)
