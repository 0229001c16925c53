"""Binary feature files and frame-label text files.

Feature file layout: 4-byte magic ``DNF1``, little-endian uint32 row count,
little-endian uint32 feature dimension, then row-major float32 data. The
format is bit-exact, so identical arrays always produce identical files.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DataError

FEATURE_MAGIC = b"DNF1"
_HEADER = struct.Struct("<4sII")


def write_feature_file(path, features) -> None:
    arr = np.ascontiguousarray(features, dtype="<f4")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataError(f"{path}: features must be a non-empty 2-D array")
    n_rows, dim = arr.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, n_rows, dim))
        fh.write(arr.tobytes())


def read_feature_file(path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise DataError(f"{path}: truncated feature file header")
    magic, n_rows, dim = _HEADER.unpack_from(data)
    if magic != FEATURE_MAGIC:
        raise DataError(f"{path}: bad magic bytes {magic!r}, expected {FEATURE_MAGIC!r}")
    if n_rows < 1 or dim < 1:
        raise DataError(f"{path}: invalid shape ({n_rows} x {dim})")
    expected = _HEADER.size + 4 * n_rows * dim
    if len(data) != expected:
        raise DataError(f"{path}: size {len(data)} does not match header "
                        f"({n_rows} x {dim} -> {expected} bytes)")
    arr = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    return arr.reshape(n_rows, dim).copy()


def write_gt_file(path, labels) -> None:
    arr = np.asarray(labels).astype(np.int64)
    if arr.ndim != 1:
        raise DataError(f"{path}: frame labels must be 1-D")
    if not np.isin(arr, (0, 1)).all():
        raise DataError(f"{path}: frame labels must be 0 or 1")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{v}\n" for v in arr))


def read_gt_file(path) -> np.ndarray:
    path = Path(path)
    values = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line not in ("0", "1"):
            raise DataError(f"{path}:{lineno}: expected 0 or 1, got {line!r}")
        values.append(int(line))
    if not values:
        raise DataError(f"{path}: no frame labels")
    return np.asarray(values, dtype=np.int8)
