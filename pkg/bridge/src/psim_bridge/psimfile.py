"""PSIM binary writer (and a validating reader for self-checks).

Format (little-endian): magic ``PSIM``, u32 version=1, u64 count, u32 dim,
u32 dtype=1 (float32), then count*dim float32 row-major. Sidecar ``*.ids``
holds one patent_id per line, line i <-> row i. Files are written atomically
(temp file + rename).
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"PSIM"
VERSION = 1
DTYPE_FLOAT32 = 1
_HEADER = struct.Struct("<4sIQII")


class BridgeError(Exception):
    pass


def ids_path(path) -> Path:
    return Path(path).with_suffix(".ids")


def _atomic_write(path: Path, payload: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_psim(path, ids, data) -> Path:
    path = Path(path)
    data = np.ascontiguousarray(data, dtype="<f4")
    ids = [str(i) for i in ids]
    if data.ndim != 2:
        raise BridgeError("embedding data must be 2-dimensional")
    if data.shape[1] <= 0:
        raise BridgeError("dim must be positive")
    if len(ids) != data.shape[0]:
        raise BridgeError("ids/rows mismatch")
    if not np.isfinite(data).all():
        raise BridgeError("non-finite embedding value")
    header = _HEADER.pack(MAGIC, VERSION, data.shape[0], data.shape[1], DTYPE_FLOAT32)
    _atomic_write(path, header + data.tobytes())
    _atomic_write(ids_path(path), ("".join(p + "\n" for p in ids)).encode("utf-8"))
    return path


def read_psim(path) -> tuple[list[str], np.ndarray]:
    """Validating reader used by the bridge's own tests."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise BridgeError(f"{path}: truncated header")
    magic, version, count, dim, dtype = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION or dtype != DTYPE_FLOAT32:
        raise BridgeError(f"{path}: bad header")
    expected = _HEADER.size + count * dim * 4
    if len(raw) != expected:
        raise BridgeError(f"{path}: size mismatch")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(count, dim)
    ids = ids_path(path).read_text(encoding="utf-8").splitlines()
    if len(ids) != count:
        raise BridgeError(f"{path}: ids sidecar count mismatch")
    return ids, data
