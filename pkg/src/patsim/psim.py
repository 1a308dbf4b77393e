"""PSIM binary embedding matrix: on-disk format, validation, maintenance.

Format (little-endian): magic ``PSIM``, u32 version=1, u64 count, u32 dim,
u32 dtype=1 (float32), then count*dim float32 row-major. A sidecar ``*.ids``
file holds one patent_id per line, line i <-> row i.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

MAGIC = b"PSIM"
VERSION = 1
DTYPE_FLOAT32 = 1
_HEADER = struct.Struct("<4sIQII")


def ids_path(path) -> Path:
    return Path(path).with_suffix(".ids")


@dataclass(frozen=True)
class EmbeddingMatrix:
    ids: tuple[str, ...]
    data: np.ndarray  # (count, dim) float32

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def row_index(self) -> dict[str, int]:
        return {pid: i for i, pid in enumerate(self.ids)}


def _validate(ids, data) -> None:
    if data.ndim != 2:
        raise ValidationError("embedding data must be 2-dimensional")
    if data.shape[1] <= 0:
        raise ValidationError("dim must be positive")
    if len(ids) != data.shape[0]:
        raise ValidationError(
            f"ids count {len(ids)} does not match row count {data.shape[0]}"
        )
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate ids in sidecar")
    bad = np.flatnonzero(~np.isfinite(data).all(axis=1))
    if bad.size:
        raise ValidationError(f"non-finite value in row {int(bad[0])}")


def read_matrix(path, mmap: bool = False) -> EmbeddingMatrix:
    """Read and validate a PSIM file plus its ids sidecar.

    With mmap=True the payload stays on disk and rows are paged in on access.
    """
    path = Path(path)
    try:
        size = os.path.getsize(path)
        with open(path, "rb") as f:
            head = f.read(_HEADER.size)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    if len(head) < _HEADER.size:
        raise ValidationError(f"{path}: truncated header")
    magic, version, count, dim, dtype = _HEADER.unpack(head)
    if magic != MAGIC:
        raise ValidationError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValidationError(f"{path}: unsupported version {version}")
    if dtype != DTYPE_FLOAT32:
        raise ValidationError(f"{path}: unsupported dtype {dtype}")
    if dim <= 0:
        raise ValidationError(f"{path}: dim must be positive")
    expected = _HEADER.size + count * dim * 4
    if size < expected:
        raise ValidationError(
            f"{path}: truncated payload (expected {expected} bytes, found {size})"
        )
    if size > expected:
        raise ValidationError(
            f"{path}: payload size mismatch (expected {expected} bytes, found {size})"
        )
    if mmap:
        data = np.memmap(path, dtype="<f4", mode="r", offset=_HEADER.size, shape=(count, dim))
    else:
        with open(path, "rb") as f:
            f.seek(_HEADER.size)
            data = np.fromfile(f, dtype="<f4", count=count * dim).reshape(count, dim)
    sidecar = ids_path(path)
    try:
        with open(sidecar, "r", encoding="utf-8") as f:
            ids = tuple(line.rstrip("\n") for line in f)
    except OSError as exc:
        raise ValidationError(f"missing ids sidecar {sidecar}: {exc}") from None
    _validate(ids, data)
    return EmbeddingMatrix(ids, data)


def write_matrix(path, ids, data) -> Path:
    """Write a validated PSIM file and its ids sidecar atomically."""
    path = Path(path)
    data = np.ascontiguousarray(data, dtype="<f4")
    ids = tuple(str(i) for i in ids)
    _validate(ids, data)
    header = _HEADER.pack(MAGIC, VERSION, data.shape[0], data.shape[1], DTYPE_FLOAT32)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(header)
            f.write(data.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    sidecar = ids_path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=sidecar.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            for pid in ids:
                f.write(pid + "\n")
        os.replace(tmp, sidecar)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def normalize(matrix: EmbeddingMatrix) -> tuple[EmbeddingMatrix, int]:
    """One-shot maintenance: rescale rows to unit norm.

    Zero-norm rows are left untouched; returns the new matrix and their count.
    Scoring never assumes normalized rows.
    """
    norms = np.linalg.norm(matrix.data.astype(np.float64), axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    data = (matrix.data.astype(np.float64) / safe[:, None]).astype(np.float32)
    return EmbeddingMatrix(matrix.ids, data), int(zero.sum())
