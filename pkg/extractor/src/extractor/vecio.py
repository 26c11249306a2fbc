"""Writer for the downstream embedding-table format.

Emits the ``.vecs/.keys`` pair the specialization trainer loads:
``.vecs`` is a 32-byte header (magic ``SSWD``, u32 version 1, u64 row
count, u32 dim, 12 reserved zero bytes, all little-endian) followed by
row-major float32 LE data; ``.keys`` lists one key per line in row
order.  This module owns the format independently of the consumer.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"SSWD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQI12s")


def write_vectors(stem: str | Path, keys: list[str], matrix: np.ndarray) -> None:
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2 or matrix.shape[0] != len(keys):
        raise ValueError("matrix must be 2-D with one row per key")
    if not keys:
        raise ValueError("refusing to write an empty table")
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate keys")
    for key in keys:
        if not key or any(c in key for c in "\n\r"):
            raise ValueError(f"bad key {key!r}")
    if not np.isfinite(matrix).all():
        raise ValueError("non-finite vector values")
    stem = Path(stem)
    if stem.suffix in (".vecs", ".keys"):
        stem = stem.with_suffix("")
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, matrix.shape[0], matrix.shape[1], b"\x00" * 12
    )
    stem.with_suffix(".vecs").write_bytes(header + matrix.tobytes())
    stem.with_suffix(".keys").write_text(
        "".join(f"{k}\n" for k in keys), encoding="utf-8"
    )


def read_vectors(stem: str | Path) -> tuple[list[str], np.ndarray]:
    """Reader used for self-checks; the trainer has its own loader."""
    stem = Path(stem)
    if stem.suffix in (".vecs", ".keys"):
        stem = stem.with_suffix("")
    blob = stem.with_suffix(".vecs").read_bytes()
    magic, version, rows, dim, reserved = _HEADER.unpack(blob[: _HEADER.size])
    if magic != MAGIC or version != FORMAT_VERSION or reserved != b"\x00" * 12:
        raise ValueError("bad vector file header")
    matrix = np.frombuffer(blob[_HEADER.size :], dtype="<f4").reshape(rows, dim)
    keys = stem.with_suffix(".keys").read_text(encoding="utf-8").splitlines()
    if len(keys) != rows:
        raise ValueError("key count does not match row count")
    return keys, matrix
