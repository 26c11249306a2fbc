"""Binary storage for dense embedding tables.

Two files per table:

* ``.vecs`` -- 32-byte header followed by row-major float32 little-endian
  payload.  Header: bytes 0-3 magic ``SSWD``, bytes 4-7 format version
  (u32 LE, currently 1), bytes 8-15 row count (u64 LE), bytes 16-19
  dimension (u32 LE), bytes 20-31 reserved zero.
* ``.keys`` -- UTF-8 text, one key per line (``\\n`` terminated); line i
  names row i of the payload.

Tables are immutable after load and safe for concurrent readers.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"SSWD"
FORMAT_VERSION = 1
HEADER_SIZE = 32
_HEADER = struct.Struct("<4sIQI12s")


class VectorFileError(ValueError):
    """Malformed vector or key file."""


class UnknownKeyError(KeyError):
    """Lookup of a key that is not present in the table."""


@dataclass(frozen=True)
class VectorRef:
    key: str
    values: np.ndarray


@dataclass
class EmbeddingTable:
    """Keyed dense float32 matrix, one row per key."""

    dim: int
    keys: list[str]
    vectors: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2:
            raise VectorFileError("vectors must be a 2-d matrix")
        rows, dim = self.vectors.shape
        if dim != self.dim:
            raise VectorFileError(f"matrix width {dim} != declared dim {self.dim}")
        if rows != len(self.keys):
            raise VectorFileError(
                f"row count {rows} != key count {len(self.keys)}"
            )
        index: dict[str, int] = {}
        for i, key in enumerate(self.keys):
            if not key:
                raise VectorFileError(f"empty key at row {i}")
            if key in index:
                raise VectorFileError(f"duplicate key {key!r} at row {i}")
            index[key] = i
        object.__setattr__(self, "_index", index)
        self._validate_rows()

    def _validate_rows(self) -> None:
        finite = np.isfinite(self.vectors).all(axis=1)
        if not finite.all():
            row = int(np.flatnonzero(~finite)[0])
            raise VectorFileError(f"non-finite value in row {row} ({self.keys[row]!r})")
        norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
        if norms.size and norms.min() == 0.0:
            row = int(np.flatnonzero(norms == 0.0)[0])
            raise VectorFileError(f"zero-norm row {row} ({self.keys[row]!r})")

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def row(self, key: str) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise UnknownKeyError(key) from None

    def lookup(self, key: str) -> VectorRef:
        """Return the stored vector for ``key``; missing keys are an error."""
        return VectorRef(key=key, values=self.vectors[self.row(key)])

    def matrix_for(self, keys: list[str]) -> np.ndarray:
        rows = [self.row(k) for k in keys]
        return self.vectors[rows]


def _paths(path: str | Path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix == ".vecs":
        return p, p.with_suffix(".keys")
    if p.suffix == ".keys":
        return p.with_suffix(".vecs"), p
    return p.with_suffix(".vecs"), p.with_suffix(".keys")


def load_table(path: str | Path, keys_path: str | Path | None = None) -> EmbeddingTable:
    """Load a table from a ``.vecs``/``.keys`` pair.

    ``path`` may be the ``.vecs`` file or a bare stem; ``keys_path``
    overrides the derived key-file location.
    """
    vecs_path, derived_keys = _paths(path)
    keys_file = Path(keys_path) if keys_path is not None else derived_keys

    raw = vecs_path.read_bytes()
    if len(raw) < HEADER_SIZE:
        raise VectorFileError(f"{vecs_path}: file shorter than header")
    magic, version, rows, dim, reserved = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise VectorFileError(f"{vecs_path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VectorFileError(f"{vecs_path}: unsupported version {version}")
    if reserved != b"\x00" * 12:
        raise VectorFileError(f"{vecs_path}: reserved header bytes not zero")
    if dim == 0 or rows == 0:
        raise VectorFileError(f"{vecs_path}: degenerate shape {rows}x{dim}")
    payload = len(raw) - HEADER_SIZE
    expected = rows * dim * 4
    if payload != expected:
        raise VectorFileError(
            f"{vecs_path}: payload is {payload} bytes, header declares "
            f"{rows} rows x dim {dim} = {expected} bytes"
        )
    vectors = np.frombuffer(raw, dtype="<f4", offset=HEADER_SIZE).reshape(rows, dim)

    text = keys_file.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != rows:
        raise VectorFileError(
            f"{keys_file}: {len(lines)} keys for {rows} rows"
        )
    return EmbeddingTable(dim=int(dim), keys=lines, vectors=vectors.copy())


def write_table(table: EmbeddingTable, path: str | Path) -> None:
    """Write ``table`` to a ``.vecs``/``.keys`` pair; bytes are deterministic."""
    if len(table) == 0:
        raise VectorFileError("refusing to write a table with zero rows")
    vecs_path, keys_path = _paths(path)
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, len(table), table.dim, b"\x00" * 12)
    payload = np.ascontiguousarray(table.vectors, dtype="<f4").tobytes()
    vecs_path.write_bytes(header + payload)
    keys_path.write_text("".join(k + "\n" for k in table.keys), encoding="utf-8")


def lookup(table: EmbeddingTable, key: str) -> VectorRef:
    return table.lookup(key)
