"""Distance-bounded residual transformations of embeddings.

Each map computes ``y = x + eps * ||x|| * (2*sigmoid(ffnn(x)) - 1)`` where
the feedforward part is linear -> relu -> linear.  Because the residual
term lies in ``(-1, 1)^dim`` componentwise, the relative L2 deviation
``||y - x|| / ||x||`` is hard-bounded by ``eps * sqrt(dim)``.

Parameters are held in float64 for training; checkpoints store float32
little-endian tensors (see ``save_checkpoint``).  With a zero second
layer the map is the exact identity, which is how ``init`` starts it.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

CHECKPOINT_MAGIC = b"SSWM"
CHECKPOINT_VERSION = 1


class NetworkError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass
class Gradients:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def scaled(self, factor: float) -> "Gradients":
        return Gradients(self.W1 * factor, self.b1 * factor, self.W2 * factor, self.b2 * factor)

    def add_(self, other: "Gradients") -> "Gradients":
        self.W1 += other.W1
        self.b1 += other.b1
        self.W2 += other.W2
        self.b2 += other.b2
        return self


@dataclass
class ResidualMap:
    dim: int
    hidden: int
    W1: np.ndarray  # hidden x dim
    b1: np.ndarray  # hidden
    W2: np.ndarray  # dim x hidden
    b2: np.ndarray  # dim
    epsilon: float

    def __post_init__(self) -> None:
        if self.W1.shape != (self.hidden, self.dim):
            raise NetworkError(f"W1 shape {self.W1.shape} != ({self.hidden}, {self.dim})")
        if self.b1.shape != (self.hidden,):
            raise NetworkError("b1 shape mismatch")
        if self.W2.shape != (self.dim, self.hidden):
            raise NetworkError(f"W2 shape {self.W2.shape} != ({self.dim}, {self.hidden})")
        if self.b2.shape != (self.dim,):
            raise NetworkError("b2 shape mismatch")
        if self.epsilon < 0:
            raise NetworkError("epsilon must be nonnegative")

    def params(self, prefix: str) -> dict[str, np.ndarray]:
        return {
            f"{prefix}.W1": self.W1,
            f"{prefix}.b1": self.b1,
            f"{prefix}.W2": self.W2,
            f"{prefix}.b2": self.b2,
        }

    def zero_gradients(self) -> Gradients:
        return Gradients(
            np.zeros_like(self.W1),
            np.zeros_like(self.b1),
            np.zeros_like(self.W2),
            np.zeros_like(self.b2),
        )


@dataclass
class ForwardCache:
    X: np.ndarray       # inputs, n x dim
    norms: np.ndarray   # n
    A: np.ndarray       # preactivations, n x hidden
    Hh: np.ndarray      # relu outputs
    S: np.ndarray       # sigmoid outputs
    F: np.ndarray       # residual directions in (-1, 1)
    Y: np.ndarray


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward_batch(rmap: ResidualMap, X: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != rmap.dim:
        raise NetworkError(f"input shape {X.shape} incompatible with dim {rmap.dim}")
    if not np.isfinite(X).all():
        raise NetworkError("non-finite input")
    norms = np.linalg.norm(X, axis=1)
    if norms.size and norms.min() == 0.0:
        raise NetworkError("zero-norm input row")
    A = X @ rmap.W1.T + rmap.b1
    Hh = np.maximum(A, 0.0)
    Z = Hh @ rmap.W2.T + rmap.b2
    S = _sigmoid(Z)
    F = 2.0 * S - 1.0
    Y = X + rmap.epsilon * norms[:, None] * F
    return Y, ForwardCache(X=X, norms=norms, A=A, Hh=Hh, S=S, F=F, Y=Y)


def backward_batch(
    rmap: ResidualMap, cache: ForwardCache, upstream: np.ndarray
) -> tuple[Gradients, np.ndarray]:
    """Exact gradients of the batched forward pass.

    ``upstream`` holds dL/dY rows; returns parameter gradients summed over
    the batch plus dL/dX.  The epsilon path's dependence on ||x|| is
    included.
    """
    U = np.asarray(upstream, dtype=np.float64)
    if U.shape != cache.Y.shape:
        raise NetworkError(f"upstream shape {U.shape} != output shape {cache.Y.shape}")
    eps = rmap.epsilon
    dF = eps * cache.norms[:, None] * U
    dZ = dF * 2.0 * cache.S * (1.0 - cache.S)
    gW2 = dZ.T @ cache.Hh
    gb2 = dZ.sum(axis=0)
    dH = dZ @ rmap.W2
    dA = dH * (cache.A > 0.0)
    gW1 = dA.T @ cache.X
    gb1 = dA.sum(axis=0)
    uf = np.einsum("ij,ij->i", U, cache.F)
    dX = (
        U
        + eps * (uf / cache.norms)[:, None] * cache.X
        + dA @ rmap.W1
    )
    return Gradients(gW1, gb1, gW2, gb2), dX


def forward(rmap: ResidualMap, x: np.ndarray) -> np.ndarray:
    """Single-vector convenience wrapper around ``forward_batch``."""
    y, _ = forward_batch(rmap, np.asarray(x, dtype=np.float64)[None, :])
    return y[0]


def backward(
    rmap: ResidualMap, x: np.ndarray, upstream: np.ndarray
) -> tuple[Gradients, np.ndarray]:
    _, cache = forward_batch(rmap, np.asarray(x, dtype=np.float64)[None, :])
    grads, dX = backward_batch(rmap, cache, np.asarray(upstream, dtype=np.float64)[None, :])
    return grads, dX[0]


def init(dim: int, hidden: int, epsilon: float, seed: int) -> ResidualMap:
    """Seeded init; the zeroed output layer makes the map the exact identity."""
    if dim <= 0 or hidden <= 0:
        raise NetworkError("dim and hidden must be positive")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(dim)
    # Draws are snapped to the float32 grid so a fresh net roundtrips the
    # float32 checkpoint format bitwise.
    def draw(*shape: int) -> np.ndarray:
        return rng.uniform(-bound, bound, size=shape).astype(np.float32).astype(np.float64)

    return ResidualMap(
        dim=dim,
        hidden=hidden,
        W1=draw(hidden, dim),
        b1=draw(hidden),
        W2=np.zeros((dim, hidden)),
        b2=np.zeros(dim),
        epsilon=float(epsilon),
    )


def identity_map(dim: int, hidden: int = 1, epsilon: float = 0.0) -> ResidualMap:
    return ResidualMap(
        dim=dim,
        hidden=hidden,
        W1=np.zeros((hidden, dim)),
        b1=np.zeros(hidden),
        W2=np.zeros((dim, hidden)),
        b2=np.zeros(dim),
        epsilon=float(epsilon),
    )


@dataclass
class SpecializationNet:
    context_map: ResidualMap
    sense_map: ResidualMap

    def __post_init__(self) -> None:
        if self.context_map.dim != self.sense_map.dim:
            raise NetworkError("context and sense maps must share dim")
        if self.context_map.epsilon != self.sense_map.epsilon:
            raise NetworkError("context and sense maps must share epsilon")

    @property
    def dim(self) -> int:
        return self.sense_map.dim

    @property
    def epsilon(self) -> float:
        return self.sense_map.epsilon

    @classmethod
    def fresh(cls, dim: int, hidden: int, epsilon: float, seed: int) -> "SpecializationNet":
        # Distinct streams for the two maps; both start as the identity.
        return cls(
            context_map=init(dim, hidden, epsilon, seed),
            sense_map=init(dim, hidden, epsilon, seed + 1),
        )

    @classmethod
    def identity(cls, dim: int) -> "SpecializationNet":
        return cls(context_map=identity_map(dim), sense_map=identity_map(dim))


_TENSOR_ORDER = ("W1", "b1", "W2", "b2")


def save_checkpoint(net: SpecializationNet, config: dict[str, Any], path: str | Path) -> None:
    """Serialize net + config; parameter tensors are stored float32 LE."""
    meta = dict(config)
    for field, value in (
        ("dim", net.dim),
        ("hidden", net.sense_map.hidden),
        ("epsilon", net.epsilon),
    ):
        if meta.get(field) is None:
            meta[field] = value
    meta["context_hidden"] = net.context_map.hidden
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    chunks = [CHECKPOINT_MAGIC, struct.pack("<I", CHECKPOINT_VERSION)]
    chunks.append(struct.pack("<I", len(meta_bytes)))
    chunks.append(meta_bytes)
    for rmap in (net.context_map, net.sense_map):
        for name in _TENSOR_ORDER:
            chunks.append(np.ascontiguousarray(getattr(rmap, name), dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path) -> tuple[SpecializationNet, dict[str, Any]]:
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {raw[:4]!r}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    (meta_len,) = struct.unpack_from("<I", raw, 8)
    meta = json.loads(raw[12 : 12 + meta_len].decode("utf-8"))
    dim = int(meta["dim"])
    epsilon = float(meta["epsilon"])
    hiddens = (int(meta.get("context_hidden", meta["hidden"])), int(meta["hidden"]))
    offset = 12 + meta_len
    maps = []
    for hidden in hiddens:
        tensors = {}
        for name, shape in zip(
            _TENSOR_ORDER, ((hidden, dim), (hidden,), (dim, hidden), (dim,))
        ):
            count = int(np.prod(shape))
            arr = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
            offset += count * 4
            tensors[name] = arr.reshape(shape).astype(np.float64)
        maps.append(ResidualMap(dim=dim, hidden=hidden, epsilon=epsilon, **tensors))
    if offset != len(raw):
        raise CheckpointError(f"{path}: trailing bytes ({len(raw) - offset})")
    return SpecializationNet(context_map=maps[0], sense_map=maps[1]), meta
