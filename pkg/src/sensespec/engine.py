"""Nearest-neighbor sense prediction over specialized embeddings.

The context vector is passed through the context map and each candidate
sense through the sense map; the candidate with the highest cosine wins,
ties resolving to inventory order.  With the reranking heuristic enabled,
the top two candidates get a second chance: each one's similarity is
boosted by the best cosine between the context and the senses sharing its
coarse class, and the better boosted score wins (ties keep the plain
nearest neighbor).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .lexicon import Lexicon, WordInstance
from .network import SpecializationNet, forward_batch
from .objectives import cosine
from .vecstore import EmbeddingTable


class PredictionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Prediction:
    instance_id: str
    predicted: str
    ranked: tuple[tuple[str, float], ...]
    refined: tuple[tuple[str, float], ...] | None = None


class SenseSpecializer:
    """Caches specialized sense embeddings keyed by sense key."""

    def __init__(self, net: SpecializationNet, table: EmbeddingTable) -> None:
        self.net = net
        self.table = table
        self._cache: dict[str, np.ndarray] = {}

    def get(self, key: str) -> np.ndarray:
        vec = self._cache.get(key)
        if vec is None:
            raw = self.table.lookup(key).values.astype(np.float64)
            out, _ = forward_batch(self.net.sense_map, raw[None, :])
            vec = out[0]
            self._cache[key] = vec
        return vec

    def get_many(self, keys: Sequence[str]) -> np.ndarray:
        return np.stack([self.get(k) for k in keys])


def specialize_context(net: SpecializationNet, raw: np.ndarray) -> np.ndarray:
    out, _ = forward_batch(net.context_map, np.asarray(raw, dtype=np.float64)[None, :])
    return out[0]


def _rank(candidates: Sequence[str], rhos: np.ndarray) -> tuple[tuple[str, float], ...]:
    order = np.argsort(-rhos, kind="stable")
    return tuple((candidates[int(i)], float(rhos[int(i)])) for i in order)


def try_again(
    top2: tuple[tuple[str, float], tuple[str, float]],
    context_vec: np.ndarray,
    lex: Lexicon,
    specializer: SenseSpecializer,
) -> tuple[str, tuple[tuple[str, float], ...]]:
    """Rerank the top two candidates by coarse-class support.

    Returns the chosen sense and the boosted (sense, score) pairs.  An
    empty sibling set contributes zero; a tie keeps the plain winner.
    """
    (s1, rho1), (s2, rho2) = top2
    refined = []
    for key, rho in ((s1, rho1), (s2, rho2)):
        siblings = sorted(lex.csi_siblings(key))
        support = 0.0
        if siblings:
            mat = specializer.get_many(siblings)
            support = max(cosine(context_vec, row) for row in mat)
        refined.append((key, rho + support))
    chosen = refined[1][0] if refined[1][1] > refined[0][1] else refined[0][0]
    return chosen, tuple(refined)


def predict(
    net: SpecializationNet,
    context_raw: np.ndarray,
    candidates: Sequence[str],
    sense_table: EmbeddingTable,
    lex: Lexicon | None = None,
    use_tam: bool = False,
    instance_id: str = "",
    specializer: SenseSpecializer | None = None,
) -> Prediction:
    if not candidates:
        raise PredictionError(f"instance {instance_id!r} has no candidates")
    spec = specializer if specializer is not None else SenseSpecializer(net, sense_table)
    v = specialize_context(net, context_raw)
    mat = spec.get_many(list(candidates))
    rhos = np.array([cosine(v, row) for row in mat])
    ranked = _rank(candidates, rhos)
    predicted = ranked[0][0]
    refined = None
    if use_tam and len(candidates) >= 2:
        if lex is None:
            raise PredictionError("reranking requires a lexicon")
        predicted, refined = try_again((ranked[0], ranked[1]), v, lex, spec)
    return Prediction(
        instance_id=instance_id, predicted=predicted, ranked=ranked, refined=refined
    )


def predict_corpus(
    net: SpecializationNet,
    sense_table: EmbeddingTable,
    context_table: EmbeddingTable,
    lex: Lexicon,
    instances: Sequence[WordInstance],
    use_tam: bool = False,
) -> list[Prediction]:
    """Predict every instance in input order."""
    spec = SenseSpecializer(net, sense_table)
    out = []
    for word in instances:
        try:
            raw = context_table.lookup(word.instance_id).values
            out.append(
                predict(
                    net,
                    raw,
                    word.candidates,
                    sense_table,
                    lex=lex,
                    use_tam=use_tam,
                    instance_id=word.instance_id,
                    specializer=spec,
                )
            )
        except Exception as exc:
            raise PredictionError(f"instance {word.instance_id!r}: {exc}") from exc
    return out


def write_predictions(predictions: Sequence[Prediction], path: str | Path) -> None:
    """Scorer key-file convention: one ``<instance_id> <sense_key>`` line each."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in predictions:
            fh.write(f"{p.instance_id} {p.predicted}\n")


def read_predictions(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PredictionError(f"{path}:{lineno}: expected 'id sense_key'")
        if parts[0] in out:
            raise PredictionError(f"{path}:{lineno}: duplicate id {parts[0]!r}")
        out[parts[0]] = parts[1]
    return out
