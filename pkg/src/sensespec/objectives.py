"""Training objectives and minibatch sampling.

Two losses over specialized embeddings:

* contrastive attract-repel over sense pairs: scaled-cosine softmax
  cross-entropy of each anchor against its sampled related sense, with
  co-batched senses acting as weak negatives and same-lemma senses as
  hard negatives (at most five, sampled without replacement);
* self-training over context-sense pairs: ``1 - max`` candidate cosine
  per word, gradient flowing only through the argmax candidate.

Both return exact analytic gradients with respect to the embedding
vectors they consume; mapping the gradients back onto network parameters
is the trainer's job.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .lexicon import Lexicon, WordInstance

MAX_HARD_NEGATIVES = 5


class ObjectiveError(ValueError):
    pass


@dataclass(frozen=True)
class AnchorSample:
    sense: str
    positive: str
    hard_negatives: tuple[str, ...]


@dataclass(frozen=True)
class SenseBatch:
    """A minibatch of senses.

    ``members`` is the full draw (everything in it serves as a weak
    negative for the others); ``anchors`` covers the members that have a
    nonempty related set, each paired with its sampled positive and hard
    negatives.
    """

    members: tuple[str, ...]
    anchors: tuple[AnchorSample, ...]


@dataclass(frozen=True)
class WordBatch:
    words: tuple[WordInstance, ...]


@dataclass(frozen=True)
class LossValue:
    total: float
    attract_repel: float
    self_train: float
    alpha: float


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ObjectiveError("cosine of a zero-norm vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def build_sense_batch(
    lex: Lexicon, members: Sequence[str], rng: np.random.Generator
) -> SenseBatch:
    """Attach positives and hard negatives to a drawn member list.

    Members without related senses are skipped as anchors but still count
    as weak negatives for everyone else.
    """
    anchors = []
    for key in members:
        record = lex.senses[key]
        if not record.related:
            continue
        positive = record.related[int(rng.integers(len(record.related)))]
        different = record.different
        if len(different) > MAX_HARD_NEGATIVES:
            idx = rng.choice(len(different), size=MAX_HARD_NEGATIVES, replace=False)
            hard = tuple(different[int(i)] for i in sorted(idx))
        else:
            hard = different
        anchors.append(AnchorSample(sense=key, positive=positive, hard_negatives=hard))
    return SenseBatch(members=tuple(members), anchors=tuple(anchors))


class EpochSampler:
    """Sense-key traversal defining an epoch, plus independent word draws.

    Each epoch shuffles the full sense inventory and yields batches of at
    most ``batch_size`` until exhausted.  Word instances are drawn from
    their own shuffled permutation; leftovers at epoch end are discarded,
    and a too-small word pool is reshuffled mid-epoch.
    """

    def __init__(
        self,
        lex: Lexicon,
        words: Sequence[WordInstance],
        batch_size: int,
        rng: np.random.Generator,
    ) -> None:
        self.lex = lex
        self.words = list(words)
        self.batch_size = batch_size
        self.rng = rng
        self._sense_keys = list(lex.senses)

    def epoch(self) -> Iterator[tuple[SenseBatch, WordBatch]]:
        order = self.rng.permutation(len(self._sense_keys))
        word_order: list[int] = []
        word_pos = 0
        for start in range(0, len(order), self.batch_size):
            members = [self._sense_keys[i] for i in order[start : start + self.batch_size]]
            sense_batch = build_sense_batch(self.lex, members, self.rng)
            picked: list[WordInstance] = []
            if self.words:
                while len(picked) < min(self.batch_size, len(self.words)):
                    if word_pos >= len(word_order):
                        word_order = list(self.rng.permutation(len(self.words)))
                        word_pos = 0
                    picked.append(self.words[word_order[word_pos]])
                    word_pos += 1
            yield sense_batch, WordBatch(words=tuple(picked))


def _cosine_pair_grads(
    a: np.ndarray, B: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cosines of ``a`` against the rows of ``B`` and their gradients."""
    na = np.linalg.norm(a)
    nb = np.linalg.norm(B, axis=1)
    if na == 0.0 or (nb.size and nb.min() == 0.0):
        raise ObjectiveError("cosine of a zero-norm vector")
    dots = B @ a
    cos = dots / (na * nb)
    # d cos / d a = b/(|a||b|) - cos * a/|a|^2 ; symmetric for b.
    dcos_da = B / (na * nb)[:, None] - np.outer(cos / (na * na), a)
    dcos_db = a[None, :] / (na * nb)[:, None] - (cos / (nb * nb))[:, None] * B
    return np.clip(cos, -1.0, 1.0), dcos_da, dcos_db


def attract_repel_loss(
    batch: SenseBatch,
    vectors: Mapping[str, np.ndarray],
    beta: float,
    repel_unrelated: bool = True,
    repel_different: bool = True,
) -> tuple[float, dict[str, np.ndarray]]:
    """Contrastive loss over the batch and gradients per sense vector.

    Logits are ``beta * cosine`` and are max-shifted before
    exponentiation, so the loss stays finite at cosines of +-1 even with
    large ``beta``.  The softmax support is the union of the positive,
    the co-batched senses and the hard negatives (deduplicated).
    """
    if beta <= 0:
        raise ObjectiveError("beta must be positive")
    total = 0.0
    grads: dict[str, np.ndarray] = {}
    member_set = set(batch.members)
    for anchor in batch.anchors:
        support = [anchor.positive]
        seen = {anchor.positive, anchor.sense}
        if repel_unrelated:
            for key in batch.members:
                if key not in seen:
                    support.append(key)
                    seen.add(key)
        if repel_different:
            for key in anchor.hard_negatives:
                if key not in seen:
                    support.append(key)
                    seen.add(key)
        a = np.asarray(vectors[anchor.sense], dtype=np.float64)
        B = np.stack([np.asarray(vectors[k], dtype=np.float64) for k in support])
        cos, dcos_da, dcos_db = _cosine_pair_grads(a, B)
        logits = beta * cos
        shift = logits.max()
        exp = np.exp(logits - shift)
        denom = exp.sum()
        total += float(np.log(denom) + shift - logits[0])
        dlogit = exp / denom
        dlogit[0] -= 1.0
        dcos = beta * dlogit
        ga = dcos @ dcos_da
        _accumulate(grads, anchor.sense, ga)
        gB = dcos[:, None] * dcos_db
        for key, g in zip(support, gB):
            _accumulate(grads, key, g)
    # Keep every member addressable even when it got no gradient.
    for key in member_set:
        grads.setdefault(key, np.zeros_like(np.asarray(vectors[key], dtype=np.float64)))
    return total, grads


def _accumulate(grads: dict[str, np.ndarray], key: str, g: np.ndarray) -> None:
    if key in grads:
        grads[key] = grads[key] + g
    else:
        grads[key] = g.copy()


def self_training_loss(
    batch: WordBatch,
    context_vectors: Mapping[str, np.ndarray],
    sense_vectors: Mapping[str, np.ndarray],
) -> tuple[float, dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Per word, one minus the best candidate cosine.

    Gradient flows only through the argmax candidate; ties resolve to the
    earliest candidate in inventory order.
    """
    total = 0.0
    ctx_grads: dict[str, np.ndarray] = {}
    sense_grads: dict[str, np.ndarray] = {}
    for word in batch.words:
        if not word.candidates:
            raise ObjectiveError(f"instance {word.instance_id!r} has no candidates")
        v = np.asarray(context_vectors[word.instance_id], dtype=np.float64)
        B = np.stack(
            [np.asarray(sense_vectors[k], dtype=np.float64) for k in word.candidates]
        )
        cos, dcos_dv, dcos_db = _cosine_pair_grads(v, B)
        best = int(np.argmax(cos))
        # The scalar path keeps the documented 1 - cos identity exact;
        # gemv rounding in the batched cosines can differ by one ulp.
        total += 1.0 - cosine(v, B[best])
        _accumulate(ctx_grads, word.instance_id, -dcos_dv[best])
        _accumulate(sense_grads, word.candidates[best], -dcos_db[best])
    return total, ctx_grads, sense_grads


def combined_loss(ar: float, st: float, alpha: float) -> LossValue:
    if alpha < 0:
        raise ObjectiveError("alpha must be nonnegative")
    return LossValue(
        total=ar + alpha * st, attract_repel=ar, self_train=st, alpha=alpha
    )
