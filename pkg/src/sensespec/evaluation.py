"""Scoring and similarity diagnostics.

Micro-F1 here is correct/total: the predictor emits exactly one sense per
instance, so precision, recall and F1 coincide.  The margin distribution
and the similarity-characteristics table quantify how the (possibly
identity-) specialized embedding space is arranged around the gold
answers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .engine import SenseSpecializer, specialize_context
from .lexicon import Lexicon, WordInstance
from .network import SpecializationNet
from .objectives import cosine
from .vecstore import EmbeddingTable


class EvaluationError(ValueError):
    pass


@dataclass
class CellScore:
    correct: int
    total: int

    @property
    def f1(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass
class EvalReport:
    overall: CellScore
    by_subset: dict[str, CellScore] = field(default_factory=dict)
    by_pos: dict[str, CellScore] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def cell(c: CellScore) -> dict:
            return {"correct": c.correct, "total": c.total, "f1": c.f1}

        return {
            "overall": cell(self.overall),
            "by_subset": {k: cell(v) for k, v in sorted(self.by_subset.items())},
            "by_pos": {k: cell(v) for k, v in sorted(self.by_pos.items())},
        }


def micro_f1(
    predictions: Mapping[str, str], instances: Sequence[WordInstance]
) -> EvalReport:
    """Score single-sense predictions against gold instances.

    Every gold instance must have exactly one prediction and there must be
    no extras.
    """
    ids = {w.instance_id for w in instances}
    missing = ids - set(predictions)
    if missing:
        raise EvaluationError(f"missing predictions for {sorted(missing)[:5]}")
    extra = set(predictions) - ids
    if extra:
        raise EvaluationError(f"predictions for unknown instances {sorted(extra)[:5]}")
    overall = CellScore(0, 0)
    by_subset: dict[str, CellScore] = {}
    by_pos: dict[str, CellScore] = {}
    for w in instances:
        if w.gold is None:
            raise EvaluationError(f"instance {w.instance_id!r} has no gold senses")
        hit = predictions[w.instance_id] in w.gold
        for cell in (
            overall,
            by_subset.setdefault(w.subset or "none", CellScore(0, 0)),
            by_pos.setdefault(w.pos, CellScore(0, 0)),
        ):
            cell.total += 1
            cell.correct += int(hit)
    return EvalReport(overall=overall, by_subset=by_subset, by_pos=by_pos)


@dataclass
class MarginDistribution:
    margins: list[float]
    skipped: int
    cdf: list[tuple[float, float]]

    def to_dict(self) -> dict:
        return {
            "count": len(self.margins),
            "skipped": self.skipped,
            "cdf": [[t, f] for t, f in self.cdf],
        }


DEFAULT_THRESHOLDS = tuple(np.round(np.arange(-0.5, 0.501, 0.025), 4))


def margin_distribution(
    net: SpecializationNet,
    sense_table: EmbeddingTable,
    context_table: EmbeddingTable,
    instances: Sequence[WordInstance],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> MarginDistribution:
    """Best-wrong-minus-best-gold similarity gap per instance.

    Negative means the gold sense is already the nearest neighbor.
    Instances whose candidate set is entirely gold have no defined margin;
    they are skipped and counted.
    """
    spec = SenseSpecializer(net, sense_table)
    margins: list[float] = []
    skipped = 0
    for w in instances:
        if w.gold is None:
            raise EvaluationError(f"instance {w.instance_id!r} has no gold senses")
        non_gold = [c for c in w.candidates if c not in w.gold]
        if not non_gold:
            skipped += 1
            continue
        v = specialize_context(net, context_table.lookup(w.instance_id).values)
        best_wrong = max(cosine(v, spec.get(c)) for c in non_gold)
        best_gold = max(cosine(v, spec.get(c)) for c in w.gold)
        margins.append(best_wrong - best_gold)
    arr = np.array(margins) if margins else np.zeros(0)
    cdf = [
        (float(t), float((arr <= t).mean()) if arr.size else 0.0) for t in thresholds
    ]
    cdf.append((float("inf"), 1.0 if arr.size else 0.0))
    return MarginDistribution(margins=margins, skipped=skipped, cdf=cdf)


@dataclass
class SimilarityCharacteristics:
    related: float
    unrelated: float
    different: float
    gold_context: float
    batch_size: int
    seed: int

    @property
    def delta_related(self) -> float:
        return self.related - self.gold_context

    @property
    def delta_unrelated(self) -> float:
        return self.unrelated - self.gold_context

    @property
    def delta_different(self) -> float:
        return self.different - self.gold_context

    @property
    def delta_mean(self) -> float:
        return (self.delta_related - self.delta_unrelated - self.delta_different) / 3.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(
            delta_related=self.delta_related,
            delta_unrelated=self.delta_unrelated,
            delta_different=self.delta_different,
            delta_mean=self.delta_mean,
        )
        return d


def similarity_characteristics(
    net: SpecializationNet,
    sense_table: EmbeddingTable,
    context_table: EmbeddingTable,
    lex: Lexicon,
    instances: Sequence[WordInstance],
    batch_size: int = 256,
    seed: int = 0,
) -> SimilarityCharacteristics:
    """Macro-averaged cosine to related/unrelated/different senses plus the
    gold context-sense similarity.

    Unrelated pairs come from seeded random batches of ``batch_size``
    (each sense against its batch mates); related/different averages run
    over the senses with a nonempty respective set.
    """
    spec = SenseSpecializer(net, sense_table)
    keys = list(lex.senses)

    def macro(pairs_of: dict[str, tuple[str, ...]]) -> float:
        vals = []
        for key, others in pairs_of.items():
            if not others:
                continue
            v = spec.get(key)
            vals.append(float(np.mean([cosine(v, spec.get(o)) for o in others])))
        return float(np.mean(vals)) if vals else 0.0

    related = macro({k: lex.senses[k].related for k in keys})
    different = macro({k: lex.senses[k].different for k in keys})

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(keys))
    unrelated_vals = []
    for start in range(0, len(order), batch_size):
        batch = [keys[int(i)] for i in order[start : start + batch_size]]
        if len(batch) < 2:
            continue
        mat = spec.get_many(batch)
        norms = np.linalg.norm(mat, axis=1)
        sims = (mat @ mat.T) / np.outer(norms, norms)
        np.fill_diagonal(sims, 0.0)
        unrelated_vals.extend((sims.sum(axis=1) / (len(batch) - 1)).tolist())
    unrelated = float(np.mean(unrelated_vals)) if unrelated_vals else 0.0

    gold_vals = []
    for w in instances:
        if not w.gold:
            continue
        v = specialize_context(net, context_table.lookup(w.instance_id).values)
        gold_vals.append(float(np.mean([cosine(v, spec.get(g)) for g in w.gold])))
    gold_context = float(np.mean(gold_vals)) if gold_vals else 0.0

    return SimilarityCharacteristics(
        related=related,
        unrelated=unrelated,
        different=different,
        gold_context=gold_context,
        batch_size=batch_size,
        seed=seed,
    )


def write_report(
    report: EvalReport,
    path: str | Path,
    margins: MarginDistribution | None = None,
    characteristics: SimilarityCharacteristics | None = None,
) -> None:
    payload: dict = {"scores": report.to_dict()}
    if margins is not None:
        payload["margins"] = margins.to_dict()
    if characteristics is not None:
        payload["similarity"] = characteristics.to_dict()
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
