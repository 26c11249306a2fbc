"""Synthetic sense/context universes for tests and the bundled toy data.

The construction mirrors the situation the method is designed to repair.
Senses live in related clusters scattered over the unit sphere.  Each
lemma pairs a gold sense from one cluster with a wrong sense from a
neighboring cluster, both tilted toward the midpoint direction between
the two clusters, and every held-out context sits near that midpoint
with the wrong sense winning by a small margin.

Two extra on-axis senses per cluster shape the contrastive forces.  A
rear guard sits behind the gold sense, so the gold's dominant repulsion
pushes it toward the contested contexts; a forward guard sits beyond the
wrong sense, pushing it away from them.  Training contexts cover only
half the lemmas and are mostly placed on the gold side, the way a broad
unlabeled corpus is mostly predicted correctly before specialization:
self-training propagates that signal through the context map, while the
uncovered lemmas can only be repaired by moving sense embeddings.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lexicon import Lexicon, SUBSETS, load_lexicon
from .vecstore import EmbeddingTable, write_table


@dataclass
class Universe:
    sense_table: EmbeddingTable
    context_table: EmbeddingTable
    lexicon_lines: list[str]

    def lexicon(self) -> Lexicon:
        import tempfile

        with tempfile.NamedTemporaryFile(
            "w", suffix=".jsonl", delete=False, encoding="utf-8"
        ) as fh:
            fh.write("\n".join(self.lexicon_lines) + "\n")
            name = fh.name
        try:
            return load_lexicon(name)
        finally:
            Path(name).unlink(missing_ok=True)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _margin_mixture(
    gold_dir: np.ndarray,
    wrong_dir: np.ndarray,
    noise: np.ndarray,
    target: float,
) -> np.ndarray:
    """Unit vector whose wrong-minus-gold cosine gap equals ``target``."""

    def margin(t: float) -> float:
        v = (1.0 - t) * gold_dir + t * wrong_dir + noise
        v = v / np.linalg.norm(v)
        return float(v @ wrong_dir - v @ gold_dir)

    lo, hi = 0.0, 1.0
    if margin(lo) >= target:
        t = lo
    elif margin(hi) <= target:
        t = hi
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if margin(mid) < target:
                lo = mid
            else:
                hi = mid
        t = 0.5 * (lo + hi)
    v = (1.0 - t) * gold_dir + t * wrong_dir + noise
    return v / np.linalg.norm(v)


def build_universe(
    dim: int = 16,
    clusters: int = 8,
    senses_per_cluster: int = 5,
    n_eval: int = 120,
    n_train: int = 120,
    margin_low: float = 0.005,
    margin_high: float = 0.04,
    covered_noise: float = 0.08,
    uncovered_noise: float = 0.5,
    train_correct: float = 0.7,
    gold_tilt: float = 0.25,
    rear_tilt: float = 0.45,
    fwd_tilt: float = 0.75,
    filler_spread: float = 0.75,
    norm: float = 100.0,
    seed: int = 11,
    dev_subset_only: bool = False,
) -> Universe:
    """Build a recovery universe; see the module docstring for the layout.

    Clusters are consumed in pairs: the even cluster of each pair hosts a
    lemma's gold sense plus its rear guard, the odd cluster hosts the
    wrong sense plus its forward guard.  The first half of the lemmas get
    training contexts (``train_correct`` of them on the gold side); the
    rest appear only in the held-out split, with their contexts scattered
    by ``uncovered_noise`` so a fix must come from the sense embeddings.
    """
    if clusters % 2 or clusters < 2:
        raise ValueError("clusters must be even and at least 2")
    if senses_per_cluster < 3:
        raise ValueError("need a primary sense, a guard, and a filler per cluster")
    rng = np.random.default_rng(seed)
    centers = np.stack([_unit(rng.normal(size=dim)) for _ in range(clusters)])

    dirs: dict[str, np.ndarray] = {}
    cluster_of: dict[str, int] = {}
    lemmas: list[tuple[str, str, str]] = []  # (lemma, gold sense, wrong sense)

    def key_for(c: int, i: int) -> str:
        return f"syn{c}_{i}%1:{c:02d}:{i:02d}::"

    for j in range(clusters // 2):
        a, b = 2 * j, 2 * j + 1
        mid = _unit(centers[a] + centers[b])
        gold, rear = key_for(a, 0), key_for(a, 1)
        wrong, fwd = key_for(b, 0), key_for(b, 1)
        dirs[gold] = _unit(centers[a] + gold_tilt * mid)
        dirs[rear] = _unit(centers[a] - rear_tilt * mid)
        dirs[wrong] = _unit(centers[b] + gold_tilt * mid)
        dirs[fwd] = _unit(centers[b] + fwd_tilt * mid)
        for k, c in ((gold, a), (rear, a), (wrong, b), (fwd, b)):
            cluster_of[k] = c
        for c in (a, b):
            for i in range(2, senses_per_cluster):
                k = key_for(c, i)
                side = rng.normal(size=dim)
                side -= (side @ centers[c]) * centers[c]
                dirs[k] = _unit(centers[c] + filler_spread * _unit(side))
                cluster_of[k] = c
        lemmas.append((f"lemma{j}", gold, wrong))

    sense_keys = sorted(dirs, key=lambda k: (cluster_of[k], k))
    lines: list[str] = []
    for key in sense_keys:
        c = cluster_of[key]
        mates = [k for k in sense_keys if cluster_of[k] == c and k != key]
        owner = next((lm for lm in lemmas if key in (lm[1], lm[2])), None)
        lemma = owner[0] if owner else f"solo_{key}"
        partner = None
        if owner is not None:
            partner = owner[2] if key == owner[1] else owner[1]
        lines.append(
            json.dumps(
                {
                    "kind": "sense",
                    "sense_key": key,
                    "lemma": lemma,
                    "pos": "NOUN",
                    "synset": f"synset.{c}",
                    "related": mates,
                    "different": [partner] if partner else [],
                    "csi": [f"class{c}"],
                },
                sort_keys=True,
            )
        )
    for lemma, a, b in lemmas:
        lines.append(
            json.dumps(
                {"kind": "entry", "lemma": lemma, "pos": "NOUN", "senses": [a, b]},
                sort_keys=True,
            )
        )
    for key in sense_keys:
        if not any(key in (a, b) for _, a, b in lemmas):
            lines.append(
                json.dumps(
                    {
                        "kind": "entry",
                        "lemma": f"solo_{key}",
                        "pos": "NOUN",
                        "senses": [key],
                    },
                    sort_keys=True,
                )
            )

    covered = list(range(max(1, len(lemmas) // 2)))
    ctx_keys: list[str] = []
    ctx_rows: list[np.ndarray] = []
    for k in range(n_eval):
        j = k % len(lemmas)
        lemma, gold, wrong = lemmas[j]
        spread = covered_noise if j in covered else uncovered_noise
        target = float(rng.uniform(margin_low, margin_high))
        noise = spread * _unit(rng.normal(size=dim))
        v = _margin_mixture(dirs[gold], dirs[wrong], noise, target)
        subset = "SE07" if dev_subset_only else SUBSETS[k % len(SUBSETS)]
        lines.append(
            json.dumps(
                {"kind": "instance", "id": f"e{k:04d}", "lemma": lemma,
                 "pos": "NOUN", "split": "eval", "subset": subset,
                 "gold": [gold]},
                sort_keys=True,
            )
        )
        ctx_keys.append(f"e{k:04d}")
        ctx_rows.append(v)
    for k in range(n_train):
        j = covered[k % len(covered)]
        lemma, gold, wrong = lemmas[j]
        if rng.uniform() < train_correct:
            target = float(rng.uniform(-0.03, -0.005))
        else:
            target = float(rng.uniform(margin_low, margin_high))
        noise = covered_noise * _unit(rng.normal(size=dim))
        v = _margin_mixture(dirs[gold], dirs[wrong], noise, target)
        lines.append(
            json.dumps(
                {"kind": "instance", "id": f"t{k:04d}", "lemma": lemma,
                 "pos": "NOUN", "split": "train"},
                sort_keys=True,
            )
        )
        ctx_keys.append(f"t{k:04d}")
        ctx_rows.append(v)

    sense_matrix = (
        norm * np.stack([dirs[k] for k in sense_keys])
    ).astype(np.float32)
    ctx_matrix = (norm * np.stack(ctx_rows)).astype(np.float32)
    return Universe(
        sense_table=EmbeddingTable(dim=dim, keys=sense_keys, vectors=sense_matrix),
        context_table=EmbeddingTable(dim=dim, keys=ctx_keys, vectors=ctx_matrix),
        lexicon_lines=lines,
    )


def write_universe(universe: Universe, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "sense_vecs": out / "senses.vecs",
        "ctx_vecs": out / "contexts.vecs",
        "lexicon": out / "lexicon.jsonl",
    }
    write_table(universe.sense_table, paths["sense_vecs"])
    write_table(universe.context_table, paths["ctx_vecs"])
    paths["lexicon"].write_text(
        "\n".join(universe.lexicon_lines) + "\n", encoding="utf-8"
    )
    return paths


def toy_universe(seed: int = 11) -> Universe:
    """Small universe for CLI smoke tests; runs end to end in seconds."""
    return build_universe(
        dim=8,
        clusters=4,
        senses_per_cluster=4,
        n_eval=24,
        n_train=24,
        seed=seed,
    )
