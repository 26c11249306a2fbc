"""Shared builders for the test suite (importable, unlike conftest)."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from sensespec.lexicon import Lexicon, load_lexicon
from sensespec.vecstore import EmbeddingTable

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures" / "toy"

ACCEPTANCE_LINES: list[str] = []


def random_table(
    rng: np.random.Generator, keys: list[str], dim: int, scale: float = 10.0
) -> EmbeddingTable:
    """Random table with rows bounded away from zero norm."""
    mat = rng.normal(size=(len(keys), dim))
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    mat = scale * mat / norms * (0.5 + rng.uniform(size=(len(keys), 1)))
    return EmbeddingTable(dim=dim, keys=list(keys), vectors=mat.astype(np.float32))


def write_lexicon(path: Path, records: list[dict]) -> Path:
    path.write_text(
        "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n",
        encoding="utf-8",
    )
    return path


def load_records(path: Path, records: list[dict]) -> Lexicon:
    return load_lexicon(write_lexicon(path, records))


def sense_record(key: str, lemma: str, **kw) -> dict:
    rec = {
        "kind": "sense",
        "sense_key": key,
        "lemma": lemma,
        "pos": "NOUN",
        "synset": kw.pop("synset", f"syn.{key}"),
        "related": [],
        "different": [],
        "csi": [],
    }
    rec.update(kw)
    return rec


def entry_record(lemma: str, senses: list[str], pos: str = "NOUN") -> dict:
    return {"kind": "entry", "lemma": lemma, "pos": pos, "senses": senses}


def instance_record(iid: str, lemma: str, **kw) -> dict:
    rec = {"kind": "instance", "id": iid, "lemma": lemma, "pos": "NOUN"}
    rec.update(kw)
    return rec
