"""Export pipelines: embedding tables and the lexicon JSONL.

Everything written here is loadable by the downstream specialization
trainer: embedding tables via :mod:`extractor.vecio`, and the lexicon
as JSON lines with ``sense``, ``entry``, and ``instance`` records.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from extractor.encoder import SpanAlignmentError, pool_sentence, pool_span
from extractor.framework import DEV_SUBSET, ContextInstance
from extractor.inventory import Inventory, InventoryError
from extractor.sentences import EmptyDefinitionError, sentence_for
from extractor.vecio import write_vectors

log = logging.getLogger(__name__)


class ExportError(RuntimeError):
    """An export could not be completed; ``details`` lists offenders."""

    def __init__(self, message: str, details: list[str] | None = None) -> None:
        super().__init__(message)
        self.details = details or []


def export_sense_embeddings(
    encoder,
    inventory: Inventory,
    out_stem: str | Path,
    include_special: bool = False,
) -> tuple[str, ...]:
    """One averaged sentence embedding per sense; returns skipped keys."""
    keys: list[str] = []
    rows: list[np.ndarray] = []
    skipped: list[str] = []
    for key in inventory.sense_keys:
        try:
            sentence = sentence_for(inventory, key)
        except EmptyDefinitionError:
            log.warning("skipping sense %s: empty definition", key)
            skipped.append(key)
            continue
        encoded = encoder.encode(sentence)
        rows.append(pool_sentence(encoded, include_special=include_special))
        keys.append(key)
    if not keys:
        raise ExportError("no senses with definitions to export")
    write_vectors(out_stem, keys, np.stack(rows))
    return tuple(skipped)


def export_context_embeddings(
    encoder,
    instances: list[ContextInstance],
    out_stem: str | Path,
) -> None:
    """One target-span embedding per instance id."""
    if not instances:
        raise ExportError("no instances to export")
    keys: list[str] = []
    rows: list[np.ndarray] = []
    failures: list[str] = []
    for inst in instances:
        encoded = encoder.encode(inst.text)
        try:
            rows.append(pool_span(encoded, inst.start, inst.end))
        except SpanAlignmentError as exc:
            failures.append(f"{inst.instance_id}: {exc}")
            continue
        keys.append(inst.instance_id)
    if failures:
        raise ExportError(
            f"{len(failures)} instance(s) failed subword alignment", failures
        )
    write_vectors(out_stem, keys, np.stack(rows))


def export_lexicon(
    inventory: Inventory,
    out_path: str | Path,
    instances: list[ContextInstance] = (),
) -> None:
    """Sense + entry + instance records as JSON lines.

    A gold key absent from its instance's candidate list is logged and
    kept: a same-lemma gold is appended to the entry, a different-lemma
    gold re-keys the instance to the gold sense's entry (gold wins).
    """
    entries = {ek: list(keys) for ek, keys in inventory.entries().items()}
    effective: dict[str, tuple[str, str]] = {}
    for inst in instances:
        lemma, pos = inst.lemma, inst.pos
        for key in inst.gold or ():
            try:
                sense = inventory.sense(key)
            except InventoryError:
                raise ExportError(
                    f"instance {inst.instance_id!r}: gold key {key!r} "
                    "not in inventory"
                ) from None
            if key in entries.get((lemma, pos), []):
                continue
            log.warning(
                "instance %s: gold %s not among (%s, %s) candidates",
                inst.instance_id,
                key,
                lemma,
                pos,
            )
            if (sense.lemma, sense.pos) == (lemma, pos):
                entries[(lemma, pos)].append(key)
            else:
                lemma, pos = sense.lemma, sense.pos
        if (lemma, pos) not in entries:
            raise ExportError(
                f"instance {inst.instance_id!r}: no senses for "
                f"({lemma!r}, {pos!r})"
            )
        effective[inst.instance_id] = (lemma, pos)

    lines: list[str] = []
    for key in inventory.sense_keys:
        sense = inventory.sense(key)
        lines.append(
            json.dumps(
                {
                    "kind": "sense",
                    "sense_key": key,
                    "lemma": sense.lemma,
                    "pos": sense.pos,
                    "synset": sense.synset_id,
                    "related": list(inventory.related_keys(key)),
                    "different": list(inventory.different_keys(key)),
                    "csi": list(inventory.classes(key)),
                },
                ensure_ascii=False,
            )
        )
    for (lemma, pos), keys in entries.items():
        lines.append(
            json.dumps(
                {"kind": "entry", "lemma": lemma, "pos": pos, "senses": keys},
                ensure_ascii=False,
            )
        )
    for inst in instances:
        lemma, pos = effective[inst.instance_id]
        record = {
            "kind": "instance",
            "id": inst.instance_id,
            "lemma": lemma,
            "pos": pos,
            "split": inst.split,
        }
        if inst.gold is not None:
            record["gold"] = list(inst.gold)
        if inst.subset is not None:
            record["subset"] = inst.subset
        lines.append(json.dumps(record, ensure_ascii=False))
    Path(out_path).write_text("".join(f"{l}\n" for l in lines), encoding="utf-8")


def write_export_metadata(out_path: str | Path, subsets: list[str]) -> None:
    """Record which benchmark subsets were exported and which one is dev."""
    payload = {
        "subsets": sorted(set(subsets)),
        "dev_subset": DEV_SUBSET if DEV_SUBSET in subsets else None,
    }
    Path(out_path).write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )
