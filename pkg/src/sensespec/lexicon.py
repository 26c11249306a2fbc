"""Sense inventory and relational knowledge.

Loads the JSON-lines export holding three record kinds:

* ``sense``   -- per-sense record with related/different sense sets and
  coarse-class labels,
* ``entry``   -- candidate sense list for a (lemma, pos) pair in
  inventory rank order,
* ``instance`` -- a word occurrence (train or eval split) referencing a
  context embedding by id.

The loader validates referential integrity exhaustively; it never
"repairs" the data (related sets are directional and stay that way).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV")
SUBSETS = ("SE2", "SE3", "SE07", "SE13", "SE15")


class LexiconError(ValueError):
    """Malformed or inconsistent lexicon export."""


@dataclass(frozen=True)
class SenseRecord:
    sense_key: str
    lemma: str
    pos: str
    synset_id: str
    related: tuple[str, ...]
    different: tuple[str, ...]
    csi_classes: tuple[str, ...]


@dataclass(frozen=True)
class WordInstance:
    instance_id: str
    lemma: str
    pos: str
    candidates: tuple[str, ...]
    gold: tuple[str, ...] | None = None
    subset: str | None = None
    split: str = "eval"


@dataclass
class Lexicon:
    senses: dict[str, SenseRecord]
    candidate_index: dict[tuple[str, str], tuple[str, ...]]
    csi_index: dict[str, frozenset[str]]
    instances: list[WordInstance] = field(default_factory=list)

    def candidates(self, lemma: str, pos: str) -> tuple[str, ...]:
        """Candidate senses for (lemma, pos) in inventory rank order."""
        try:
            return self.candidate_index[(lemma, pos)]
        except KeyError:
            raise LexiconError(f"unknown (lemma, pos): ({lemma!r}, {pos!r})") from None

    def first_sense(self, lemma: str, pos: str) -> str:
        """The inventory rank-1 sense, i.e. the classic frequency prior."""
        return self.candidates(lemma, pos)[0]

    def csi_siblings(self, sense_key: str, include_self: bool = False) -> frozenset[str]:
        """Senses sharing a coarse class with ``sense_key``.

        Empty when the sense carries no class.  The sense itself is
        excluded unless ``include_self`` is set (kept as a switch for
        comparison runs).
        """
        try:
            record = self.senses[sense_key]
        except KeyError:
            raise LexiconError(f"unknown sense key {sense_key!r}") from None
        members: set[str] = set()
        for label in record.csi_classes:
            members.update(self.csi_index.get(label, frozenset()))
        if not include_self:
            members.discard(sense_key)
        return frozenset(members)

    def train_instances(self) -> list[WordInstance]:
        return [w for w in self.instances if w.split == "train"]

    def eval_instances(self) -> list[WordInstance]:
        return [w for w in self.instances if w.split == "eval"]


def _dedup(items: list[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(items))


def load_lexicon(path: str | Path) -> Lexicon:
    """Parse and validate the JSON-lines export."""
    senses: dict[str, SenseRecord] = {}
    entries: dict[tuple[str, str], tuple[str, ...]] = {}
    raw_instances: list[tuple[int, dict]] = []

    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LexiconError(f"line {lineno}: {exc}") from None
        kind = obj.get("kind")
        if kind == "sense":
            key = obj["sense_key"]
            if key in senses:
                raise LexiconError(f"line {lineno}: duplicate sense_key {key!r}")
            pos = obj["pos"]
            if pos not in POS_TAGS:
                raise LexiconError(f"line {lineno}: bad pos {pos!r}")
            record = SenseRecord(
                sense_key=key,
                lemma=obj["lemma"],
                pos=pos,
                synset_id=obj["synset"],
                related=_dedup(obj.get("related", [])),
                different=_dedup(obj.get("different", [])),
                csi_classes=_dedup(obj.get("csi", [])),
            )
            if key in record.related:
                raise LexiconError(f"line {lineno}: {key!r} lists itself as related")
            if key in record.different:
                raise LexiconError(f"line {lineno}: {key!r} lists itself as different")
            senses[key] = record
        elif kind == "entry":
            ek = (obj["lemma"], obj["pos"])
            if ek in entries:
                raise LexiconError(f"line {lineno}: duplicate entry for {ek}")
            ordered = tuple(obj["senses"])
            if not ordered or len(set(ordered)) != len(ordered):
                raise LexiconError(f"line {lineno}: entry {ek} senses empty or duplicated")
            entries[ek] = ordered
        elif kind == "instance":
            raw_instances.append((lineno, obj))
        else:
            raise LexiconError(f"line {lineno}: unknown record kind {kind!r}")

    # Referential integrity of the relational sets.
    for record in senses.values():
        for ref in record.related:
            if ref not in senses:
                raise LexiconError(
                    f"sense {record.sense_key!r}: dangling related key {ref!r}"
                )
        for ref in record.different:
            other = senses.get(ref)
            if other is None:
                raise LexiconError(
                    f"sense {record.sense_key!r}: dangling different key {ref!r}"
                )
            if other.lemma != record.lemma:
                raise LexiconError(
                    f"sense {record.sense_key!r}: different key {ref!r} has lemma "
                    f"{other.lemma!r}, expected {record.lemma!r}"
                )

    for (lemma, pos), ordered in entries.items():
        for ref in ordered:
            record = senses.get(ref)
            if record is None:
                raise LexiconError(f"entry ({lemma!r}, {pos!r}): dangling sense {ref!r}")
            if record.lemma != lemma or record.pos != pos:
                raise LexiconError(
                    f"entry ({lemma!r}, {pos!r}): sense {ref!r} belongs to "
                    f"({record.lemma!r}, {record.pos!r})"
                )

    csi_index: dict[str, set[str]] = {}
    for record in senses.values():
        for label in record.csi_classes:
            csi_index.setdefault(label, set()).add(record.sense_key)

    lex = Lexicon(
        senses=senses,
        candidate_index=entries,
        csi_index={k: frozenset(v) for k, v in csi_index.items()},
    )

    seen_ids: set[str] = set()
    for lineno, obj in raw_instances:
        iid = obj["id"]
        if iid in seen_ids:
            raise LexiconError(f"line {lineno}: duplicate instance id {iid!r}")
        seen_ids.add(iid)
        split = obj.get("split", "eval")
        if split not in ("train", "eval"):
            raise LexiconError(f"line {lineno}: bad split {split!r}")
        lemma, pos = obj["lemma"], obj["pos"]
        candidates = lex.candidate_index.get((lemma, pos))
        if candidates is None:
            raise LexiconError(
                f"line {lineno}: instance {iid!r} has no entry for ({lemma!r}, {pos!r})"
            )
        gold = obj.get("gold")
        if split == "train" and gold is not None:
            raise LexiconError(f"line {lineno}: train instance {iid!r} carries gold")
        if gold is not None:
            gold_t = _dedup(gold)
            if not gold_t:
                raise LexiconError(f"line {lineno}: instance {iid!r} has empty gold")
            missing = [g for g in gold_t if g not in candidates]
            if missing:
                raise LexiconError(
                    f"line {lineno}: instance {iid!r} gold {missing} not in candidates"
                )
        else:
            gold_t = None
        subset = obj.get("subset")
        if subset is not None and subset not in SUBSETS:
            raise LexiconError(f"line {lineno}: bad subset {subset!r}")
        lex.instances.append(
            WordInstance(
                instance_id=iid,
                lemma=lemma,
                pos=pos,
                candidates=candidates,
                gold=gold_t,
                subset=subset,
                split=split,
            )
        )
    return lex


def candidates(lex: Lexicon, lemma: str, pos: str) -> tuple[str, ...]:
    return lex.candidates(lemma, pos)


def first_sense(lex: Lexicon, lemma: str, pos: str) -> str:
    return lex.first_sense(lemma, pos)


def csi_siblings(lex: Lexicon, sense_key: str, include_self: bool = False) -> frozenset[str]:
    return lex.csi_siblings(sense_key, include_self=include_self)
