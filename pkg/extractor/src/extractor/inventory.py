"""Dictionary sense inventory and relation-graph traversal.

The inventory mirrors the shape of a WordNet-style database: synsets
(concepts with member lemmas, a definition, usage examples, and typed
links to other synsets) and senses (a lemma's membership in a synset,
with sense-level links to other senses).

``related_keys`` implements the related-sense lookup used to build the
lexicon export: seed with the sense's own synset plus the synsets of its
derivationally linked senses, extend the seed set one hop through the
synset-level relations below, then collect every member sense of the
extended set together with the sense-level pertainyms/antonyms of the
query sense.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV")

# Synset-level relations followed during the one-hop extension.
SYNSET_RELATIONS = (
    "hyponyms",
    "hypernyms",
    "part_holonyms",
    "part_meronyms",
    "member_holonyms",
    "member_meronyms",
    "entailments",
    "attributes",
    "similar_tos",
    "causes",
    "substance_holonyms",
    "substance_meronyms",
    "usage_domains",
    "also_sees",
)

# Sense-level relations contributing directly to the related set.
SENSE_RELATIONS = ("pertainyms", "antonyms")


class InventoryError(ValueError):
    """Malformed or inconsistent inventory data."""


@dataclass(frozen=True)
class Synset:
    synset_id: str
    lemmas: tuple[str, ...]
    definition: str
    examples: tuple[str, ...] = ()
    relations: dict[str, tuple[str, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class Sense:
    sense_key: str
    lemma: str
    pos: str
    synset_id: str
    derivations: tuple[str, ...] = ()
    pertainyms: tuple[str, ...] = ()
    antonyms: tuple[str, ...] = ()


class Inventory:
    """Validated sense inventory with relation lookups.

    Sense order is significant: candidates for a (lemma, pos) pair keep
    the order in which their senses were supplied (inventory rank).
    """

    def __init__(
        self,
        synsets: list[Synset],
        senses: list[Sense],
        csi: dict[str, tuple[str, ...]] | None = None,
    ) -> None:
        self._synsets: dict[str, Synset] = {}
        for synset in synsets:
            if synset.synset_id in self._synsets:
                raise InventoryError(f"duplicate synset {synset.synset_id!r}")
            for rel in synset.relations:
                if rel not in SYNSET_RELATIONS:
                    raise InventoryError(
                        f"synset {synset.synset_id!r}: unknown relation {rel!r}"
                    )
            self._synsets[synset.synset_id] = synset

        self._senses: dict[str, Sense] = {}
        self._members: dict[str, list[str]] = {sid: [] for sid in self._synsets}
        self._entries: dict[tuple[str, str], list[str]] = {}
        for sense in senses:
            if sense.sense_key in self._senses:
                raise InventoryError(f"duplicate sense {sense.sense_key!r}")
            if sense.pos not in POS_TAGS:
                raise InventoryError(
                    f"sense {sense.sense_key!r}: bad pos {sense.pos!r}"
                )
            if sense.synset_id not in self._synsets:
                raise InventoryError(
                    f"sense {sense.sense_key!r}: unknown synset {sense.synset_id!r}"
                )
            self._senses[sense.sense_key] = sense
            self._members[sense.synset_id].append(sense.sense_key)
            self._entries.setdefault((sense.lemma, sense.pos), []).append(
                sense.sense_key
            )

        for synset in synsets:
            for rel, targets in synset.relations.items():
                for target in targets:
                    if target not in self._synsets:
                        raise InventoryError(
                            f"synset {synset.synset_id!r}: dangling {rel} "
                            f"target {target!r}"
                        )
        for sense in senses:
            for label, refs in (
                ("derivations", sense.derivations),
                ("pertainyms", sense.pertainyms),
                ("antonyms", sense.antonyms),
            ):
                for ref in refs:
                    if ref not in self._senses:
                        raise InventoryError(
                            f"sense {sense.sense_key!r}: dangling {label} "
                            f"reference {ref!r}"
                        )

        self._csi = {sid: tuple(classes) for sid, classes in (csi or {}).items()}
        for sid in self._csi:
            if sid not in self._synsets:
                raise InventoryError(f"coarse-class map: unknown synset {sid!r}")

    @property
    def sense_keys(self) -> tuple[str, ...]:
        return tuple(self._senses)

    def sense(self, key: str) -> Sense:
        try:
            return self._senses[key]
        except KeyError:
            raise InventoryError(f"unknown sense {key!r}") from None

    def synset(self, synset_id: str) -> Synset:
        try:
            return self._synsets[synset_id]
        except KeyError:
            raise InventoryError(f"unknown synset {synset_id!r}") from None

    def members(self, synset_id: str) -> tuple[str, ...]:
        """Sense keys belonging to a synset, in inventory order."""
        self.synset(synset_id)
        return tuple(self._members[synset_id])

    def entries(self) -> dict[tuple[str, str], tuple[str, ...]]:
        return {ek: tuple(keys) for ek, keys in self._entries.items()}

    def candidates(self, lemma: str, pos: str) -> tuple[str, ...]:
        try:
            return tuple(self._entries[(lemma, pos)])
        except KeyError:
            raise InventoryError(f"no senses for ({lemma!r}, {pos!r})") from None

    def classes(self, key: str) -> tuple[str, ...]:
        """Coarse semantic classes of the sense's synset; empty if unmapped."""
        return self._csi.get(self.sense(key).synset_id, ())

    def related_keys(self, key: str) -> tuple[str, ...]:
        """Related senses via derivational expansion + one-hop synset links."""
        sense = self.sense(key)
        seed = {sense.synset_id}
        for derived in sense.derivations:
            seed.add(self._senses[derived].synset_id)
        extended = set(seed)
        for sid in seed:
            synset = self._synsets[sid]
            for rel in SYNSET_RELATIONS:
                extended.update(synset.relations.get(rel, ()))
        related: set[str] = set()
        for sid in extended:
            related.update(self._members[sid])
        for rel in SENSE_RELATIONS:
            related.update(getattr(sense, rel))
        related.discard(key)
        return tuple(sorted(related))

    def different_keys(self, key: str) -> tuple[str, ...]:
        """Other senses of the same surface lemma, any part of speech."""
        sense = self.sense(key)
        out = [
            k
            for keys in self._entries.values()
            for k in keys
            if self._senses[k].lemma == sense.lemma and k != key
        ]
        return tuple(sorted(out))


def load_inventory(path: str | Path) -> Inventory:
    """Load an inventory from its JSON serialization.

    Layout: ``{"synsets": [...], "senses": [...], "csi": {synset: [cls]}}``
    with synset objects ``{id, lemmas, definition, examples?, relations?}``
    and sense objects ``{key, lemma, pos, synset, derivations?,
    pertainyms?, antonyms?}``.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InventoryError(f"invalid inventory JSON: {exc}") from None
    try:
        synsets = [
            Synset(
                synset_id=obj["id"],
                lemmas=tuple(obj["lemmas"]),
                definition=obj["definition"],
                examples=tuple(obj.get("examples", [])),
                relations={
                    rel: tuple(targets)
                    for rel, targets in obj.get("relations", {}).items()
                },
            )
            for obj in data["synsets"]
        ]
        senses = [
            Sense(
                sense_key=obj["key"],
                lemma=obj["lemma"],
                pos=obj["pos"],
                synset_id=obj["synset"],
                derivations=tuple(obj.get("derivations", [])),
                pertainyms=tuple(obj.get("pertainyms", [])),
                antonyms=tuple(obj.get("antonyms", [])),
            )
            for obj in data["senses"]
        ]
    except (KeyError, TypeError) as exc:
        raise InventoryError(f"invalid inventory JSON: {exc}") from None
    csi = {
        sid: tuple(classes) for sid, classes in data.get("csi", {}).items()
    }
    return Inventory(synsets=synsets, senses=senses, csi=csi)
