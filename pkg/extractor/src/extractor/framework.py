"""Evaluation-corpus parsing: tokenized XML plus gold key files.

The corpus format is the standard all-words benchmark layout::

    <corpus>
      <text id="d000">
        <sentence id="d000.s000">
          <wf lemma="the" pos="DET">The</wf>
          <instance id="d000.s000.t000" lemma="art" pos="NOUN">art</instance>
          ...

with a companion gold file of ``<instance id> <sense key>...`` lines.
Each tagged instance becomes a :class:`ContextInstance` carrying the
detokenized sentence text and the character span of the target word.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

SUBSETS = ("SE2", "SE3", "SE07", "SE13", "SE15")
DEV_SUBSET = "SE07"


class FrameworkError(ValueError):
    """Malformed corpus XML or gold key file."""


@dataclass(frozen=True)
class ContextInstance:
    """A sense-tagged word occurrence with its sentence context."""

    instance_id: str
    lemma: str
    pos: str
    text: str
    start: int
    end: int
    gold: tuple[str, ...] | None = None
    subset: str | None = None
    split: str = "eval"


def _read_gold(path: str | Path) -> dict[str, tuple[str, ...]]:
    gold: dict[str, tuple[str, ...]] = {}
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), 1
    ):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < 2:
            raise FrameworkError(f"gold line {lineno}: expected '<id> <key>...'")
        if parts[0] in gold:
            raise FrameworkError(f"gold line {lineno}: duplicate id {parts[0]!r}")
        gold[parts[0]] = tuple(dict.fromkeys(parts[1:]))
    return gold


def load_framework(
    xml_path: str | Path,
    gold_path: str | Path | None = None,
    subset: str | None = None,
    split: str = "eval",
) -> list[ContextInstance]:
    """Parse a corpus into context instances.

    With ``gold_path`` given, every tagged instance must have a gold
    annotation.  Without it the corpus is treated as unlabeled training
    data: gold is stripped and ``split`` defaults accordingly.
    """
    if subset is not None and subset not in SUBSETS:
        raise FrameworkError(f"bad subset {subset!r}")
    if split not in ("train", "eval"):
        raise FrameworkError(f"bad split {split!r}")
    gold = _read_gold(gold_path) if gold_path is not None else None
    try:
        root = ET.parse(xml_path).getroot()
    except ET.ParseError as exc:
        raise FrameworkError(f"bad corpus XML: {exc}") from None

    instances: list[ContextInstance] = []
    seen: set[str] = set()
    for sentence in root.iter("sentence"):
        words: list[tuple[str, ET.Element]] = []
        for node in sentence:
            if node.tag not in ("wf", "instance"):
                raise FrameworkError(f"unexpected element <{node.tag}>")
            surface = (node.text or "").strip()
            if not surface:
                raise FrameworkError(f"empty token in sentence {sentence.get('id')}")
            words.append((surface, node))
        text = " ".join(surface for surface, _ in words)
        pos = 0
        for surface, node in words:
            start = pos
            pos += len(surface) + 1
            if node.tag != "instance":
                continue
            iid = node.get("id")
            lemma = node.get("lemma")
            tag = node.get("pos")
            if not iid or not lemma or not tag:
                raise FrameworkError(
                    f"instance in sentence {sentence.get('id')} lacks "
                    "id/lemma/pos"
                )
            if iid in seen:
                raise FrameworkError(f"duplicate instance id {iid!r}")
            seen.add(iid)
            keys: tuple[str, ...] | None = None
            if gold is not None:
                keys = gold.get(iid)
                if keys is None:
                    raise FrameworkError(f"instance {iid!r} missing from gold file")
            if split == "train":
                keys = None
            instances.append(
                ContextInstance(
                    instance_id=iid,
                    lemma=lemma,
                    pos=tag,
                    text=text,
                    start=start,
                    end=start + len(surface),
                    gold=keys,
                    subset=subset,
                    split=split,
                )
            )
    if gold is not None:
        unused = set(gold) - seen
        if unused:
            raise FrameworkError(f"gold ids not in corpus: {sorted(unused)[:5]}")
    return instances
