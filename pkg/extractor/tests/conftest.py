"""Shared fixtures: a hand-built dictionary inventory and corpus files."""
from __future__ import annotations

import json
from pathlib import Path

import pytest

from extractor.encoder import HashEncoder
from extractor.inventory import Inventory, Sense, Synset


def build_demo_inventory() -> Inventory:
    """A small WordNet-like inventory exercising every relation type."""
    synsets = [
        Synset(
            "computer.n.01",
            lemmas=("computer", "computing device", "data processor"),
            definition="a machine for performing calculations automatically",
            relations={"hyponyms": ("analog_computer.n.01",)},
        ),
        Synset(
            "analog_computer.n.01",
            lemmas=("analog computer",),
            definition="a computer that represents data by measurable quantities",
            relations={"hypernyms": ("computer.n.01",)},
        ),
        Synset(
            "calculate.v.01",
            lemmas=("compute", "calculate"),
            definition="make a mathematical calculation",
            examples=("You can compute the area of a square",),
        ),
        Synset(
            "expert.n.02",
            lemmas=("calculator", "computer"),
            definition="an expert at calculation",
        ),
        Synset(
            "quick.a.01",
            lemmas=("quick", "speedy"),
            definition="accomplished rapidly and without delay",
        ),
        Synset(
            "slow.a.01",
            lemmas=("slow",),
            definition="not moving quickly",
        ),
        Synset(
            "quickly.r.01",
            lemmas=("quickly",),
            definition="with rapid movements",
            examples=("he works quickly",),
        ),
        Synset(
            "bank.n.01",
            lemmas=("bank", "banking company"),
            definition="a financial institution that accepts deposits",
            relations={"member_holonyms": ("banking_system.n.01",)},
        ),
        Synset(
            "banking_system.n.01",
            lemmas=("banking system",),
            definition="the network of institutions handling money",
        ),
        Synset(
            "bank.n.02",
            lemmas=("bank",),
            definition="sloping land beside a body of water",
        ),
        Synset(
            "deposit.v.02",
            lemmas=("deposit", "bank"),
            definition="put into a bank account",
        ),
        Synset(
            "mystery.n.01",
            lemmas=("mystery",),
            definition="",
        ),
        Synset(
            "art.n.01",
            lemmas=("art", "fine art"),
            definition="the products of human creativity",
            examples=("an art exhibition",),
        ),
        Synset(
            "art.n.02",
            lemmas=("art", "artistry"),
            definition="a superior skill learned by study and practice",
        ),
        Synset(
            "plant.n.01",
            lemmas=("plant", "works", "industrial plant"),
            definition="buildings for carrying on industrial labor",
            relations={"part_meronyms": ("assembly_line.n.01",)},
        ),
        Synset(
            "assembly_line.n.01",
            lemmas=("assembly line",),
            definition="a mechanical system moving work between stations",
        ),
        Synset(
            "plant.n.02",
            lemmas=("plant", "flora"),
            definition="a living organism lacking the power of locomotion",
        ),
        Synset(
            "grow.v.01",
            lemmas=("grow",),
            definition="increase in size by natural process",
        ),
    ]
    senses = [
        Sense(
            "computer%1:06:00::",
            "computer",
            "NOUN",
            "computer.n.01",
            derivations=("compute%2:31:00::",),
        ),
        Sense(
            "computing_device%1:06:00::",
            "computing device",
            "NOUN",
            "computer.n.01",
        ),
        Sense("data_processor%1:06:00::", "data processor", "NOUN", "computer.n.01"),
        Sense(
            "analog_computer%1:06:00::",
            "analog computer",
            "NOUN",
            "analog_computer.n.01",
        ),
        Sense(
            "compute%2:31:00::",
            "compute",
            "VERB",
            "calculate.v.01",
            derivations=("computer%1:06:00::",),
        ),
        Sense("calculate%2:31:00::", "calculate", "VERB", "calculate.v.01"),
        Sense("computer%1:18:00::", "computer", "NOUN", "expert.n.02"),
        Sense(
            "quick%3:00:00::",
            "quick",
            "ADJ",
            "quick.a.01",
            antonyms=("slow%3:00:00::",),
        ),
        Sense("slow%3:00:00::", "slow", "ADJ", "slow.a.01"),
        Sense(
            "quickly%4:02:00::",
            "quickly",
            "ADV",
            "quickly.r.01",
            pertainyms=("quick%3:00:00::",),
        ),
        Sense("bank%1:14:00::", "bank", "NOUN", "bank.n.01"),
        Sense("bank%1:17:00::", "bank", "NOUN", "bank.n.02"),
        Sense("bank%2:40:00::", "bank", "VERB", "deposit.v.02"),
        Sense("mystery%1:09:00::", "mystery", "NOUN", "mystery.n.01"),
        Sense("art%1:06:00::", "art", "NOUN", "art.n.01"),
        Sense("art%1:09:00::", "art", "NOUN", "art.n.02"),
        Sense("plant%1:06:01::", "plant", "NOUN", "plant.n.01"),
        Sense("works%1:06:01::", "works", "NOUN", "plant.n.01"),
        Sense("plant%1:03:00::", "plant", "NOUN", "plant.n.02"),
        Sense("grow%2:30:00::", "grow", "VERB", "grow.v.01"),
        Sense("banking_system%1:14:00::", "banking system", "NOUN", "banking_system.n.01"),
        Sense("assembly_line%1:06:00::", "assembly line", "NOUN", "assembly_line.n.01"),
    ]
    csi = {
        "computer.n.01": ("ELECTRONICS",),
        "analog_computer.n.01": ("ELECTRONICS",),
        "calculate.v.01": ("MATH",),
    }
    return Inventory(synsets=synsets, senses=senses, csi=csi)


@pytest.fixture
def inventory() -> Inventory:
    return build_demo_inventory()


@pytest.fixture
def encoder() -> HashEncoder:
    return HashEncoder(dim=16, max_tokens=128)


@pytest.fixture
def inventory_json(tmp_path, inventory) -> Path:
    data = {
        "synsets": [
            {
                "id": s.synset_id,
                "lemmas": list(s.lemmas),
                "definition": s.definition,
                "examples": list(s.examples),
                "relations": {r: list(t) for r, t in s.relations.items()},
            }
            for s in (inventory.synset(sid) for sid in sorted_synset_ids(inventory))
        ],
        "senses": [
            {
                "key": s.sense_key,
                "lemma": s.lemma,
                "pos": s.pos,
                "synset": s.synset_id,
                "derivations": list(s.derivations),
                "pertainyms": list(s.pertainyms),
                "antonyms": list(s.antonyms),
            }
            for s in (inventory.sense(k) for k in inventory.sense_keys)
        ],
        "csi": {
            "computer.n.01": ["ELECTRONICS"],
            "analog_computer.n.01": ["ELECTRONICS"],
            "calculate.v.01": ["MATH"],
        },
    }
    path = tmp_path / "inventory.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def sorted_synset_ids(inventory: Inventory) -> list[str]:
    return sorted({inventory.sense(k).synset_id for k in inventory.sense_keys})


EVAL_XML = """\
<corpus lang="en" source="demo">
  <text id="d000">
    <sentence id="d000.s000">
      <wf lemma="the" pos="DET">The</wf>
      <instance id="d000.s000.t000" lemma="computer" pos="NOUN">computer</instance>
      <wf lemma="be" pos="VERB">was</wf>
      <instance id="d000.s000.t001" lemma="quick" pos="ADJ">quick</instance>
    </sentence>
    <sentence id="d000.s001">
      <wf lemma="she" pos="PRON">She</wf>
      <wf lemma="walk" pos="VERB">walked</wf>
      <wf lemma="to" pos="ADP">to</wf>
      <wf lemma="the" pos="DET">the</wf>
      <instance id="d000.s001.t000" lemma="bank" pos="NOUN">bank</instance>
    </sentence>
  </text>
</corpus>
"""

EVAL_GOLD = """\
d000.s000.t000 computer%1:06:00::
d000.s000.t001 quick%3:00:00::
d000.s001.t000 bank%1:17:00::
"""

TRAIN_XML = """\
<corpus lang="en" source="demo-train">
  <text id="t000">
    <sentence id="t000.s000">
      <wf lemma="we" pos="PRON">We</wf>
      <instance id="t000.s000.t000" lemma="grow" pos="VERB">grow</instance>
      <wf lemma="a" pos="DET">a</wf>
      <instance id="t000.s000.t001" lemma="plant" pos="NOUN">plant</instance>
    </sentence>
  </text>
</corpus>
"""


@pytest.fixture
def eval_corpus(tmp_path) -> tuple[Path, Path]:
    xml = tmp_path / "eval.xml"
    gold = tmp_path / "eval.gold.txt"
    xml.write_text(EVAL_XML, encoding="utf-8")
    gold.write_text(EVAL_GOLD, encoding="utf-8")
    return xml, gold


@pytest.fixture
def train_corpus(tmp_path) -> Path:
    xml = tmp_path / "train.xml"
    xml.write_text(TRAIN_XML, encoding="utf-8")
    return xml
