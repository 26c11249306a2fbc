"""Descriptive sentence rendering for senses.

One sentence per sense, built from the lemma, the synset's member
lemmas, the definition, and the synset's usage examples:

    <lemma> - <syn lemma 1>, ..., <syn lemma n> - <definition> <ex 1> ... <ex m>
"""
from __future__ import annotations

from extractor.inventory import Inventory


class EmptyDefinitionError(ValueError):
    """The sense's synset carries no definition text."""


def render_sense_sentence(
    lemma: str,
    synonyms: tuple[str, ...],
    definition: str,
    examples: tuple[str, ...] = (),
) -> str:
    if not lemma.strip():
        raise ValueError("lemma must be nonempty")
    if not definition.strip():
        raise EmptyDefinitionError("definition must be nonempty")
    if not synonyms:
        raise ValueError("synonym lemma list must be nonempty")
    text = f"{lemma} - {', '.join(synonyms)} - {definition.strip()}"
    for example in examples:
        if example.strip():
            text += f" {example.strip()}"
    return text


def sentence_for(inventory: Inventory, sense_key: str) -> str:
    sense = inventory.sense(sense_key)
    synset = inventory.synset(sense.synset_id)
    return render_sense_sentence(
        lemma=sense.lemma,
        synonyms=synset.lemmas,
        definition=synset.definition,
        examples=synset.examples,
    )
