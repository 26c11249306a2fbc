"""Offline extraction of sense/context embeddings and lexicon exports.

Produces the file formats consumed by the ``sensespec`` trainer without
importing it: ``.vecs/.keys`` embedding tables and the JSONL lexicon.
"""

from extractor.encoder import Encoded, HashEncoder, SpanAlignmentError
from extractor.exports import (
    ExportError,
    export_context_embeddings,
    export_lexicon,
    export_sense_embeddings,
)
from extractor.framework import ContextInstance, load_framework
from extractor.inventory import Inventory, InventoryError, Sense, Synset, load_inventory
from extractor.sentences import render_sense_sentence

__all__ = [
    "ContextInstance",
    "Encoded",
    "ExportError",
    "HashEncoder",
    "Inventory",
    "InventoryError",
    "Sense",
    "SpanAlignmentError",
    "Synset",
    "export_context_embeddings",
    "export_lexicon",
    "export_sense_embeddings",
    "load_framework",
    "load_inventory",
    "render_sense_sentence",
]
