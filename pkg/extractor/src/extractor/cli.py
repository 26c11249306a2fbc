"""Command-line entry point for the extraction pipeline.

One command produces everything the downstream trainer consumes:

    extractor export --inventory inv.json --out-dir out \\
        --corpus SE2 se2.xml se2.gold.txt --train-corpus semcor.xml

writes ``senses.vecs/.keys``, ``contexts.vecs/.keys``, ``lexicon.jsonl``
and ``export_meta.json`` into the output directory.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from extractor.encoder import HashEncoder, load_transformer_encoder
from extractor.exports import (
    ExportError,
    export_context_embeddings,
    export_lexicon,
    export_sense_embeddings,
    write_export_metadata,
)
from extractor.framework import SUBSETS, FrameworkError, load_framework
from extractor.inventory import InventoryError, load_inventory

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extractor",
        description="Export sense/context embeddings and the lexicon",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    export = sub.add_parser("export", help="run the full extraction pipeline")
    export.add_argument("--inventory", required=True, type=Path)
    export.add_argument("--out-dir", required=True, type=Path)
    export.add_argument(
        "--corpus",
        nargs=3,
        action="append",
        default=[],
        metavar=("SUBSET", "XML", "GOLD"),
        help="labeled evaluation corpus (repeatable)",
    )
    export.add_argument(
        "--train-corpus",
        action="append",
        default=[],
        type=Path,
        metavar="XML",
        help="unlabeled training corpus; gold annotations are stripped",
    )
    export.add_argument(
        "--encoder",
        default="hash",
        help="'hash' for the deterministic offline encoder, else a "
        "pretrained transformer model id",
    )
    export.add_argument("--dim", type=int, default=32, help="hash encoder width")
    export.add_argument("--max-tokens", type=int, default=128)
    export.add_argument("--batch-size", type=int, default=32)
    export.add_argument("--device", default="cpu")
    export.add_argument(
        "--include-special",
        action="store_true",
        help="include boundary tokens in the sentence average",
    )
    return parser


def _build_encoder(args: argparse.Namespace):
    if args.encoder == "hash":
        return HashEncoder(dim=args.dim, max_tokens=args.max_tokens)
    return load_transformer_encoder(
        args.encoder, device=args.device, max_tokens=args.max_tokens
    )


def cmd_export(args: argparse.Namespace) -> None:
    inventory = load_inventory(args.inventory)
    encoder = _build_encoder(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    instances = []
    subsets = []
    for subset, xml_path, gold_path in args.corpus:
        if subset not in SUBSETS:
            raise FrameworkError(f"bad subset {subset!r}")
        instances.extend(
            load_framework(xml_path, gold_path, subset=subset, split="eval")
        )
        subsets.append(subset)
    for xml_path in args.train_corpus:
        instances.extend(load_framework(xml_path, split="train"))

    skipped = export_sense_embeddings(
        encoder,
        inventory,
        args.out_dir / "senses",
        include_special=args.include_special,
    )
    if skipped:
        log.warning("%d sense(s) skipped for empty definitions", len(skipped))
    if instances:
        export_context_embeddings(encoder, instances, args.out_dir / "contexts")
    export_lexicon(inventory, args.out_dir / "lexicon.jsonl", instances)
    write_export_metadata(args.out_dir / "export_meta.json", subsets)
    print(
        f"exported {len(inventory.sense_keys) - len(skipped)} senses, "
        f"{len(instances)} contexts -> {args.out_dir}"
    )


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cmd_export(args)
    except (ExportError, FrameworkError, InventoryError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, ExportError):
            for detail in exc.details[:20]:
                print(f"  {detail}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
