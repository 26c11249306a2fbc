"""Command-line pipeline: train, predict, evaluate, analyze, sweep, aggregate.

Every command records a run manifest (config snapshot, input digests,
output paths, timings) next to its primary output, even when the run
fails.  Outputs are written to a ``.partial`` path first and renamed only
on success, so an interrupted run never leaves a plausible-looking file.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import evaluation
from .engine import predict_corpus, read_predictions, write_predictions
from .lexicon import Lexicon, load_lexicon
from .network import SpecializationNet, load_checkpoint
from .synth import toy_universe, write_universe
from .trainer import Toggles, TrainConfig, epsilon_sweep, train
from .vecstore import EmbeddingTable, load_table


class CliError(Exception):
    pass


def _digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _workers() -> int:
    raw = os.environ.get("SSWD_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise CliError(f"SSWD_WORKERS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise CliError(f"SSWD_WORKERS must be positive, got {n}")
    return n


class Manifest:
    """Collects run metadata and writes it next to the primary output."""

    def __init__(self, command: str, args: argparse.Namespace, out: Path) -> None:
        self.data: dict = {
            "command": command,
            "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
            "inputs": {},
            "outputs": [],
            "workers": _workers(),
            "status": "running",
        }
        self.path = out.with_name(out.name + ".manifest.json")
        self.start = time.monotonic()

    def record_input(self, label: str, path: str | Path) -> None:
        self.data["inputs"][label] = {"path": str(path), "sha256": _digest(path)}

    def record_output(self, path: str | Path) -> None:
        self.data["outputs"].append(str(path))

    def finish(self, status: str) -> None:
        self.data["status"] = status
        self.data["seconds"] = round(time.monotonic() - self.start, 3)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(
            json.dumps(self.data, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _finalize(partial: Path, final: Path) -> None:
    partial.replace(final)


def _partial(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.with_name(path.name + ".partial")


def _load_inputs(
    args: argparse.Namespace, manifest: Manifest
) -> tuple[EmbeddingTable, EmbeddingTable, Lexicon]:
    for label, path in (
        ("sense_vecs", args.sense_vecs),
        ("sense_keys", args.sense_keys),
        ("ctx_vecs", args.ctx_vecs),
        ("ctx_keys", args.ctx_keys),
        ("lexicon", args.lexicon),
    ):
        if path is None:
            raise CliError(f"--{label.replace('_', '-')} is required")
        manifest.record_input(label, path)
    senses = load_table(args.sense_vecs, args.sense_keys)
    contexts = load_table(args.ctx_vecs, args.ctx_keys)
    lex = load_lexicon(args.lexicon)
    if senses.dim != contexts.dim:
        raise CliError(
            f"sense table dim {senses.dim} != context table dim {contexts.dim}"
        )
    return senses, contexts, lex


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sense-vecs")
    p.add_argument("--sense-keys")
    p.add_argument("--ctx-vecs")
    p.add_argument("--ctx-keys")
    p.add_argument("--lexicon")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--nb", type=int, default=256)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--epsilon", type=float, default=0.015)
    p.add_argument("--beta", type=float, default=64.0)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-attract-repel", action="store_true")
    p.add_argument("--no-self-training", action="store_true")
    p.add_argument("--no-repel-unrelated", action="store_true")
    p.add_argument("--no-repel-different", action="store_true")
    p.add_argument("--no-context-adapt", action="store_true")
    p.add_argument("--self-train-fraction", type=float, default=1.0)


def _config_from(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        batch_size=args.nb,
        alpha=args.alpha,
        epsilon=args.epsilon,
        beta=args.beta,
        learning_rate=args.lr,
        epochs=args.epochs,
        hidden=args.hidden,
        seed=args.seed,
        toggles=Toggles(
            attract_repel=not args.no_attract_repel,
            self_training=not args.no_self_training,
            repel_unrelated=not args.no_repel_unrelated,
            repel_different=not args.no_repel_different,
            adapt_context=not args.no_context_adapt,
        ),
        self_train_fraction=args.self_train_fraction,
    )


def _net_for(args: argparse.Namespace, dim: int, manifest: Manifest) -> SpecializationNet:
    if args.identity:
        if args.checkpoint:
            raise CliError("--identity and --checkpoint are mutually exclusive")
        return SpecializationNet.identity(dim)
    if not args.checkpoint:
        raise CliError("either --checkpoint or --identity is required")
    manifest.record_input("checkpoint", args.checkpoint)
    net, _meta = load_checkpoint(args.checkpoint)
    if net.context_map.dim != dim:
        raise CliError(f"checkpoint dim {net.context_map.dim} != table dim {dim}")
    return net


def cmd_train(args: argparse.Namespace) -> None:
    out = Path(args.out)
    manifest = Manifest("train", args, out / "checkpoint_final.sswm")
    try:
        senses, contexts, lex = _load_inputs(args, manifest)
        config = _config_from(args)
        out.mkdir(parents=True, exist_ok=True)
        net, _log = train(
            config,
            senses,
            contexts,
            lex,
            checkpoint_dir=out,
            log_path=out / "train_log.jsonl",
        )
        manifest.record_output(out / "checkpoint_final.sswm")
        manifest.record_output(out / "train_log.jsonl")
        manifest.finish("ok")
    except BaseException:
        manifest.finish("failed")
        raise


def cmd_predict(args: argparse.Namespace) -> None:
    out = Path(args.out)
    manifest = Manifest("predict", args, out)
    try:
        senses, contexts, lex = _load_inputs(args, manifest)
        net = _net_for(args, senses.dim, manifest)
        instances = (
            lex.train_instances() if args.split == "train" else lex.eval_instances()
        )
        preds = predict_corpus(net, senses, contexts, lex, instances, use_tam=args.tam)
        partial = _partial(out)
        write_predictions(preds, partial)
        _finalize(partial, out)
        manifest.record_output(out)
        manifest.finish("ok")
    except BaseException:
        manifest.finish("failed")
        raise


def cmd_evaluate(args: argparse.Namespace) -> None:
    out = Path(args.out)
    manifest = Manifest("evaluate", args, out)
    try:
        if args.lexicon is None:
            raise CliError("--lexicon is required")
        manifest.record_input("lexicon", args.lexicon)
        manifest.record_input("predictions", args.predictions)
        lex = load_lexicon(args.lexicon)
        preds = read_predictions(args.predictions)
        report = evaluation.micro_f1(preds, lex.eval_instances())
        partial = _partial(out)
        evaluation.write_report(report, partial)
        _finalize(partial, out)
        manifest.record_output(out)
        manifest.finish("ok")
    except BaseException:
        manifest.finish("failed")
        raise


def cmd_analyze(args: argparse.Namespace) -> None:
    out = Path(args.out)
    manifest = Manifest("analyze", args, out)
    try:
        senses, contexts, lex = _load_inputs(args, manifest)
        net = _net_for(args, senses.dim, manifest)
        instances = lex.eval_instances()
        margins = evaluation.margin_distribution(net, senses, contexts, instances)
        chars = evaluation.similarity_characteristics(
            net, senses, contexts, lex, instances, batch_size=args.nb, seed=args.seed
        )
        payload = {"margins": margins.to_dict(), "similarity": chars.to_dict()}
        partial = _partial(out)
        partial.write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        _finalize(partial, out)
        manifest.record_output(out)
        manifest.finish("ok")
    except BaseException:
        manifest.finish("failed")
        raise


def _dev_score(
    net: SpecializationNet,
    senses: EmbeddingTable,
    contexts: EmbeddingTable,
    lex: Lexicon,
    subset: str,
) -> float:
    instances = [w for w in lex.eval_instances() if w.subset == subset]
    if not instances:
        raise CliError(f"no eval instances in subset {subset!r}")
    preds = predict_corpus(net, senses, contexts, lex, instances)
    report = evaluation.micro_f1({p.instance_id: p.predicted for p in preds}, instances)
    return report.overall.f1


def cmd_sweep(args: argparse.Namespace) -> None:
    out = Path(args.out)
    manifest = Manifest("sweep", args, out)
    try:
        senses, contexts, lex = _load_inputs(args, manifest)
        base = _config_from(args)
        seeds = [int(s) for s in args.seeds.split(",")]
        if args.grid:
            grid = [float(g) for g in args.grid.split(",")]
            rows = epsilon_sweep(
                base,
                grid,
                senses,
                contexts,
                lex,
                score_fn=lambda net: _dev_score(net, senses, contexts, lex, args.dev_subset),
                seeds=seeds,
            )
        elif args.fractions:
            rows = []
            meta = base.metadata()
            toggles = meta.pop("toggles")
            for frac in (float(f) for f in args.fractions.split(",")):
                scores = []
                for seed in seeds:
                    cfg = TrainConfig(
                        **{**meta, "self_train_fraction": frac, "seed": seed},
                        toggles=Toggles(**toggles),
                    )
                    net, _ = train(cfg, senses, contexts, lex)
                    scores.append(_dev_score(net, senses, contexts, lex, args.dev_subset))
                rows.append(
                    {
                        "fraction": frac,
                        "scores": scores,
                        "mean": float(np.mean(scores)),
                        "stddev": float(np.std(scores)),
                    }
                )
        else:
            raise CliError("either --grid (epsilon) or --fractions is required")
        partial = _partial(out)
        partial.write_text(
            json.dumps(rows, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        _finalize(partial, out)
        manifest.record_output(out)
        manifest.finish("ok")
    except BaseException:
        manifest.finish("failed")
        raise


def cmd_aggregate(args: argparse.Namespace) -> None:
    out = Path(args.out)
    manifest = Manifest("aggregate", args, out)
    try:
        if not args.reports:
            raise CliError("at least one report file is required")
        cells: dict[str, list[float]] = {}
        for i, path in enumerate(args.reports):
            manifest.record_input(f"report{i}", path)
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
            scores = payload.get("scores", payload)

            def walk(node: dict, prefix: str) -> None:
                for key, val in node.items():
                    name = f"{prefix}.{key}" if prefix else key
                    if isinstance(val, dict):
                        walk(val, name)
                    elif isinstance(val, (int, float)):
                        cells.setdefault(name, []).append(float(val))

            walk(scores, "")
        counts = {len(v) for v in cells.values()}
        if len(counts) != 1 or counts.pop() != len(args.reports):
            raise CliError("reports do not share a common score structure")
        summary = {
            name: {
                "mean": float(np.mean(vals)),
                "stddev": float(np.std(vals)),
                "n": len(vals),
            }
            for name, vals in sorted(cells.items())
        }
        partial = _partial(out)
        partial.write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        _finalize(partial, out)
        manifest.record_output(out)
        manifest.finish("ok")
    except BaseException:
        manifest.finish("failed")
        raise


def cmd_make_toy(args: argparse.Namespace) -> None:
    out = Path(args.out)
    manifest = Manifest("make-toy", args, out / "lexicon.jsonl")
    try:
        paths = write_universe(toy_universe(seed=args.seed), out)
        for p in paths.values():
            manifest.record_output(p)
        manifest.record_output(out / "senses.keys")
        manifest.record_output(out / "contexts.keys")
        manifest.finish("ok")
    except BaseException:
        manifest.finish("failed")
        raise


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensespec",
        description="Sense-embedding specialization pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the specialization maps")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", required=True, help="output directory for checkpoints")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="nearest-sense predictions for a split")
    _add_data_flags(p)
    p.add_argument("--checkpoint")
    p.add_argument("--identity", action="store_true")
    p.add_argument("--tam", action="store_true", help="coarse-inventory reranking")
    p.add_argument("--split", choices=("eval", "train"), default="eval")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score a predictions file")
    p.add_argument("--lexicon")
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="margin distribution and similarity profile")
    _add_data_flags(p)
    p.add_argument("--checkpoint")
    p.add_argument("--identity", action="store_true")
    p.add_argument("--nb", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="train/evaluate over an epsilon or fraction grid")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--grid", help="comma-separated epsilon values")
    p.add_argument("--fractions", help="comma-separated self-training fractions")
    p.add_argument("--seeds", default="0", help="comma-separated seeds")
    p.add_argument("--dev-subset", default="SE07")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("aggregate", help="mean/stddev across report files")
    p.add_argument("reports", nargs="*")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("make-toy", help="write the bundled toy fixture")
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_toy)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
