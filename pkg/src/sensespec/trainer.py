"""Joint optimization of the two residual maps.

One training step draws one sense minibatch and one word minibatch,
evaluates the combined objective on the current parameters, backpropagates
through the maps and applies a single joint Adam update.  An epoch is a
full pass over the shuffled sense inventory; leftover word instances are
discarded at epoch end.

Everything is seeded and single-threaded by default, so a fixed seed
yields a bitwise-identical loss trajectory and final checkpoint.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .lexicon import Lexicon, WordInstance
from .network import (
    Gradients,
    ResidualMap,
    SpecializationNet,
    backward_batch,
    forward_batch,
    save_checkpoint,
)
from .objectives import (
    EpochSampler,
    LossValue,
    SenseBatch,
    WordBatch,
    attract_repel_loss,
    combined_loss,
    self_training_loss,
)
from .vecstore import EmbeddingTable


class TrainError(RuntimeError):
    pass


@dataclass
class Toggles:
    attract_repel: bool = True
    self_training: bool = True
    repel_unrelated: bool = True
    repel_different: bool = True
    adapt_context: bool = True


@dataclass
class TrainConfig:
    batch_size: int = 256
    alpha: float = 0.2
    epsilon: float = 0.015
    beta: float = 64.0
    learning_rate: float = 0.001
    epochs: int = 15
    hidden: int | None = None  # None: same as the embedding dim
    seed: int = 0
    toggles: Toggles = field(default_factory=Toggles)
    self_train_fraction: float = 1.0

    def validate(self) -> None:
        if self.batch_size <= 0 or self.epochs <= 0 or self.learning_rate <= 0:
            raise TrainError("batch size, epochs and learning rate must be positive")
        if self.alpha < 0 or self.epsilon < 0 or self.beta <= 0:
            raise TrainError("alpha/epsilon must be nonnegative, beta positive")
        if not (0.0 < self.self_train_fraction <= 1.0):
            raise TrainError("self_train_fraction must be in (0, 1]")
        if not (self.toggles.attract_repel or self.toggles.self_training):
            raise TrainError("at least one objective must stay enabled")

    def metadata(self) -> dict:
        meta = asdict(self)
        meta["toggles"] = asdict(self.toggles)
        return meta


@dataclass
class AdamState:
    """Bias-corrected Adam moments, one pair per named parameter."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """Standard Adam update, in place on the parameter arrays."""
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = grads[name]
        if not np.isfinite(g).all():
            raise TrainError(f"non-finite gradient for {name} at step {t}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        mhat = m / (1.0 - state.beta1**t)
        vhat = v / (1.0 - state.beta2**t)
        p -= lr * mhat / (np.sqrt(vhat) + state.eps)


def _unique(keys: Sequence[str]) -> list[str]:
    return list(dict.fromkeys(keys))


def _specialize(
    rmap: ResidualMap, table: EmbeddingTable, keys: list[str]
):
    X = table.matrix_for(keys).astype(np.float64)
    Y, cache = forward_batch(rmap, X)
    return {k: Y[i] for i, k in enumerate(keys)}, cache


def _upstream_from(grads: dict[str, np.ndarray], keys: list[str], dim: int) -> np.ndarray:
    U = np.zeros((len(keys), dim))
    for i, k in enumerate(keys):
        g = grads.get(k)
        if g is not None:
            U[i] = g
    return U


def _check_bound(rmap: ResidualMap, cache, step: int) -> None:
    dev = np.linalg.norm(cache.Y - cache.X, axis=1) / cache.norms
    limit = rmap.epsilon * np.sqrt(rmap.dim) + 1e-6
    if dev.size and dev.max() > limit:
        raise TrainError(f"distance bound violated at step {step}: {dev.max():.6g} > {limit:.6g}")


def train(
    config: TrainConfig,
    sense_table: EmbeddingTable,
    context_table: EmbeddingTable,
    lex: Lexicon,
    instances: Sequence[WordInstance] | None = None,
    checkpoint_dir: str | Path | None = None,
    log_path: str | Path | None = None,
    step_callback: Callable[[dict], None] | None = None,
) -> tuple[SpecializationNet, list[dict]]:
    """Run the full optimization and return the net plus per-step log rows."""
    config.validate()
    if sense_table.dim != context_table.dim:
        raise TrainError(
            f"sense table dim {sense_table.dim} != context table dim {context_table.dim}"
        )
    dim = sense_table.dim
    hidden = config.hidden if config.hidden is not None else dim
    net = SpecializationNet.fresh(dim, hidden, config.epsilon, config.seed)
    rng = np.random.default_rng(config.seed)

    words = list(instances) if instances is not None else lex.train_instances()
    if config.self_train_fraction < 1.0 and words:
        keep = max(1, int(round(config.self_train_fraction * len(words))))
        idx = sorted(rng.choice(len(words), size=keep, replace=False))
        words = [words[int(i)] for i in idx]
    if not config.toggles.self_training:
        words = []

    sampler = EpochSampler(lex, words, config.batch_size, rng)

    params = net.sense_map.params("sense")
    if config.toggles.adapt_context:
        params.update(net.context_map.params("context"))
    adam = AdamState()

    log: list[dict] = []
    log_file = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        step = 0
        for epoch in range(config.epochs):
            for sense_batch, word_batch in sampler.epoch():
                try:
                    loss, grads = _train_step(
                        config, net, sense_table, context_table, sense_batch, word_batch
                    )
                except Exception as exc:
                    raise TrainError(f"step {step}: {exc}") from exc
                adam_step(params, grads, adam, config.learning_rate)
                row = {
                    "step": step,
                    "epoch": epoch,
                    "loss": loss.total,
                    "attract_repel": loss.attract_repel,
                    "self_train": loss.self_train,
                }
                log.append(row)
                if log_file:
                    log_file.write(json.dumps(row) + "\n")
                if step_callback:
                    step_callback(row)
                step += 1
            # Spot-check the hard deviation bound once per epoch.
            sample_keys = list(lex.senses)[: min(64, len(lex.senses))]
            _, cache = _specialize(net.sense_map, sense_table, sample_keys)
            _check_bound(net.sense_map, cache, step)
            if checkpoint_dir is not None:
                path = Path(checkpoint_dir) / f"checkpoint_epoch{epoch:03d}.sswm"
                save_checkpoint(net, config.metadata(), path)
        if checkpoint_dir is not None:
            save_checkpoint(net, config.metadata(), Path(checkpoint_dir) / "checkpoint_final.sswm")
    finally:
        if log_file:
            log_file.close()
    return net, log


def _train_step(
    config: TrainConfig,
    net: SpecializationNet,
    sense_table: EmbeddingTable,
    context_table: EmbeddingTable,
    sense_batch: SenseBatch,
    word_batch: WordBatch,
) -> tuple[LossValue, dict[str, np.ndarray]]:
    toggles = config.toggles
    sense_grads = net.sense_map.zero_gradients()
    ctx_grads = net.context_map.zero_gradients()

    ar_value = 0.0
    if toggles.attract_repel and sense_batch.anchors:
        ar_keys = _unique(
            list(sense_batch.members)
            + [a.positive for a in sense_batch.anchors]
            + [n for a in sense_batch.anchors for n in a.hard_negatives]
        )
        ar_vecs, ar_cache = _specialize(net.sense_map, sense_table, ar_keys)
        ar_value, ar_vec_grads = attract_repel_loss(
            sense_batch,
            ar_vecs,
            config.beta,
            repel_unrelated=toggles.repel_unrelated,
            repel_different=toggles.repel_different,
        )
        U = _upstream_from(ar_vec_grads, ar_keys, net.dim)
        g, _ = backward_batch(net.sense_map, ar_cache, U)
        sense_grads.add_(g)

    st_value = 0.0
    if toggles.self_training and word_batch.words:
        ctx_keys = _unique([w.instance_id for w in word_batch.words])
        cand_keys = _unique([k for w in word_batch.words for k in w.candidates])
        # Candidate sense embeddings are recomputed from the current
        # parameters independently of the attract-repel pass.
        cand_vecs, cand_cache = _specialize(net.sense_map, sense_table, cand_keys)
        if toggles.adapt_context:
            ctx_vecs, ctx_cache = _specialize(net.context_map, context_table, ctx_keys)
        else:
            X = context_table.matrix_for(ctx_keys).astype(np.float64)
            ctx_vecs, ctx_cache = {k: X[i] for i, k in enumerate(ctx_keys)}, None
        st_value, st_ctx_grads, st_sense_grads = self_training_loss(
            word_batch, ctx_vecs, cand_vecs
        )
        U = _upstream_from(st_sense_grads, cand_keys, net.dim) * config.alpha
        g, _ = backward_batch(net.sense_map, cand_cache, U)
        sense_grads.add_(g)
        if toggles.adapt_context:
            U = _upstream_from(st_ctx_grads, ctx_keys, net.dim) * config.alpha
            g, _ = backward_batch(net.context_map, ctx_cache, U)
            ctx_grads.add_(g)

    loss = combined_loss(ar_value, st_value, config.alpha)
    grads = {
        "sense.W1": sense_grads.W1,
        "sense.b1": sense_grads.b1,
        "sense.W2": sense_grads.W2,
        "sense.b2": sense_grads.b2,
    }
    if toggles.adapt_context:
        grads.update(
            {
                "context.W1": ctx_grads.W1,
                "context.b1": ctx_grads.b1,
                "context.W2": ctx_grads.W2,
                "context.b2": ctx_grads.b2,
            }
        )
    return loss, grads


def epsilon_sweep(
    base_config: TrainConfig,
    grid: Sequence[float],
    sense_table: EmbeddingTable,
    context_table: EmbeddingTable,
    lex: Lexicon,
    score_fn: Callable[[SpecializationNet], float],
    seeds: Sequence[int] = (0,),
) -> list[dict]:
    """Train one model per (grid point, seed) and score each on the dev set.

    ``score_fn`` maps a trained net to a dev-subset micro-F1; the sweep
    itself asserts nothing about the shape of the curve.
    """
    rows = []
    base = base_config.metadata()
    toggles = base.pop("toggles")
    for eps in grid:
        scores = []
        for seed in seeds:
            cfg = TrainConfig(
                **{**base, "epsilon": float(eps), "seed": int(seed)},
                toggles=Toggles(**toggles),
            )
            net, _ = train(cfg, sense_table, context_table, lex)
            scores.append(score_fn(net))
        rows.append(
            {
                "epsilon": float(eps),
                "scores": scores,
                "mean": float(np.mean(scores)),
                "stddev": float(np.std(scores)),
            }
        )
    return rows
