"""Frozen text encoders and subword pooling.

An encoder turns a sentence into per-subword vectors for every hidden
layer.  Pooling always sums the last four layers first, then averages:

* sentence pooling averages every content subword (special tokens are
  excluded by default, switchable),
* span pooling averages only the subwords overlapping a character span
  of the original text; special tokens never participate.

``HashEncoder`` is a deterministic offline stand-in whose subword
vectors are seeded from the token string, so identical sentences always
embed identically.  ``load_transformer_encoder`` adapts a pretrained
bidirectional transformer behind an optional dependency.
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

BOUNDARY_START = "[CLS]"
BOUNDARY_END = "[SEP]"


class SpanAlignmentError(ValueError):
    """A target character span maps to no content subwords."""


@dataclass(frozen=True)
class Encoded:
    """Per-subword hidden states for one sentence."""

    tokens: tuple[str, ...]
    offsets: tuple[tuple[int, int], ...]  # char spans; (0, 0) for specials
    special: np.ndarray  # bool per token
    layers: np.ndarray  # (n_layers, n_tokens, dim)
    truncated: bool = False

    def __post_init__(self) -> None:
        n = len(self.tokens)
        if len(self.offsets) != n or self.special.shape != (n,):
            raise ValueError("token/offset/special lengths disagree")
        if self.layers.ndim != 3 or self.layers.shape[1] != n:
            raise ValueError("layers must have shape (n_layers, n_tokens, dim)")
        if self.layers.shape[0] < 4:
            raise ValueError("encoder must expose at least four layers")


def sum_last_four(encoded: Encoded) -> np.ndarray:
    """Per-subword representation: sum of the last four hidden layers."""
    return encoded.layers[-4:].sum(axis=0)


def pool_sentence(encoded: Encoded, include_special: bool = False) -> np.ndarray:
    """Average the summed-layer vectors over the sentence's subwords."""
    summed = sum_last_four(encoded)
    mask = np.ones(len(encoded.tokens), dtype=bool) if include_special else ~encoded.special
    if not mask.any():
        raise SpanAlignmentError("sentence has no content subwords")
    return summed[mask].mean(axis=0)


def pool_span(encoded: Encoded, start: int, end: int) -> np.ndarray:
    """Average the summed-layer vectors over subwords inside [start, end)."""
    if not 0 <= start < end:
        raise ValueError(f"bad span [{start}, {end})")
    summed = sum_last_four(encoded)
    rows = [
        i
        for i, (a, b) in enumerate(encoded.offsets)
        if not encoded.special[i] and a < end and b > start
    ]
    if not rows:
        raise SpanAlignmentError(f"span [{start}, {end}) covers no subwords")
    return summed[rows].mean(axis=0)


class HashEncoder:
    """Deterministic fake encoder for tests and offline pipelines.

    Words are split on whitespace and chopped into fixed-width subword
    pieces (continuations prefixed ``##``, mimicking wordpiece).  Each
    (layer, token) vector is drawn from a generator seeded by hashing
    the token string, so the encoding depends only on the text.
    """

    def __init__(
        self,
        dim: int = 32,
        n_layers: int = 6,
        max_tokens: int = 128,
        piece_len: int = 4,
    ) -> None:
        if dim < 1 or n_layers < 4 or max_tokens < 3 or piece_len < 1:
            raise ValueError("bad encoder configuration")
        self.dim = dim
        self.n_layers = n_layers
        self.max_tokens = max_tokens
        self.piece_len = piece_len
        self._cache: dict[str, np.ndarray] = {}

    def _token_layers(self, token: str) -> np.ndarray:
        vecs = self._cache.get(token)
        if vecs is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vecs = rng.standard_normal((self.n_layers, self.dim)).astype(np.float64)
            self._cache[token] = vecs
        return vecs

    def encode(self, text: str) -> Encoded:
        if not text.strip():
            raise ValueError("cannot encode empty text")
        tokens: list[str] = [BOUNDARY_START]
        offsets: list[tuple[int, int]] = [(0, 0)]
        special = [True]
        pos = 0
        for word in text.split():
            start = text.index(word, pos)
            pos = start + len(word)
            for i in range(0, len(word), self.piece_len):
                piece = word[i : i + self.piece_len]
                tokens.append(piece if i == 0 else f"##{piece}")
                offsets.append((start + i, start + i + len(piece)))
                special.append(False)
        truncated = len(tokens) + 1 > self.max_tokens
        if truncated:
            log.warning(
                "truncating sentence of %d subwords to %d: %.40r...",
                len(tokens) + 1,
                self.max_tokens,
                text,
            )
            tokens = tokens[: self.max_tokens - 1]
            offsets = offsets[: self.max_tokens - 1]
            special = special[: self.max_tokens - 1]
        tokens.append(BOUNDARY_END)
        offsets.append((0, 0))
        special.append(True)
        layers = np.stack(
            [self._token_layers(tok) for tok in tokens], axis=1
        )  # (n_layers, n_tokens, dim)
        return Encoded(
            tokens=tuple(tokens),
            offsets=tuple(offsets),
            special=np.asarray(special, dtype=bool),
            layers=layers,
            truncated=truncated,
        )


def load_transformer_encoder(
    model_id: str, device: str = "cpu", max_tokens: int = 512
):
    """Adapter around a pretrained transformer (optional dependency)."""
    try:
        import torch
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:  # pragma: no cover - optional extra
        raise RuntimeError(
            "transformer encoders need the 'transformers' extra installed"
        ) from exc

    class TransformerEncoder:  # pragma: no cover - needs model weights
        def __init__(self) -> None:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(
                model_id, output_hidden_states=True
            )
            self.model.to(device)
            self.model.eval()
            self.dim = self.model.config.hidden_size
            self.max_tokens = max_tokens

        def encode(self, text: str) -> Encoded:
            enc = self.tokenizer(
                text,
                return_offsets_mapping=True,
                truncation=True,
                max_length=self.max_tokens,
                return_tensors="pt",
            )
            offsets = [tuple(map(int, o)) for o in enc.pop("offset_mapping")[0]]
            special = np.array(
                self.tokenizer.get_special_tokens_mask(
                    enc["input_ids"][0].tolist(), already_has_special_tokens=True
                ),
                dtype=bool,
            )
            with torch.no_grad():
                out = self.model(**{k: v.to(device) for k, v in enc.items()})
            layers = np.stack(
                [h[0].cpu().numpy() for h in out.hidden_states], axis=0
            )
            tokens = tuple(
                self.tokenizer.convert_ids_to_tokens(enc["input_ids"][0])
            )
            truncated = len(tokens) >= self.max_tokens
            return Encoded(
                tokens=tokens,
                offsets=tuple(
                    (0, 0) if special[i] else offsets[i]
                    for i in range(len(tokens))
                ),
                special=special,
                layers=layers,
                truncated=truncated,
            )

    return TransformerEncoder()
