"""Skip-gram with negative sampling over a tokenized corpus."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..textprep import Vocabulary, build_vocab, count_tokens
from .corpus import NoiseSampler, chunk_ranges, corpus_to_ids, dynamic_window_pairs, linear_lr, shard_ranges
from .tables import EmbeddingTable

log = logging.getLogger(__name__)

# Centers per vectorized update; small enough to keep batches near-online.
CHUNK = 512


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_count: int = 5
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "min_count", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if self.initial_lr <= 0:
            raise ConfigError("initial_lr must be positive")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _train_span(
    ids: np.ndarray,
    span: tuple[int, int],
    W_in: np.ndarray,
    W_out: np.ndarray,
    sampler: NoiseSampler,
    cfg: SgnsConfig,
    rng: np.random.Generator,
    lr_offset: int,
    lr_total: int,
) -> None:
    """Run one epoch's updates over a contiguous span of center positions."""
    for start, stop in chunk_ranges(span[1] - span[0], CHUNK):
        lo = span[0] + start
        hi = span[0] + stop
        centers, contexts = dynamic_window_pairs(ids, lo, hi, cfg.window, rng)
        if centers.size == 0:
            continue
        lr = linear_lr(cfg.initial_lr, lr_offset + lo, lr_total)
        negatives = sampler.sample(rng, (centers.size, cfg.negatives))
        out_ids = np.concatenate([contexts[:, None], negatives], axis=1)
        labels = np.zeros((centers.size, 1 + cfg.negatives))
        labels[:, 0] = 1.0
        center_vecs = W_in[centers]
        out_vecs = W_out[out_ids]
        scores = np.einsum("pd,pkd->pk", center_vecs, out_vecs)
        coef = (labels - _sigmoid(scores)) * lr
        grad_in = np.einsum("pk,pkd->pd", coef, out_vecs)
        grad_out = coef[:, :, None] * center_vecs[:, None, :]
        # Updates inside a chunk share stale vectors; averaging each row's
        # gradient over its in-chunk occurrences keeps the step bounded.
        V = W_in.shape[0]
        center_counts = np.bincount(centers, minlength=V)
        np.add.at(W_in, centers, grad_in / center_counts[centers][:, None])
        flat_out = out_ids.reshape(-1)
        out_counts = np.bincount(flat_out, minlength=V)
        grad_out = grad_out.reshape(-1, W_out.shape[1]) / out_counts[flat_out][:, None]
        np.add.at(W_out, flat_out, grad_out)


def train_sgns(corpus, cfg: SgnsConfig, vocab: Vocabulary | None = None) -> EmbeddingTable:
    """Train single-sense embeddings; returns one vector per retained word.

    Single-threaded runs are bit-reproducible for a fixed seed. With
    threads > 1 the corpus is sharded and workers update shared weight
    matrices without locks, trading reproducibility for speed.
    """
    tokens = list(corpus) if not isinstance(corpus, list) else corpus
    if vocab is None:
        vocab = build_vocab(count_tokens(tokens), min_count=cfg.min_count)
    words = vocab.words()[4:]
    if not words:
        raise ConfigError("corpus has no words above min_count")
    ids = corpus_to_ids(tokens, vocab)
    if ids.size == 0:
        raise ConfigError("corpus is empty after vocabulary filtering")
    rng = np.random.default_rng(cfg.seed)
    V = len(vocab)
    W_in = rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim, size=(V, cfg.dim))
    W_out = np.zeros((V, cfg.dim))
    sampler = NoiseSampler(vocab)
    total = max(cfg.epochs * ids.size, 1)
    for epoch in range(cfg.epochs):
        offset = epoch * ids.size
        if cfg.threads == 1:
            _train_span(ids, (0, ids.size), W_in, W_out, sampler, cfg, rng, offset, total)
        else:
            spans = shard_ranges(ids.size, cfg.threads)
            seeds = [np.random.default_rng([cfg.seed, epoch, i]) for i in range(len(spans))]
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                futures = [
                    pool.submit(_train_span, ids, span, W_in, W_out, sampler, cfg, r, offset, total)
                    for span, r in zip(spans, seeds)
                ]
                for fut in futures:
                    fut.result()
        log.info("sgns epoch %d/%d done", epoch + 1, cfg.epochs)
    keep = [vocab.id(w) for w in words]
    return EmbeddingTable(cfg.dim, words, W_in[keep])
