"""Multi-sense skip-gram with a truncated stick-breaking prior.

Each word owns up to max_prototypes sense vectors. For every corpus
occurrence, soft responsibilities over senses combine the expected
stick-breaking log prior (digamma expectations of the Beta posteriors)
with the context log-likelihood; gradient updates and prototype counts
are weighted by those responsibilities.

The context likelihood is an exact softmax over the output vocabulary.
That is quadratic-free but O(V) per unique center, which is the right
trade-off at desk scale: unique centers per chunk are capped by V, so
the normalizer costs about one (V x dim) matmul per chunk.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma

from ..errors import ConfigError
from ..textprep import Vocabulary, build_vocab, count_tokens
from .corpus import chunk_ranges, corpus_to_ids, linear_lr, shard_ranges
from .tables import SenseTable

log = logging.getLogger(__name__)

CHUNK = 1024
DEFAULT_PRUNE_THRESHOLD = 1e-3


@dataclass(frozen=True)
class AdagramConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_count: int = 5
    seed: int = 0
    max_prototypes: int = 5
    concentration_alpha: float = 0.1
    prune_threshold: float = DEFAULT_PRUNE_THRESHOLD
    threads: int = 1

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "min_count", "max_prototypes", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if self.initial_lr <= 0 or self.concentration_alpha <= 0:
            raise ConfigError("initial_lr and concentration_alpha must be positive")


def expected_log_pi(counts: np.ndarray, alpha: float) -> np.ndarray:
    """E[log pi_k] under truncated stick-breaking Beta posteriors.

    counts has shape (..., K); stick k has posterior Beta(1 + n_k,
    alpha + sum_{j>k} n_j) and the last stick takes the remainder.
    """
    counts = np.asarray(counts, dtype=np.float64)
    K = counts.shape[-1]
    tail = np.flip(np.cumsum(np.flip(counts, -1), -1), -1) - counts
    a = 1.0 + counts
    b = alpha + tail
    e_log_beta = digamma(a) - digamma(a + b)
    e_log_rest = digamma(b) - digamma(a + b)
    prefix = np.concatenate(
        [np.zeros_like(e_log_rest[..., :1]), np.cumsum(e_log_rest[..., :-1], -1)], axis=-1
    )
    out = e_log_beta + prefix
    out[..., K - 1] = prefix[..., K - 1]
    return out


def expected_pi(counts: np.ndarray, alpha: float) -> np.ndarray:
    """Expected prototype priors; the last stick absorbs the remainder so
    every row sums to exactly 1."""
    counts = np.asarray(counts, dtype=np.float64)
    tail = np.flip(np.cumsum(np.flip(counts, -1), -1), -1) - counts
    a = 1.0 + counts
    b = alpha + tail
    beta = a / (a + b)
    beta[..., -1] = 1.0
    rest = np.cumprod(1.0 - beta[..., :-1], axis=-1)
    pi = beta.copy()
    pi[..., 1:] *= rest
    return pi


def _grouped_contexts(
    n_positions: int, start: int, ids: np.ndarray, window: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Per-center context id matrix (n, 2*window) plus validity mask.

    Each center draws its own width from 1..window; masked slots hold id 0.
    """
    widths = rng.integers(1, window + 1, size=n_positions)
    positions = np.arange(start, start + n_positions)
    ctx = np.zeros((n_positions, 2 * window), dtype=np.int64)
    mask = np.zeros((n_positions, 2 * window), dtype=np.float64)
    for offset in range(1, window + 1):
        for sign, col in ((-1, 2 * (offset - 1)), (1, 2 * (offset - 1) + 1)):
            pos = positions + sign * offset
            ok = (widths >= offset) & (pos >= 0) & (pos < len(ids))
            ctx[ok, col] = ids[pos[ok]]
            mask[ok, col] = 1.0
    return ctx, mask


def _train_span(
    ids: np.ndarray,
    span: tuple[int, int],
    In: np.ndarray,
    Out: np.ndarray,
    counts: np.ndarray,
    cfg: AdagramConfig,
    rng: np.random.Generator,
    lr_offset: int,
    lr_total: int,
) -> None:
    K = cfg.max_prototypes
    dim = cfg.dim
    for start, stop in chunk_ranges(span[1] - span[0], CHUNK):
        lo = span[0] + start
        hi = span[0] + stop
        n = hi - lo
        centers = ids[lo:hi]
        ctx, mask = _grouped_contexts(n, lo, ids, cfg.window, rng)
        lr = linear_lr(cfg.initial_lr, lr_offset + lo, lr_total)

        uniq, inv = np.unique(centers, return_inverse=True)
        in_u = In[uniq]
        scores_full = np.einsum("ukd,vd->ukv", in_u, Out)
        lse = np.logaddexp.reduce(scores_full, axis=2)
        probs = np.exp(scores_full - lse[:, :, None])
        prior = expected_log_pi(counts[uniq], cfg.concentration_alpha)

        in_n = in_u[inv]
        ctx_vecs = Out[ctx]
        dots = np.einsum("nkd,ncd->nkc", in_n, ctx_vecs)
        loglik = ((dots - lse[inv][:, :, None]) * mask[:, None, :]).sum(axis=2)
        scores = prior[inv] + loglik
        scores -= scores.max(axis=1, keepdims=True)
        resp = np.exp(scores)
        resp /= resp.sum(axis=1, keepdims=True)

        # One mini-batch step: the mean occurrence gradient keeps the
        # per-row movement bounded regardless of chunk size and vocabulary.
        step = lr / n
        n_ctx = mask.sum(axis=1)
        sum_ctx = np.einsum("ncd,nc->nd", ctx_vecs, mask)
        expected_out = np.einsum("ukv,vd->ukd", probs, Out)
        grad_in = step * resp[:, :, None] * (sum_ctx[:, None, :] - n_ctx[:, None, None] * expected_out[inv])
        np.add.at(In, centers, grad_in)

        resp_in = np.einsum("nk,nkd->nd", resp, in_n)
        pos_coef = step * mask
        np.add.at(Out, ctx.reshape(-1), (pos_coef[:, :, None] * resp_in[:, None, :]).reshape(-1, dim))
        weight = np.zeros((len(uniq), K))
        np.add.at(weight, inv, resp * n_ctx[:, None])
        Out -= step * np.einsum("ukv,ukd->vd", probs * weight[:, :, None], in_u)

        np.add.at(counts, centers, resp)


def train_adagram(corpus, cfg: AdagramConfig, vocab: Vocabulary | None = None) -> SenseTable:
    """Train multi-sense embeddings; single-threaded runs are seed-stable.

    With threads > 1 the corpus is sharded across lock-free workers
    (races tolerated). The `negatives` field is accepted for interface
    parity with the single-sense trainer but unused here: the exact
    softmax normalizer plays the role negative samples approximate.
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
    In = rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim, size=(V, cfg.max_prototypes, cfg.dim))
    Out = np.zeros((V, cfg.dim))
    counts = np.zeros((V, cfg.max_prototypes))
    total = max(cfg.epochs * ids.size, 1)
    for epoch in range(cfg.epochs):
        offset = epoch * ids.size
        if cfg.threads == 1:
            _train_span(ids, (0, ids.size), In, Out, counts, cfg, rng, offset, total)
        else:
            spans = shard_ranges(ids.size, cfg.threads)
            rngs = [np.random.default_rng([cfg.seed, epoch, i]) for i in range(len(spans))]
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                futures = [
                    pool.submit(_train_span, ids, span, In, Out, counts, cfg, r, offset, total)
                    for span, r in zip(spans, rngs)
                ]
                for fut in futures:
                    fut.result()
        log.info("adagram epoch %d/%d done", epoch + 1, cfg.epochs)
    table = SenseTable(cfg.dim, cfg.max_prototypes, cfg.prune_threshold)
    for word in words:
        wid = vocab.id(word)
        table.add(word, In[wid], expected_pi(counts[wid], cfg.concentration_alpha))
    return table
