"""Conditioned definition language model: training, sampling, checkpoints.

A two-layer LSTM predicts definition tokens left to right. At every step
the input is the previous token's embedding concatenated with a learned
projection of the conditioning block (sense or word vector plus character
CNN features of the headword). Single-sense and multi-sense variants share
all machinery and differ only in the conditioning vectors handed in.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .embeddings import EmbeddingTable, SenseTable
from .errors import CheckpointError, ConfigError, MissingWordError, ShapeError
from .matcher import SenseDefPair
from .neural import (
    CHAR_FEATURE_DIM,
    Tensor,
    adam_step,
    char_cnn_forward,
    clip_global_norm,
    concat,
    gather,
    init_adam,
    init_char_cnn,
    init_lstm,
    lstm_step,
    softmax,
    softmax_cross_entropy,
    uniform_init,
)
from .textprep import BOS_ID, EOS_ID, PAD_ID, UNK_ID, Vocabulary, count_tokens

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"PDEF1"
CLIP_NORM = 5.0


@dataclass(frozen=True, eq=False)
class DefModelConfig:
    """Shapes and training hyperparameters of the definition model."""

    vocab: Vocabulary
    char_vocab: Vocabulary
    condition_dim: int
    hidden: int = 300
    layers: int = 2
    char_feature_dim: int = CHAR_FEATURE_DIM
    token_embedding_dim: int = 300
    max_def_len: int = 60
    lr: float = 0.001
    batch_size: int = 16
    max_epochs: int = 100
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if len(self.vocab) < 5 or len(self.char_vocab) < 5:
            raise ConfigError("vocabularies must contain at least one real symbol")
        for name in ("condition_dim", "hidden", "layers", "token_embedding_dim",
                     "max_def_len", "batch_size", "max_epochs", "patience"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.char_feature_dim != CHAR_FEATURE_DIM:
            raise ConfigError(
                f"char_feature_dim is fixed at {CHAR_FEATURE_DIM} by the kernel set")


@dataclass(eq=False)
class DefModel:
    """Config plus the named parameter tensors."""

    config: DefModelConfig
    params: dict[str, Tensor]


@dataclass(frozen=True)
class TrainReport:
    """Per-epoch mean NLL per token, on train and dev, plus stopping info."""

    train_losses: tuple[float, ...]
    dev_losses: tuple[float, ...]
    best_epoch: int
    stopped_early: bool


@dataclass(frozen=True)
class GenConfig:
    """Sampling controls; UNK masking is on unless disabled."""

    temperature: float = 0.1
    max_len: int = 60
    mask_unk: bool = True

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        if self.max_len < 1:
            raise ConfigError("max_len must be positive")


def build_char_vocab(words: Iterable[str], min_count: int = 1) -> Vocabulary:
    """Character-level vocabulary over the given headwords."""
    counts = count_tokens(ch for word in words for ch in word)
    return Vocabulary(dict(counts), min_count=min_count)


def init_model(cfg: DefModelConfig) -> DefModel:
    """Fresh parameters, deterministic in cfg.seed.

    Collection: token embeddings, character CNN, condition projection
    (condition vector plus char features down to the token embedding width),
    stacked LSTM, output projection.
    """
    rng = np.random.default_rng(cfg.seed)
    params: dict[str, Tensor] = {}
    params["token_emb"] = uniform_init(rng, (len(cfg.vocab), cfg.token_embedding_dim))
    params.update(init_char_cnn(rng, len(cfg.char_vocab)))
    params["Wc"] = uniform_init(
        rng, (cfg.condition_dim + CHAR_FEATURE_DIM, cfg.token_embedding_dim))
    params["bc"] = Tensor(np.zeros(cfg.token_embedding_dim), requires_grad=True)
    params.update(init_lstm(rng, 2 * cfg.token_embedding_dim, cfg.hidden, cfg.layers))
    params["Wo"] = uniform_init(rng, (cfg.hidden, len(cfg.vocab)))
    params["bo"] = Tensor(np.zeros(len(cfg.vocab)), requires_grad=True)
    return DefModel(cfg, params)


def word_char_ids(word: str, char_vocab: Vocabulary) -> list[int]:
    return [char_vocab.id(ch) for ch in word]


def _condition_block(model: DefModel, conditions: np.ndarray, words: list[str]) -> Tensor:
    """Project [condition ; char features] rows to the token embedding width."""
    feats = concat(
        [char_cnn_forward(model.params, word_char_ids(w, model.config.char_vocab), PAD_ID)
         for w in words], axis=0)
    block = concat([Tensor(conditions), feats], axis=1)
    return block @ model.params["Wc"] + model.params["bc"]


def _encode_definition(definition: tuple[str, ...], cfg: DefModelConfig) -> list[int]:
    ids = cfg.vocab.ids(definition[:cfg.max_def_len])
    return ids


def batch_nll(model: DefModel, pairs: list[SenseDefPair]) -> tuple[Tensor, int]:
    """Teacher-forced mean NLL per token over a batch of pairs.

    Definitions are BOS-prefixed and EOS-terminated; shorter sequences are
    padded and their padded steps masked out of the mean. Returns the scalar
    loss and the number of real target tokens it averages.
    """
    if not pairs:
        raise ConfigError("batch_nll needs at least one pair")
    cfg = model.config
    encoded = [_encode_definition(p.definition, cfg) for p in pairs]
    batch = len(pairs)
    T = max(len(ids) for ids in encoded) + 1  # plus EOS
    inputs = np.full((batch, T), PAD_ID, dtype=np.int64)
    targets = np.full((batch, T), PAD_ID, dtype=np.int64)
    for i, ids in enumerate(encoded):
        inputs[i, 0] = BOS_ID
        inputs[i, 1:len(ids) + 1] = ids
        targets[i, :len(ids)] = ids
        targets[i, len(ids)] = EOS_ID
    mask = (targets != PAD_ID).astype(np.float64)

    conditions = np.stack([p.sense_vector for p in pairs])
    cond = _condition_block(model, conditions, [p.headword for p in pairs])
    hidden = cfg.hidden
    zero = Tensor(np.zeros((batch, hidden)))
    state = [(zero, zero) for _ in range(cfg.layers)]
    tops = []
    for t in range(T):
        x = concat([gather(model.params["token_emb"], inputs[:, t]), cond], axis=1)
        layer_input = x
        for layer in range(cfg.layers):
            h, c = lstm_step(layer_input, state[layer][0], state[layer][1],
                             model.params[f"Wx{layer}"], model.params[f"Wh{layer}"],
                             model.params[f"b{layer}"])
            state[layer] = (h, c)
            layer_input = h
        tops.append(layer_input)
    logits = concat(tops, axis=0) @ model.params["Wo"] + model.params["bo"]
    flat_targets = targets.T.reshape(-1)  # time-major to match the concat
    losses = softmax_cross_entropy(logits, flat_targets)
    flat_mask = mask.T.reshape(-1)
    n_tokens = int(flat_mask.sum())
    loss = (losses * Tensor(flat_mask)).sum() / float(n_tokens)
    return loss, n_tokens


def sequence_nll(model: DefModel, condition: np.ndarray, target_word: str,
                 definition: tuple[str, ...]) -> Tensor:
    """Mean NLL per token of one definition under one condition vector."""
    condition = np.asarray(condition, dtype=np.float64)
    if condition.shape != (model.config.condition_dim,):
        raise ShapeError(f"condition shape {condition.shape} does not match config")
    if not definition:
        raise ConfigError("definition must be nonempty")
    if len(definition) > model.config.max_def_len:
        raise ConfigError("definition longer than max_def_len")
    pair = SenseDefPair(target_word, 0, condition, tuple(definition))
    loss, _ = batch_nll(model, [pair])
    return loss


def _snapshot(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {name: p.data.copy() for name, p in params.items()}


def _restore(params: dict[str, Tensor], snapshot: dict[str, np.ndarray]) -> None:
    for name, data in snapshot.items():
        params[name].data[...] = data


def dataset_nll(model: DefModel, pairs: list[SenseDefPair], batch_size: int = 64) -> float:
    """Mean NLL per token over a pair list, no parameter updates."""
    total, tokens = 0.0, 0
    for start in range(0, len(pairs), batch_size):
        loss, n = batch_nll(model, pairs[start:start + batch_size])
        total += loss.item() * n
        tokens += n
    return total / tokens


def train_defmodel(
    model: DefModel,
    pairs: list[SenseDefPair],
    dev_pairs: list[SenseDefPair] | None = None,
    cfg: DefModelConfig | None = None,
) -> tuple[DefModel, TrainReport]:
    """Mini-batch Adam on mean NLL with best-dev retention.

    Shuffling is fixed by cfg.seed. Dev NLL is evaluated every epoch (on the
    training pairs when no dev list is given); the parameters of the best dev
    epoch are restored before returning. Stops once `patience` epochs pass
    without a new best, or at max_epochs.
    """
    cfg = cfg or model.config
    if not pairs:
        raise ConfigError("train_defmodel needs at least one training pair")
    dev = dev_pairs if dev_pairs else pairs
    rng = np.random.default_rng(cfg.seed)
    state = init_adam(model.params, lr=cfg.lr)
    order = np.arange(len(pairs))
    train_losses: list[float] = []
    dev_losses: list[float] = []
    best_dev = np.inf
    best_params = _snapshot(model.params)
    best_epoch = 0
    stopped_early = False
    for epoch in range(cfg.max_epochs):
        rng.shuffle(order)
        total, tokens = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            batch = [pairs[i] for i in order[start:start + cfg.batch_size]]
            for p in model.params.values():
                p.zero_grad()
            loss, n = batch_nll(model, batch)
            loss.backward()
            grads = {name: p.grad for name, p in model.params.items()
                     if p.grad is not None}
            grads, _norm = clip_global_norm(grads, CLIP_NORM)
            adam_step(model.params, grads, state)
            total += loss.item() * n
            tokens += n
        train_losses.append(total / tokens)
        dev_loss = dataset_nll(model, dev)
        dev_losses.append(dev_loss)
        if dev_loss < best_dev:
            best_dev = dev_loss
            best_params = _snapshot(model.params)
            best_epoch = epoch
        elif epoch - best_epoch >= cfg.patience:
            stopped_early = True
            break
    _restore(model.params, best_params)
    return model, TrainReport(tuple(train_losses), tuple(dev_losses),
                              best_epoch, stopped_early)


def _np_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sample_definition(
    model: DefModel,
    condition: np.ndarray,
    target_word: str,
    temperature: float = 0.1,
    max_len: int = 60,
    rng: np.random.Generator | None = None,
    mask_unk: bool = True,
) -> tuple[str, ...]:
    """Autoregressive temperature sampling; returns content tokens only.

    BOS and PAD can never be emitted; UNK is masked unless mask_unk is off.
    Stops at EOS or after max_len tokens.
    """
    if temperature <= 0:
        raise ConfigError("temperature must be positive")
    rng = rng or np.random.default_rng(0)
    cfg = model.config
    condition = np.asarray(condition, dtype=np.float64).reshape(1, cfg.condition_dim)
    cond = _condition_block(model, condition, [target_word]).data
    P = {name: t.data for name, t in model.params.items()}
    hidden = cfg.hidden
    hs = [np.zeros((1, hidden)) for _ in range(cfg.layers)]
    cs = [np.zeros((1, hidden)) for _ in range(cfg.layers)]
    prev = BOS_ID
    out: list[str] = []
    n_vocab = len(cfg.vocab)
    for _ in range(max_len):
        x = np.concatenate([P["token_emb"][prev][None, :], cond], axis=1)
        for layer in range(cfg.layers):
            gates = x @ P[f"Wx{layer}"] + hs[layer] @ P[f"Wh{layer}"] + P[f"b{layer}"]
            i = _np_sigmoid(gates[:, 0 * hidden:1 * hidden])
            f = _np_sigmoid(gates[:, 1 * hidden:2 * hidden])
            g = np.tanh(gates[:, 2 * hidden:3 * hidden])
            o = _np_sigmoid(gates[:, 3 * hidden:4 * hidden])
            cs[layer] = f * cs[layer] + i * g
            hs[layer] = o * np.tanh(cs[layer])
            x = hs[layer]
        logits = (x @ P["Wo"] + P["bo"])[0]
        probs = softmax(logits, temperature)
        probs[BOS_ID] = 0.0
        probs[PAD_ID] = 0.0
        if mask_unk:
            probs[UNK_ID] = 0.0
        probs = probs / probs.sum()
        token_id = int(rng.choice(n_vocab, p=probs))
        if token_id == EOS_ID:
            break
        out.append(cfg.vocab.token(token_id))
        prev = token_id
    return tuple(out)


def generate_for_word(
    model: DefModel,
    word: str,
    source: SenseTable | EmbeddingTable,
    cfg: GenConfig,
    rng: np.random.Generator,
) -> list[tuple[int, tuple[str, ...]]]:
    """One definition per retained sense (or one total for a word table)."""
    if word not in source:
        raise MissingWordError(word)
    if isinstance(source, SenseTable):
        conditions = [vec for _k, vec, _p in source.senses(word)]
    else:
        conditions = [source.vector(word)]
    return [
        (k, sample_definition(model, vec, word, cfg.temperature, cfg.max_len,
                              rng, cfg.mask_unk))
        for k, vec in enumerate(conditions)
    ]


def save_generated(rows: list[tuple[str, int, tuple[str, ...]]], path: str | Path) -> None:
    """TSV: headword, sense index, space-joined generated definition."""
    with open(path, "w", encoding="utf-8") as f:
        for headword, sense_index, tokens in rows:
            f.write(f"{headword}\t{sense_index}\t{' '.join(tokens)}\n")


def _config_payload(cfg: DefModelConfig) -> bytes:
    echo = {
        "condition_dim": cfg.condition_dim,
        "hidden": cfg.hidden,
        "layers": cfg.layers,
        "char_feature_dim": cfg.char_feature_dim,
        "token_embedding_dim": cfg.token_embedding_dim,
        "max_def_len": cfg.max_def_len,
        "lr": cfg.lr,
        "batch_size": cfg.batch_size,
        "max_epochs": cfg.max_epochs,
        "patience": cfg.patience,
        "seed": cfg.seed,
        "vocab_digest": cfg.vocab.digest(),
        "char_vocab_digest": cfg.char_vocab.digest(),
    }
    return json.dumps(echo, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_checkpoint(model: DefModel, path: str | Path) -> None:
    """Binary container: magic, canonical JSON config echo, named tensors."""
    payload = _config_payload(model.config)
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(payload)))
        f.write(payload)
        f.write(struct.pack("<I", len(model.params)))
        for name in sorted(model.params):
            data = model.params[name].data
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", data.ndim))
            f.write(struct.pack(f"<{data.ndim}I", *data.shape))
            f.write(data.astype("<f8").tobytes())


def load_checkpoint(path: str | Path, vocab: Vocabulary,
                    char_vocab: Vocabulary) -> DefModel:
    """Rebuild a model, refusing when the vocabularies do not match."""
    try:
        raw = Path(path).read_bytes()
        offset = 0

        def take(n: int) -> bytes:
            nonlocal offset
            if offset + n > len(raw):
                raise CheckpointError(f"{path}: truncated checkpoint")
            piece = raw[offset:offset + n]
            offset += n
            return piece

        if take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: bad magic, not a model checkpoint")
        (config_len,) = struct.unpack("<I", take(4))
        echo = json.loads(take(config_len).decode("utf-8"))
        if echo["vocab_digest"] != vocab.digest():
            raise CheckpointError(f"{path}: token vocabulary digest mismatch")
        if echo["char_vocab_digest"] != char_vocab.digest():
            raise CheckpointError(f"{path}: character vocabulary digest mismatch")
        cfg = DefModelConfig(
            vocab=vocab,
            char_vocab=char_vocab,
            condition_dim=echo["condition_dim"],
            hidden=echo["hidden"],
            layers=echo["layers"],
            char_feature_dim=echo["char_feature_dim"],
            token_embedding_dim=echo["token_embedding_dim"],
            max_def_len=echo["max_def_len"],
            lr=echo["lr"],
            batch_size=echo["batch_size"],
            max_epochs=echo["max_epochs"],
            patience=echo["patience"],
            seed=echo["seed"],
        )
        (n_tensors,) = struct.unpack("<I", take(4))
        params: dict[str, Tensor] = {}
        for _ in range(n_tensors):
            (name_len,) = struct.unpack("<H", take(2))
            name = take(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", take(1))
            shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(take(8 * count), dtype="<f8").reshape(shape)
            params[name] = Tensor(data.astype(np.float64), requires_grad=True)
        if offset != len(raw):
            raise CheckpointError(f"{path}: trailing bytes after tensors")
    except CheckpointError:
        raise
    except (struct.error, ValueError, KeyError) as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint ({exc})") from exc
    expected = set(init_model(cfg).params)
    if set(params) != expected:
        raise CheckpointError(f"{path}: tensor names do not match the architecture")
    return DefModel(cfg, params)
