"""Dense, stacked-LSTM, and character-CNN layers built on the Tensor graph."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor, concat, sigmoid, tanh

# (kernel length, number of filters); concatenated output dim is 160.
CNN_KERNELS = ((2, 10), (3, 30), (4, 40), (5, 40), (6, 40))
CHAR_FEATURE_DIM = sum(size for _, size in CNN_KERNELS)
CHAR_EMBEDDING_DIM = 20

INIT_SCALE = 0.05


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], scale: float = INIT_SCALE) -> Tensor:
    return Tensor(rng.uniform(-scale, scale, size=shape), requires_grad=True)


def init_dense(rng: np.random.Generator, in_dim: int, out_dim: int) -> dict[str, Tensor]:
    return {
        "W": uniform_init(rng, (in_dim, out_dim)),
        "b": Tensor(np.zeros(out_dim), requires_grad=True),
    }


def dense(x: Tensor, params: dict[str, Tensor]) -> Tensor:
    return x @ params["W"] + params["b"]


def init_lstm(rng: np.random.Generator, input_dim: int, hidden: int, layers: int) -> dict[str, Tensor]:
    """Stacked LSTM parameters; gate order [input, forget, candidate, output].

    Forget-gate bias starts at +1 so early training does not wash out state.
    """
    params: dict[str, Tensor] = {}
    for layer in range(layers):
        dim = input_dim if layer == 0 else hidden
        bias = np.zeros(4 * hidden)
        bias[hidden:2 * hidden] = 1.0
        params[f"Wx{layer}"] = uniform_init(rng, (dim, 4 * hidden))
        params[f"Wh{layer}"] = uniform_init(rng, (hidden, 4 * hidden))
        params[f"b{layer}"] = Tensor(bias, requires_grad=True)
    return params


def lstm_step(
    x: Tensor, h: Tensor, c: Tensor, Wx: Tensor, Wh: Tensor, b: Tensor
) -> tuple[Tensor, Tensor]:
    """One LSTM cell update for a (batch, dim) input."""
    hidden = Wh.shape[0]
    if x.shape[1] != Wx.shape[0]:
        raise ShapeError(f"lstm input dim {x.shape[1]} does not match weights {Wx.shape[0]}")
    gates = x @ Wx + h @ Wh + b
    i = sigmoid(gates[:, 0 * hidden:1 * hidden])
    f = sigmoid(gates[:, 1 * hidden:2 * hidden])
    g = tanh(gates[:, 2 * hidden:3 * hidden])
    o = sigmoid(gates[:, 3 * hidden:4 * hidden])
    c_new = f * c + i * g
    h_new = o * tanh(c_new)
    return h_new, c_new


def lstm_forward(
    params: dict[str, Tensor],
    inputs: list[Tensor],
    initial_state: list[tuple[Tensor, Tensor]] | None = None,
) -> tuple[list[Tensor], list[tuple[Tensor, Tensor]]]:
    """Run a stacked LSTM over per-step (batch, dim) inputs.

    Layer count and hidden size are read off the parameter collection.
    Returns the top layer's hidden state at every step and the final
    (h, c) pair of every layer.
    """
    if not inputs:
        raise ShapeError("lstm_forward needs at least one input step")
    layers = sum(1 for name in params if name.startswith("Wx"))
    hidden = params["Wh0"].shape[0]
    batch = inputs[0].shape[0]
    if initial_state is None:
        zero = np.zeros((batch, hidden))
        state = [(Tensor(zero), Tensor(zero)) for _ in range(layers)]
    else:
        state = list(initial_state)
    outputs: list[Tensor] = []
    for x in inputs:
        layer_input = x
        for layer in range(layers):
            h, c = lstm_step(
                layer_input, state[layer][0], state[layer][1],
                params[f"Wx{layer}"], params[f"Wh{layer}"], params[f"b{layer}"],
            )
            state[layer] = (h, c)
            layer_input = h
        outputs.append(layer_input)
    return outputs, state


def init_char_cnn(rng: np.random.Generator, char_vocab_size: int,
                  emb_dim: int = CHAR_EMBEDDING_DIM) -> dict[str, Tensor]:
    params = {"char_emb": uniform_init(rng, (char_vocab_size, emb_dim))}
    for length, size in CNN_KERNELS:
        params[f"K{length}"] = uniform_init(rng, (length * emb_dim, size))
        params[f"Kb{length}"] = Tensor(np.zeros(size), requires_grad=True)
    return params


def char_cnn_forward(params: dict[str, Tensor], char_ids, pad_id: int) -> Tensor:
    """Convolve character embeddings of one word into a (1, 160) feature row.

    Each kernel length slides with stride 1 over the embedded characters,
    max-pools over positions, and the pooled vectors are concatenated and
    passed through tanh. Words shorter than the longest kernel are padded.
    """
    from .tensor import gather

    ids = list(char_ids)
    if not ids:
        raise ShapeError("char_cnn_forward needs at least one character")
    longest = max(length for length, _ in CNN_KERNELS)
    if len(ids) < longest:
        ids = ids + [pad_id] * (longest - len(ids))
    emb = gather(params["char_emb"], ids)
    length_total = len(ids)
    pooled: list[Tensor] = []
    for length, _ in CNN_KERNELS:
        positions = length_total - length + 1
        windows = concat([emb[offset:offset + positions] for offset in range(length)], axis=1)
        scores = windows @ params[f"K{length}"] + params[f"Kb{length}"]
        pooled.append(scores.max(axis=0))
    return tanh(concat(pooled, axis=0)).reshape(1, CHAR_FEATURE_DIM)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    """Scale all gradients together so their joint L2 norm is at most max_norm."""
    total = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if total <= max_norm or total == 0.0:
        return grads, total
    scale = max_norm / total
    return {name: g * scale for name, g in grads.items()}, total
