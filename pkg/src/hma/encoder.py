"""Shared highway layer followed by separate text / question / choice Bi-LSTMs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .embedding import EmbeddedBatch
from .errors import RangeError
from .tensor_core import (
    LSTMWeights,
    ModelParams,
    Tensor,
    add_bias,
    concat_last,
    lstm_cell,
    matmul,
    mul,
    pad_rows,
    sigmoid,
    split_rows,
    stack_rows,
    sub,
    tanh,
)

LSTM_NAMES = ("lstm_text", "lstm_q", "lstm_c")


@dataclass
class ContextualReprs:
    text: Tensor
    question: Tensor
    choices: tuple[Tensor, Tensor]
    text_len: int
    question_len: int
    choice_lens: tuple[int, int]


def highway(x: Tensor, params: ModelParams, prefix: str = "hw") -> Tensor:
    """tanh(g * (x W_a + b_a) + (1 - g) * x), g = sigmoid(x W_g + b_g)."""
    transform = add_bias(matmul(x, params[f"{prefix}.w_transform"]), params[f"{prefix}.b_transform"])
    gate = sigmoid(add_bias(matmul(x, params[f"{prefix}.w_gate"]), params[f"{prefix}.b_gate"]))
    return tanh(mul(gate, transform) + mul(sub(1.0, gate), x))


def lstm_weights(params: ModelParams, name: str, direction: str) -> LSTMWeights:
    p = f"{name}.{direction}"
    return LSTMWeights(params[f"{p}.w_x"], params[f"{p}.w_h"], params[f"{p}.b"])


def _run(rows: list[Tensor], weights: LSTMWeights) -> list[Tensor]:
    hidden = weights.w_h.shape[0]
    h = c = Tensor(np.zeros((1, hidden)))
    states = []
    for x in rows:
        h, c = lstm_cell(x, h, c, weights)
        states.append(h)
    return states


def bilstm(x: Tensor, forward: LSTMWeights, backward: LSTMWeights, valid_len: int) -> Tensor:
    """Bidirectional LSTM over the first ``valid_len`` rows of ``x``.

    The backward direction starts at row ``valid_len - 1`` so padding never
    enters either recurrence.  Output rows concatenate the forward and
    backward states; rows from ``valid_len`` on are zero.
    """
    n = x.shape[0]
    if valid_len > n or valid_len < 0:
        raise RangeError(f"bilstm: valid_len {valid_len} outside [0, {n}]")
    width = forward.w_h.shape[0] + backward.w_h.shape[0]
    if valid_len == 0:
        return Tensor(np.zeros((n, width)))
    rows = split_rows(x, valid_len)
    fwd = _run(rows, forward)
    bwd = _run(rows[::-1], backward)[::-1]
    out = concat_last([stack_rows(fwd), stack_rows(bwd)])
    return pad_rows(out, n)


def encode(batch: EmbeddedBatch, params: ModelParams) -> ContextualReprs:
    def run(name, seq, length):
        return bilstm(highway(seq, params), lstm_weights(params, name, "fwd"),
                      lstm_weights(params, name, "bwd"), length)

    text = run("lstm_text", batch.text, batch.text_len)
    question = run("lstm_q", batch.question, batch.question_len)
    choices = tuple(run("lstm_c", c, n) for c, n in zip(batch.choices, batch.choice_lens))
    return ContextualReprs(text, question, choices, batch.text_len, batch.question_len,
                           batch.choice_lens)


def _orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def init_encoder_params(params: ModelParams, cfg: Config, rng: np.random.Generator) -> None:
    e, hidden = cfg.e, cfg.h // 2

    def uni(*shape):
        return rng.uniform(-0.05, 0.05, size=shape)

    params.add("hw.w_transform", uni(e, e))
    params.add("hw.b_transform", np.zeros(e))
    params.add("hw.w_gate", uni(e, e))
    params.add("hw.b_gate", np.full(e, -1.0))
    for name in LSTM_NAMES:
        for direction in ("fwd", "bwd"):
            p = f"{name}.{direction}"
            params.add(f"{p}.w_x", uni(e, 4 * hidden))
            params.add(f"{p}.w_h", np.concatenate([_orthogonal(hidden, rng) for _ in range(4)], axis=1))
            b = np.zeros(4 * hidden)
            b[hidden:2 * hidden] = 1.0      # forget gate
            params.add(f"{p}.b", b)
