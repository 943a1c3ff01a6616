"""Deep matching, weighted score pooling, dual-softmax combination and loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import AspectReprs
from .config import Config
from .encoder import ContextualReprs
from .errors import ContractError, DimensionError
from .tensor_core import (
    ModelParams,
    Tensor,
    add,
    getitem,
    log,
    matmul,
    mul,
    neg,
    reshape,
    row_softmax,
    stack_rows,
    sum_all,
    transpose,
)
from .tensor_core.tensor import record


@dataclass
class AnswerScores:
    d_ct: tuple[Tensor, Tensor]
    d_cq: tuple[Tensor, Tensor]
    a_ct: Tensor     # 1 x 2 raw scores
    a_cq: Tensor     # 1 x 2 raw scores
    combined: Tensor  # 1 x 2, softmax(a_ct) + softmax(a_cq)

    @property
    def predicted(self) -> int:
        return predict(self.combined)


def deep_match(h_choice: Tensor, h_qq: Tensor) -> Tensor:
    if h_choice.shape[1] != h_qq.shape[1]:
        raise DimensionError(f"deep_match: widths differ {h_choice.shape} vs {h_qq.shape}")
    return matmul(h_choice, transpose(h_qq))


def score_choice(d: Tensor, w: Tensor, valid_mask) -> Tensor:
    """Scalar sum of D * W over the unmasked cells."""
    mask = valid_mask if isinstance(valid_mask, Tensor) else Tensor(valid_mask)
    if d.shape != w.shape or d.shape != mask.shape:
        raise DimensionError(f"score_choice: D {d.shape}, W {w.shape}, mask {mask.shape} differ")
    return sum_all(mul(mul(d, w), mask))


def cell_mask(c_rows: int, c_valid: int, q_cols: int, q_valid: int) -> np.ndarray:
    m = np.zeros((c_rows, q_cols))
    m[:c_valid, :q_valid] = 1.0
    return m


def predict(combined: Tensor) -> int:
    a = combined.data.reshape(-1)
    return 0 if a[0] >= a[1] else 1


def combine(a_ct: Tensor, a_cq: Tensor):
    """Return ``(A, predicted)`` with A = softmax(A_CT) + softmax(A_CQ)."""
    combined = add(row_softmax(a_ct), row_softmax(a_cq))
    return combined, predict(combined)


def loss(combined: Tensor, label: int) -> Tensor:
    """Cross entropy of the renormalized combination: -log(A[label] / sum(A))."""
    if np.any(combined.data <= 0):
        raise ContractError("loss: combined scores must be strictly positive")
    picked = getitem(combined, (slice(0, 1), slice(label, label + 1)))
    return add(neg(log(sum_all(picked))), log(sum_all(combined)))


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    return z - np.log(np.exp(z).sum())


def combined_nll(a_ct: Tensor, a_cq: Tensor, label: int) -> Tensor:
    """Same value as ``loss(combine(a_ct, a_cq)[0], label)``, computed in log space.

    Large raw scores drive a softmax entry to exactly 0.0 in float64, where
    the direct form would take log(0).  Here the two log-probabilities are
    merged with logaddexp, so the loss and its gradient stay finite.
    """
    lp_ct = _log_softmax(a_ct.data.reshape(-1))
    lp_cq = _log_softmax(a_cq.data.reshape(-1))
    merged = np.logaddexp(lp_ct[label], lp_cq[label])
    out = Tensor(np.log(2.0) - merged)
    w_ct = np.exp(lp_ct[label] - merged)
    w_cq = np.exp(lp_cq[label] - merged)
    onehot = np.zeros(2)
    onehot[label] = 1.0

    def backward(g):
        g = float(g)
        return (-g * w_ct * (onehot - np.exp(lp_ct)).reshape(a_ct.shape),
                -g * w_cq * (onehot - np.exp(lp_cq)).reshape(a_cq.shape))

    record("combined_nll", (a_ct, a_cq), (out,), backward)
    return out


def _pair(scores) -> Tensor:
    return reshape(stack_rows(scores), (1, 2))


def answer_scores(aspects: AspectReprs, reprs: ContextualReprs, params: ModelParams) -> AnswerScores:
    w_ct, w_cq = params["ans.W_CT"], params["ans.W_CQ"]
    c_rows, q_cols = w_ct.shape
    d_ct = tuple(deep_match(h, aspects.question_self) for h in aspects.choice_text)
    d_cq = tuple(deep_match(h, aspects.question_self) for h in aspects.choice_question)
    masks = [cell_mask(c_rows, n, q_cols, reprs.question_len) for n in reprs.choice_lens]
    a_ct = _pair([score_choice(d, w_ct, m) for d, m in zip(d_ct, masks)])
    a_cq = _pair([score_choice(d, w_cq, m) for d, m in zip(d_cq, masks)])
    combined, _ = combine(a_ct, a_cq)
    return AnswerScores(d_ct, d_cq, a_ct, a_cq, combined)


def init_answer_params(params: ModelParams, cfg: Config) -> None:
    params.add("ans.W_CT", np.ones((cfg.c, cfg.q)))
    params.add("ans.W_CQ", np.ones((cfg.c, cfg.q)))
