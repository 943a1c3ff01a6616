"""Parameter-free dot-product attention producing the three aspect views.

Keys past their valid length are masked before the softmax; query rows
past their valid length are zeroed after fusion so padding contributes
nothing downstream.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoder import ContextualReprs
from .errors import DimensionError
from .tensor_core import Tensor, concat_last, matmul, mul, row_softmax, transpose


@dataclass
class AspectReprs:
    choice_text_attn: tuple[Tensor, Tensor]     # M_CT per choice, c x t
    choice_text: tuple[Tensor, Tensor]          # H_CT per choice, c x 2h
    choice_question: tuple[Tensor, Tensor]      # H_CQ per choice, c x 2h
    question_text: Tensor                       # H_QT, q x 2h
    question_self_attn: Tensor                  # M_QQ, q x q
    question_self: Tensor                       # H_QQ, q x 2h


def row_mask(n_rows: int, valid: int, width: int) -> Tensor:
    m = np.zeros((n_rows, width))
    m[:valid] = 1.0
    return Tensor(m)


def cross_attend(query: Tensor, key: Tensor, query_valid: int, key_valid: int):
    """Attend from each query row over the key rows.

    Returns ``(attn, fused)`` where ``attn`` is the m x n row-stochastic
    weight matrix and ``fused = [attn . key ; query]`` (m x 2h).
    """
    if query.shape[1] != key.shape[1]:
        raise DimensionError(f"cross_attend: query {query.shape} and key {key.shape} widths differ")
    attn = row_softmax(matmul(query, transpose(key)), valid=key_valid)
    fused = concat_last([matmul(attn, key), query])
    return attn, mul(fused, row_mask(query.shape[0], query_valid, fused.shape[1]))


def self_attend(question_text: Tensor, question: Tensor, q_valid: int):
    """Self-attention whose logits come from H_QT but whose values are B_Q."""
    attn = row_softmax(matmul(question_text, transpose(question_text)), valid=q_valid)
    fused = concat_last([matmul(attn, question), question])
    return attn, mul(fused, row_mask(question.shape[0], q_valid, fused.shape[1]))


def build_aspects(reprs: ContextualReprs) -> AspectReprs:
    m_ct, h_ct, h_cq = [], [], []
    for choice, c_len in zip(reprs.choices, reprs.choice_lens):
        attn, fused = cross_attend(choice, reprs.text, c_len, reprs.text_len)
        m_ct.append(attn)
        h_ct.append(fused)
        h_cq.append(cross_attend(choice, reprs.question, c_len, reprs.question_len)[1])
    _, h_qt = cross_attend(reprs.question, reprs.text, reprs.question_len, reprs.text_len)
    m_qq, h_qq = self_attend(h_qt, reprs.question, reprs.question_len)
    return AspectReprs(tuple(m_ct), tuple(h_ct), tuple(h_cq), h_qt, m_qq, h_qq)


def dump_attention(aspects: AspectReprs, directory, instance_id: str) -> None:
    """Write M_CT (one file per choice) and M_QQ as CSV for inspection."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in instance_id)
    files = {f"{safe}.M_CT.{k}.csv": m.data for k, m in enumerate(aspects.choice_text_attn)}
    files[f"{safe}.M_QQ.csv"] = aspects.question_self_attn.data
    for name, mat in files.items():
        with open(out / name, "w", newline="") as fh:
            csv.writer(fh).writerows(mat.tolist())
