"""The assembled model: parameters, vocabulary and the end-to-end forward pass."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .answer import AnswerScores, answer_scores, combined_nll, init_answer_params
from .attention import AspectReprs, build_aspects
from .config import Config
from .data import Instance, Vocab
from .embedding import (
    EmbeddedBatch,
    embed_instance,
    init_embedding_params,
    load_word_vectors,
    random_word_table,
)
from .encoder import ContextualReprs, encode, init_encoder_params
from .errors import ContractError, FormatError
from .tensor_core import ModelParams, Tensor, load_arrays, save_params


@dataclass
class ForwardResult:
    embedded: EmbeddedBatch
    reprs: ContextualReprs
    aspects: AspectReprs
    scores: AnswerScores
    loss: Optional[Tensor] = None

    @property
    def predicted(self) -> int:
        return self.scores.predicted


class HMAModel:
    def __init__(self, cfg: Config, vocab: Vocab, params: ModelParams):
        self.cfg = cfg
        self.vocab = vocab
        self.params = params

    @classmethod
    def initialize(cls, cfg: Config, vocab: Vocab,
                   word_table: Optional[np.ndarray] = None) -> "HMAModel":
        """Fresh model seeded by ``cfg.seed``.

        Without ``word_table`` the vectors come from ``cfg.word_vectors`` or,
        failing that, from a seeded N(0, 0.1) draw.
        """
        rng = np.random.default_rng(cfg.seed)
        if word_table is None:
            if cfg.word_vectors:
                word_table = load_word_vectors(cfg.word_vectors, vocab, cfg.word_dim, rng)
            else:
                word_table = random_word_table(len(vocab), cfg.word_dim, rng)
        if word_table.shape != (len(vocab), cfg.word_dim):
            raise ContractError(
                f"word table shape {word_table.shape} != ({len(vocab)}, {cfg.word_dim})")
        params = ModelParams()
        init_embedding_params(params, cfg, word_table, rng)
        init_encoder_params(params, cfg, rng)
        init_answer_params(params, cfg)
        return cls(cfg, vocab, params)

    def forward(self, inst: Instance, with_loss: bool = False) -> ForwardResult:
        embedded = embed_instance(inst, self.vocab, self.params, self.cfg)
        reprs = encode(embedded, self.params)
        aspects = build_aspects(reprs)
        scores = answer_scores(aspects, reprs, self.params)
        result = ForwardResult(embedded, reprs, aspects, scores)
        if with_loss:
            if inst.label is None:
                raise ContractError(f"instance {inst.id!r} has no label")
            result.loss = combined_nll(scores.a_ct, scores.a_cq, inst.label)
        return result

    def loss(self, inst: Instance) -> Tensor:
        return self.forward(inst, with_loss=True).loss

    # persistence -----------------------------------------------------------

    def save(self, path) -> None:
        """Write the checkpoint plus ``.vocab`` and ``.config`` sidecar files."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_params(path, self.params)
        self.vocab.save(sidecar(path, "vocab"))
        self.cfg.save(sidecar(path, "config"))

    @classmethod
    def load(cls, path, cfg: Optional[Config] = None) -> "HMAModel":
        path = Path(path)
        if cfg is None:
            cfg_path = sidecar(path, "config")
            if not cfg_path.exists():
                raise FormatError(f"{path}: no config given and {cfg_path} is missing")
            cfg = Config.from_text(cfg_path.read_text(encoding="utf-8"), str(cfg_path))
        vocab = Vocab.load(sidecar(path, "vocab"))
        arrays = load_arrays(path)
        model = cls.initialize(cfg, vocab, word_table=np.zeros((len(vocab), cfg.word_dim)))
        try:
            model.params.load_arrays(arrays)
        except ContractError as exc:
            raise FormatError(f"{path}: checkpoint does not fit the config: {exc}") from None
        return model


def sidecar(path, kind: str) -> Path:
    path = Path(path)
    return path.with_name(path.name + "." + kind)
