"""Per-token input representation: word vector, char-CNN, POS vector, match bits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import Config
from .data import N_CHARS, PAD_ID, UNK, UNK_ID, Featurized, Instance, Vocab, char_ids
from .errors import FormatError, RangeError
from .pos import TAGS
from .tensor_core import (
    ModelParams,
    Tensor,
    char_cnn,
    concat_last,
    gather_rows,
    pad_rows,
    reshape,
)

SEQUENCE_KINDS = ("text", "question", "choice")


@dataclass
class EmbeddingTables:
    word: Tensor
    char: Tensor
    filters: Tensor
    bias: Tensor
    pos: Tensor

    @property
    def width(self) -> int:
        return self.word.shape[1] + self.filters.shape[2] + self.pos.shape[1] + 2

    @classmethod
    def from_params(cls, params: ModelParams, kind: str = "text",
                    shared_filters: bool = True) -> "EmbeddingTables":
        prefix = "emb." if shared_filters else f"emb.{kind}."
        return cls(params["emb.word"], params["emb.char"], params[prefix + "char_filters"],
                   params[prefix + "char_bias"], params["emb.pos"])


@dataclass
class EmbeddedBatch:
    text: Tensor
    question: Tensor
    choices: tuple[Tensor, Tensor]
    text_len: int
    question_len: int
    choice_lens: tuple[int, int]


def load_word_vectors(path, vocab: Vocab, dim: int,
                      rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Build a |V| x dim word table from a whitespace-separated vector file.

    Rows for words found in the file are copied verbatim.  Every other row,
    and the unk row itself, takes the file's ``<unk>`` (or ``unk``) vector
    when present, else a single N(0, 0.1) draw.  The padding row is zero.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    table = np.zeros((len(vocab), dim))
    found = np.zeros(len(vocab), dtype=bool)
    unk_vec = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip().split(" ")
            if len(parts) <= 1 and not parts[0]:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise FormatError(
                    f"{path}: line {lineno}: expected {dim} floats, found {len(values)}")
            if word in (UNK, "unk") or word in vocab:
                try:
                    vec = np.array([float(v) for v in values])
                except ValueError:
                    raise FormatError(f"{path}: line {lineno}: non-numeric value") from None
                if word == UNK or (word == "unk" and unk_vec is None):
                    unk_vec = vec
                if word in vocab:
                    idx = vocab[word]
                    table[idx] = vec
                    found[idx] = True
    if unk_vec is None:
        unk_vec = rng.normal(0.0, 0.1, size=dim)
    table[UNK_ID] = unk_vec
    missing = ~found
    missing[PAD_ID] = False
    table[missing] = unk_vec
    table[PAD_ID] = 0.0
    return table


def random_word_table(n_words: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    table = rng.normal(0.0, 0.1, size=(n_words, dim))
    table[PAD_ID] = 0.0
    return table


def init_embedding_params(params: ModelParams, cfg: Config, word_table: np.ndarray,
                          rng: np.random.Generator) -> None:
    def uni(*shape):
        return rng.uniform(-0.05, 0.05, size=shape)

    params.add("emb.word", word_table, trainable=False)
    char = uni(N_CHARS, cfg.char_dim)
    char[PAD_ID] = 0.0
    params.add("emb.char", char)
    prefixes = ["emb."] if cfg.share_char_filters else [f"emb.{k}." for k in SEQUENCE_KINDS]
    for prefix in prefixes:
        params.add(prefix + "char_filters", uni(cfg.char_width, cfg.char_dim, cfg.char_out))
        params.add(prefix + "char_bias", np.zeros(cfg.char_out))
    pos = uni(len(TAGS), cfg.pos_dim)
    pos[PAD_ID] = 0.0
    params.add("emb.pos", pos)


def _check_ids(name: str, ids, table: Tensor) -> None:
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise RangeError(f"{name} id out of range for table of {table.shape[0]} rows")


def embed_tokens(word_ids, chars: list[list[int]], pos_ids, match, fuzzy,
                 tables: EmbeddingTables) -> Tensor:
    """Embed n tokens at once; returns an n x e matrix."""
    _check_ids("word", word_ids, tables.word)
    _check_ids("pos", pos_ids, tables.pos)
    n = len(word_ids)
    width = max(max(len(c) for c in chars), 1)
    char_mat = np.zeros((n, width), dtype=np.int64)
    for i, c in enumerate(chars):
        char_mat[i, :len(c)] = c
    _check_ids("char", char_mat, tables.char)
    lengths = np.array([max(len(c), 1) for c in chars])

    words = gather_rows(tables.word, word_ids)
    char_rows = gather_rows(tables.char, char_mat.reshape(-1))
    char_vecs = char_cnn(reshape(char_rows, (n, width, tables.char.shape[1])),
                         tables.filters, tables.bias, lengths)
    tags = gather_rows(tables.pos, pos_ids)
    bits = Tensor(np.stack([np.asarray(match, float), np.asarray(fuzzy, float)], axis=1))
    return concat_last([words, char_vecs, tags, bits])


def embed_token(word_id: int, chars: list[int], pos_id: int, match_bit: int, fuzzy_bit: int,
                tables: EmbeddingTables) -> Tensor:
    """Single token form of :func:`embed_tokens`; returns a length-e vector."""
    out = embed_tokens([word_id], [chars], [pos_id], [match_bit], [fuzzy_bit], tables)
    return reshape(out, (out.shape[1],))


def embed_sequence(seq: Featurized, max_len: int, vocab: Vocab, tables: EmbeddingTables,
                   max_word_len: int) -> tuple[Tensor, int]:
    """Embed the valid tokens of ``seq`` and zero-pad to ``max_len`` rows."""
    tokens = seq.tokens[:max_len]
    n = len(tokens)
    if n == 0:
        return Tensor(np.zeros((max_len, tables.width))), 0
    out = embed_tokens(vocab.ids(tokens), [char_ids(t, max_word_len) for t in tokens],
                       seq.pos[:n], seq.match[:n], seq.fuzzy[:n], tables)
    return pad_rows(out, max_len), n


def embed_instance(inst: Instance, vocab: Vocab, params: ModelParams, cfg: Config) -> EmbeddedBatch:
    def tables(kind):
        return EmbeddingTables.from_params(params, kind, cfg.share_char_filters)

    text, t_len = embed_sequence(inst.text, cfg.t, vocab, tables("text"), cfg.max_word_len)
    question, q_len = embed_sequence(inst.question, cfg.q, vocab, tables("question"),
                                     cfg.max_word_len)
    c0, l0 = embed_sequence(inst.choices[0], cfg.c, vocab, tables("choice"), cfg.max_word_len)
    c1, l1 = embed_sequence(inst.choices[1], cfg.c, vocab, tables("choice"), cfg.max_word_len)
    return EmbeddedBatch(text, question, (c0, c1), t_len, q_len, (l0, l1))
