"""Corpus ingestion, normalization and hand-crafted token features.

Corpus files are JSONL, one example per line::

    {"id": "...", "text": "...", "question": "...", "choices": ["...", "..."],
     "label": 0, "pos": {"text": [...], "question": [...], "choices": [[...], [...]]}}

``label`` and ``pos`` are optional.  Supplied tags must align with the
tokens produced by :func:`preprocess` and take precedence over the bundled
tagger.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import FormatError, SchemaError
from .pos import pos_tag, tag_ids_from_strings

PAD, UNK = "<pad>", "<unk>"
PAD_ID, UNK_ID = 0, 1

_NON_ALNUM = re.compile(r"[^a-z0-9]")

# text, question, choice maxima
DEFAULT_LIMITS = (300, 20, 10)


def preprocess(raw: str) -> list[str]:
    """Lower-case, split on whitespace, strip everything outside [a-z0-9]."""
    tokens = []
    for piece in raw.lower().split():
        tok = _NON_ALNUM.sub("", piece)
        if tok:
            tokens.append(tok)
    return tokens


def word_match(seq: Sequence[str], others: Iterable[str]) -> list[int]:
    pool = set(others)
    return [1 if tok in pool else 0 for tok in seq]


def _fuzzy_pair(a: str, b: str, min_len: int) -> bool:
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    return len(short) >= min_len and short in long_


def fuzzy_match(seq: Sequence[str], others: Iterable[str], min_len: int = 4) -> list[int]:
    """1 where a token is a substring of (or contains) some other token.

    The shorter string of the pair must have at least ``min_len`` characters,
    which keeps single letters and short function words from matching
    everything.
    """
    pool = sorted(set(others))
    return [1 if any(_fuzzy_pair(tok, o, min_len) for o in pool) else 0 for tok in seq]


@dataclass
class Featurized:
    """One token sequence with its aligned tag ids and match bits."""

    tokens: list[str]
    pos: list[int]
    match: list[int] = field(default_factory=list)
    fuzzy: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Instance:
    id: str
    text: Featurized
    question: Featurized
    choices: tuple[Featurized, Featurized]
    label: Optional[int] = None

    def sequences(self):
        return [self.text, self.question, *self.choices]


class Vocab:
    """Token/index map with 0 reserved for padding and 1 for unknown tokens."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos: list[str] = [PAD, UNK]
        self.stoi: dict[str, int] = {PAD: PAD_ID, UNK: UNK_ID}
        for t in tokens:
            self.add(t)

    def add(self, token: str) -> int:
        idx = self.stoi.get(token)
        if idx is None:
            idx = len(self.itos)
            self.itos.append(token)
            self.stoi[token] = idx
        return idx

    def __getitem__(self, token: str) -> int:
        return self.stoi.get(token, UNK_ID)

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.itos == other.itos

    def ids(self, tokens: Sequence[str]) -> list[int]:
        return [self[t] for t in tokens]

    def save(self, path) -> None:
        Path(path).write_text("\n".join(self.itos[2:]) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocab":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        return cls(t for t in lines if t)


# Character inventory: pad, unk, then the symbols that can survive preprocessing.
CHARS = "abcdefghijklmnopqrstuvwxyz0123456789'"
CHAR_ID = {ch: i + 2 for i, ch in enumerate(CHARS)}
N_CHARS = len(CHARS) + 2


def char_ids(token: str, max_len: int) -> list[int]:
    return [CHAR_ID.get(ch, UNK_ID) for ch in token[:max_len]]


def featurize(text: list[str], question: list[str], choices: Sequence[list[str]],
              pos: Optional[dict] = None, min_fuzzy_len: int = 4):
    """Build the four :class:`Featurized` sequences of one example.

    The text matches against question and both choices; the question and
    each choice match against the text.
    """
    pos = pos or {}
    text_others = set(question).union(*choices)
    text_tags = pos.get("text")
    q_tags = pos.get("question")
    c_tags = pos.get("choices") or [None, None]

    def build(tokens, tags, others):
        return Featurized(tokens, tags if tags is not None else pos_tag(tokens),
                          word_match(tokens, others), fuzzy_match(tokens, others, min_fuzzy_len))

    return (build(text, text_tags, text_others),
            build(question, q_tags, text),
            tuple(build(c, t, text) for c, t in zip(choices, c_tags)))


def _require(obj: dict, key: str, lineno: int):
    if key not in obj:
        raise SchemaError(f"line {lineno}: missing field {key!r}")
    return obj[key]


def _supplied_tags(obj: dict, tokens: dict, limits, lineno: int) -> dict:
    raw = obj.get("pos")
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise SchemaError(f"line {lineno}: 'pos' must be an object")
    t_max, q_max, c_max = limits
    out: dict = {}

    def convert(tags, toks, limit, where):
        if not isinstance(tags, list) or len(tags) != len(toks):
            n = len(tags) if isinstance(tags, list) else "non-list"
            raise SchemaError(
                f"line {lineno}: pos.{where} has {n} tags for {len(toks)} tokens")
        return tag_ids_from_strings(tags[:limit], where=f"line {lineno} pos.{where}")

    if "text" in raw:
        out["text"] = convert(raw["text"], tokens["text"], t_max, "text")
    if "question" in raw:
        out["question"] = convert(raw["question"], tokens["question"], q_max, "question")
    if "choices" in raw:
        cs = raw["choices"]
        if not isinstance(cs, list) or len(cs) != 2:
            raise SchemaError(f"line {lineno}: pos.choices must hold exactly 2 lists")
        out["choices"] = [convert(cs[k], tokens["choices"][k], c_max, f"choices[{k}]")
                          for k in range(2)]
    return out


def parse_example(obj, lineno: int, limits=DEFAULT_LIMITS, min_fuzzy_len: int = 4) -> Instance:
    if not isinstance(obj, dict):
        raise SchemaError(f"line {lineno}: expected a JSON object")
    t_max, q_max, c_max = limits
    ex_id = str(_require(obj, "id", lineno))
    text = _require(obj, "text", lineno)
    question = _require(obj, "question", lineno)
    choices = _require(obj, "choices", lineno)
    if not isinstance(choices, list) or len(choices) != 2:
        n = len(choices) if isinstance(choices, list) else "non-list"
        raise SchemaError(f"line {lineno}: 'choices' must hold exactly 2 strings, got {n}")
    for name, val in (("text", text), ("question", question),
                      ("choices[0]", choices[0]), ("choices[1]", choices[1])):
        if not isinstance(val, str):
            raise SchemaError(f"line {lineno}: field {name!r} must be a string")
    label = obj.get("label")
    if label is not None and label not in (0, 1):
        raise SchemaError(f"line {lineno}: 'label' must be 0 or 1, got {label!r}")
    if label is not None:
        label = int(label)

    full = {"text": preprocess(text), "question": preprocess(question),
            "choices": [preprocess(c) for c in choices]}
    tags = _supplied_tags(obj, full, limits, lineno)
    t_feat, q_feat, c_feats = featurize(
        full["text"][:t_max], full["question"][:q_max],
        [c[:c_max] for c in full["choices"]], tags, min_fuzzy_len)
    return Instance(ex_id, t_feat, q_feat, c_feats, label)


def read_corpus(path, limits=DEFAULT_LIMITS, min_fuzzy_len: int = 4) -> list[Instance]:
    instances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: line {lineno}: malformed JSON ({exc.msg})") from None
            instances.append(parse_example(obj, lineno, limits, min_fuzzy_len))
    return instances


def load_corpus(path, vocab_mode: str = "build", vocab: Optional[Vocab] = None,
                limits=DEFAULT_LIMITS, min_fuzzy_len: int = 4) -> tuple[list[Instance], Vocab]:
    """Read, featurize and truncate a corpus file.

    ``build`` adds every token to ``vocab`` (a fresh one when omitted);
    ``frozen`` leaves the vocabulary untouched so unseen tokens map to unk.
    """
    if vocab_mode not in ("build", "frozen"):
        raise ValueError(f"vocab_mode must be 'build' or 'frozen', not {vocab_mode!r}")
    if vocab_mode == "frozen" and vocab is None:
        raise ValueError("frozen vocab_mode needs an existing vocab")
    instances = read_corpus(path, limits, min_fuzzy_len)
    vocab = vocab if vocab is not None else Vocab()
    if vocab_mode == "build":
        for inst in instances:
            for seq in inst.sequences():
                for tok in seq.tokens:
                    vocab.add(tok)
    return instances, vocab
