"""Small generated corpora for smoke tests and overfitting checks."""

from __future__ import annotations

import json

import numpy as np

_FILLER = ("went store bought milk walked home opened door sat chair looked window "
           "called friend made dinner cooked pasta cleaned kitchen read book").split()
_OBJECTS = ("soap sponge bucket towel hose brush ladder hammer bread apple shirt "
            "ticket candle pillow basket napkin").split()
_QUESTIONS = ("what did they use", "what was needed", "which item did they take",
              "what did she bring")


def separable_examples(n: int = 32, seed: int = 0, text_len: int = 10) -> list[dict]:
    """Examples whose correct choice appears verbatim in the text and the wrong one never does."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        right, wrong = rng.choice(_OBJECTS, size=2, replace=False)
        words = list(rng.choice(_FILLER, size=text_len - 1))
        words.insert(int(rng.integers(0, text_len)), right)
        label = i % 2
        choices = [str(right), str(wrong)] if label == 0 else [str(wrong), str(right)]
        out.append({"id": f"syn{i:03d}", "text": " ".join(words),
                    "question": _QUESTIONS[i % len(_QUESTIONS)], "choices": choices,
                    "label": label})
    return out


def write_jsonl(path, examples) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex) + "\n")


def write_vectors(path, words, dim: int, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    with open(path, "w", encoding="utf-8") as fh:
        for w in words:
            fh.write(w + " " + " ".join(f"{x:.6f}" for x in rng.normal(0, 0.5, dim)) + "\n")
