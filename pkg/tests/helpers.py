"""Finite-difference oracle and small shared builders for the test suite."""

import numpy as np

from hma.config import Config
from hma.data import Vocab, parse_example
from hma.model import HMAModel

FD_STEP = 1e-5
# magnitudes below this are compared on an absolute scale of tol * floor
REL_FLOOR = 1e-6

TINY = dict(t=12, q=6, c=4, h=8, e=26, word_dim=4, char_dim=4, char_out=12, pos_dim=8)


def tiny_config(**overrides) -> Config:
    return Config(**{**TINY, **overrides})


def numeric_grad(f, arr: np.ndarray, step: float = FD_STEP, indices=None) -> np.ndarray:
    """Central differences of scalar f() w.r.t. ``arr``, perturbed in place."""
    g = np.full(arr.shape, np.nan)
    for idx in (indices if indices is not None else np.ndindex(arr.shape)):
        old = arr[idx]
        arr[idx] = old + step
        fp = f()
        arr[idx] = old - step
        fm = f()
        arr[idx] = old
        g[idx] = (fp - fm) / (2 * step)
    return g


def max_rel_err(analytic, numeric) -> float:
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    ok = ~np.isnan(numeric)
    a, n = analytic[ok], numeric[ok]
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), REL_FLOOR)
    return float(np.max(np.abs(a - n) / denom))


EXAMPLE = {
    "id": "ex1",
    "text": "Yesterday I washed the dirty car in our driveway with soap and water.",
    "question": "What did they wash with the sponge?",
    "choices": ["the car", "a dirt bike"],
    "label": 1,
}


def tiny_model(example=EXAMPLE, **overrides):
    cfg = tiny_config(**overrides)
    inst = parse_example(example, 1, cfg.limits)
    vocab = Vocab(t for s in inst.sequences() for t in s.tokens)
    return HMAModel.initialize(cfg, vocab), inst
