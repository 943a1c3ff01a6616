"""Adam with bias-corrected moment estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from .params import ModelParams


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: ModelParams, state: AdamState) -> None:
    """Apply one Adam update to every trainable parameter, in place.

    Moment buffers are created as zeros the first time a parameter is seen.
    Parameters are rebound to new arrays, never mutated, so any array held
    elsewhere (e.g. a snapshot) keeps its value.
    """
    trainable = params.trainable()
    for name, t in trainable.items():
        if t.grad is None:
            raise ContractError(f"adam_step: parameter {name!r} has no gradient")
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for name, t in trainable.items():
        g = t.grad
        if name not in state.m:
            state.m[name] = np.zeros_like(t.data)
            state.v[name] = np.zeros_like(t.data)
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        state.m[name], state.v[name] = m, v
        m_hat = m / bc1
        v_hat = v / bc2
        t.data = t.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
