"""Dense float64 tensors and a define-by-run gradient tape.

Ops executed while a :class:`GradientTape` is active append a record to it
whenever at least one input requires a gradient.  ``tape.backward(loss)``
replays the records in exact reverse order and *adds* each contribution
into the ``grad`` buffers, so a tensor used twice collects both paths.

Outside any tape nothing is recorded, which is what evaluation uses.
"""

from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import ContractError

_tape_ids = itertools.count(1)
_live_tapes: "weakref.WeakValueDictionary[int, GradientTape]" = weakref.WeakValueDictionary()
_active: list["GradientTape"] = []


class Tensor:
    """An N-dimensional float64 array with an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "name", "tape_id", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self.tape_id: Optional[int] = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __len__(self) -> int:
        return self.data.shape[0]

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


# Backward closures receive one gradient array per output and return one
# gradient (or None) per input.
BackwardFn = Callable[..., Sequence[Optional[np.ndarray]]]


@dataclass
class OpRecord:
    name: str
    inputs: tuple
    outputs: tuple
    backward: BackwardFn


class GradientTape:
    """Ordered record of differentiable ops for one forward pass."""

    def __init__(self):
        self.id = next(_tape_ids)
        self.records: list[OpRecord] = []
        _live_tapes[self.id] = self

    def __enter__(self) -> "GradientTape":
        _active.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _active.remove(self)

    def __len__(self) -> int:
        return len(self.records)

    def record(self, name: str, inputs: tuple, outputs: tuple, backward: BackwardFn) -> None:
        for out in outputs:
            out.requires_grad = True
            out.tape_id = self.id
        self.records.append(OpRecord(name, inputs, outputs, backward))

    def backward(self, loss: Tensor) -> None:
        if loss.data.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        if loss.tape_id != self.id:
            raise ContractError("loss tensor was not produced on this tape")
        _accumulate(loss, np.ones_like(loss.data))
        for rec in reversed(self.records):
            out_grads = [o.grad for o in rec.outputs]
            if all(g is None for g in out_grads):
                continue
            out_grads = [np.zeros_like(o.data) if g is None else g
                         for o, g in zip(rec.outputs, out_grads)]
            in_grads = rec.backward(*out_grads)
            for inp, g in zip(rec.inputs, in_grads):
                if g is not None and inp.requires_grad:
                    _accumulate(inp, g)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    # never in place: g may alias another buffer
    t.grad = g if t.grad is None else t.grad + g


def current_tape() -> Optional[GradientTape]:
    return _active[-1] if _active else None


def record(name: str, inputs: tuple, outputs: tuple, backward: BackwardFn) -> None:
    """Register an executed op on the active tape if any input needs a gradient."""
    if not _active:
        return
    if not any(t.requires_grad for t in inputs):
        return
    _active[-1].record(name, inputs, outputs, backward)


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every tensor reachable from ``loss``."""
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape = _live_tapes.get(loss.tape_id) if loss.tape_id is not None else None
    if tape is None:
        raise ContractError("loss is not on an active gradient tape")
    tape.backward(loss)


def constant(data) -> Tensor:
    return Tensor(data)
