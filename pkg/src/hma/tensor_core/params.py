"""Named parameter store shared by the model, the optimizer and checkpoints."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from ..errors import ContractError
from .tensor import Tensor


class ModelParams:
    """Insertion-ordered mapping of stable names to parameter tensors.

    Frozen entries (e.g. pre-trained word vectors) are stored and
    checkpointed like the rest but never require a gradient and are skipped
    by the optimizer.
    """

    def __init__(self):
        self._tensors: dict[str, Tensor] = {}

    def add(self, name: str, data, trainable: bool = True) -> Tensor:
        if name in self._tensors:
            raise ContractError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(data, dtype=np.float64), requires_grad=trainable, name=name)
        self._tensors[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def items(self):
        return self._tensors.items()

    def names(self) -> list[str]:
        return list(self._tensors)

    def trainable(self) -> dict[str, Tensor]:
        return {k: t for k, t in self._tensors.items() if t.requires_grad}

    def zero_grad(self) -> None:
        for t in self._tensors.values():
            t.grad = np.zeros_like(t.data) if t.requires_grad else None

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self._tensors.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        """Overwrite values in place, checking that names and shapes agree."""
        missing = [k for k in self._tensors if k not in arrays]
        extra = [k for k in arrays if k not in self._tensors]
        if missing or extra:
            raise ContractError(f"parameter names differ: missing {missing}, unexpected {extra}")
        for k, t in self._tensors.items():
            if arrays[k].shape != t.shape:
                raise ContractError(
                    f"parameter {k!r}: checkpoint shape {arrays[k].shape} != model shape {t.shape}")
        for k, t in self._tensors.items():
            t.data = np.array(arrays[k], dtype=np.float64)
