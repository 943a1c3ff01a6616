"""Binary checkpoint format.

Layout: the 4-byte magic ``HMA1`` followed, for each parameter, by
``u32 name_len | name (utf-8) | u32 rank | u64 dims[rank] | f64 values``,
all little-endian, values in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .params import ModelParams

MAGIC = b"HMA1"


def save_arrays(path, arrays: dict[str, np.ndarray]) -> None:
    chunks = [MAGIC]
    for name, arr in arrays.items():
        raw = name.encode("utf-8")
        arr = np.asarray(arr, dtype="<f8")
        chunks.append(struct.pack("<I", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(arr.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_arrays(path) -> dict[str, np.ndarray]:
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise FormatError(f"{path}: not a checkpoint (bad magic {buf[:4]!r})")
    pos = 4
    out: dict[str, np.ndarray] = {}

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(buf):
            raise FormatError(f"{path}: truncated checkpoint at byte {pos}")
        chunk = buf[pos:pos + n]
        pos += n
        return chunk

    while pos < len(buf):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        dims = struct.unpack(f"<{rank}Q", take(8 * rank))
        count = int(np.prod(dims)) if rank else 1
        values = np.frombuffer(take(8 * count), dtype="<f8")
        out[name] = values.astype(np.float64).reshape(dims)
    return out


def save_params(path, params: ModelParams) -> None:
    save_arrays(path, {k: t.data for k, t in params.items()})


def load_params(path, params: ModelParams) -> None:
    params.load_arrays(load_arrays(path))
