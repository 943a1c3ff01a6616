"""Differentiable operations on :class:`Tensor`.

Every op computes its forward value eagerly with numpy and registers a
backward closure on the active tape.  Shapes are checked up front and
mismatches raise :class:`DimensionError` naming both shapes.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ContractError, DimensionError, RangeError
from .tensor import Tensor, record

Scalar = Union[int, float]

# logit assigned to masked attention keys
MASK_LOGIT = -1e30


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# --------------------------------------------------------------------------
# linear algebra
# --------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    out = Tensor(a.data @ b.data)

    def backward(g):
        return (g @ b.data.T if a.requires_grad else None,
                a.data.T @ g if b.requires_grad else None)

    record("matmul", (a, b), (out,), backward)
    return out


def transpose(x: Tensor) -> Tensor:
    if x.ndim != 2:
        raise DimensionError(f"transpose: expected a matrix, got shape {x.shape}")
    out = Tensor(x.data.T)
    record("transpose", (x,), (out,), lambda g: (g.T,))
    return out


# --------------------------------------------------------------------------
# elementwise
# --------------------------------------------------------------------------

def add(x: Tensor, y: Union[Tensor, Scalar]) -> Tensor:
    if not isinstance(y, Tensor):
        out = Tensor(x.data + float(y))
        record("add", (x,), (out,), lambda g: (g,))
        return out
    _same_shape("add", x, y)
    out = Tensor(x.data + y.data)
    record("add", (x, y), (out,), lambda g: (g, g))
    return out


def sub(x: Union[Tensor, Scalar], y: Union[Tensor, Scalar]) -> Tensor:
    if not isinstance(x, Tensor):
        out = Tensor(float(x) - y.data)
        record("sub", (y,), (out,), lambda g: (-g,))
        return out
    if not isinstance(y, Tensor):
        out = Tensor(x.data - float(y))
        record("sub", (x,), (out,), lambda g: (g,))
        return out
    _same_shape("sub", x, y)
    out = Tensor(x.data - y.data)
    record("sub", (x, y), (out,), lambda g: (g, -g))
    return out


def mul(x: Tensor, y: Union[Tensor, Scalar]) -> Tensor:
    if not isinstance(y, Tensor):
        return scale(x, y)
    _same_shape("mul", x, y)
    out = Tensor(x.data * y.data)

    def backward(g):
        return (g * y.data if x.requires_grad else None,
                g * x.data if y.requires_grad else None)

    record("mul", (x, y), (out,), backward)
    return out


def scale(x: Tensor, s: Scalar) -> Tensor:
    s = float(s)
    out = Tensor(x.data * s)
    record("scale", (x,), (out,), lambda g: (g * s,))
    return out


def neg(x: Tensor) -> Tensor:
    return scale(x, -1.0)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    out = Tensor(y)
    record("tanh", (x,), (out,), lambda g: (g * (1.0 - y * y),))
    return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x: Tensor) -> Tensor:
    y = _sigmoid(x.data)
    out = Tensor(y)
    record("sigmoid", (x,), (out,), lambda g: (g * y * (1.0 - y),))
    return out


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0):
        raise ContractError("log: input must be strictly positive")
    out = Tensor(np.log(x.data))
    record("log", (x,), (out,), lambda g: (g / x.data,))
    return out


_UNARY = {"tanh": tanh, "sigmoid": sigmoid}
_BINARY = {"add": add, "sub": sub, "mul": mul}


def elementwise(kind: str, x: Tensor, y: Union[Tensor, Scalar, None] = None) -> Tensor:
    """Dispatch by name: add, sub, mul, scale (binary or scalar) or tanh, sigmoid."""
    if kind in _UNARY:
        return _UNARY[kind](x)
    if kind == "scale":
        return scale(x, y)
    if kind in _BINARY:
        if y is None:
            raise ContractError(f"elementwise {kind!r} needs a second operand")
        return _BINARY[kind](x, y)
    raise ContractError(f"unknown elementwise kind {kind!r}")


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """Add a length-n vector to every row of an m x n matrix."""
    if x.ndim != 2 or b.shape != (x.shape[1],):
        raise DimensionError(f"add_bias: cannot add bias {b.shape} to {x.shape}")
    out = Tensor(x.data + b.data)

    def backward(g):
        return (g, g.sum(axis=0) if b.requires_grad else None)

    record("add_bias", (x, b), (out,), backward)
    return out


# --------------------------------------------------------------------------
# reductions, softmax
# --------------------------------------------------------------------------

def sum_all(x: Tensor) -> Tensor:
    out = Tensor(np.sum(x.data))
    record("sum", (x,), (out,), lambda g: (np.full_like(x.data, float(g)),))
    return out


def row_softmax(x: Tensor, valid: Optional[int] = None) -> Tensor:
    """Softmax along each row of a matrix.

    With ``valid`` given, columns ``valid:`` are masked keys: their logits
    are replaced by ``MASK_LOGIT`` so they get exactly zero probability.  A
    row with no valid key at all yields zeros.
    """
    if x.ndim != 2:
        raise DimensionError(f"row_softmax: expected a matrix, got shape {x.shape}")
    n = x.shape[1]
    if valid is not None and not 0 <= valid <= n:
        raise RangeError(f"row_softmax: valid={valid} outside [0, {n}]")
    z = x.data
    if valid is not None and valid < n:
        z = z.copy()
        z[:, valid:] = MASK_LOGIT
    if valid == 0:
        y = np.zeros_like(z)
    else:
        e = np.exp(z - z.max(axis=1, keepdims=True))
        y = e / e.sum(axis=1, keepdims=True)
    out = Tensor(y)

    def backward(g):
        return (y * (g - np.sum(g * y, axis=1, keepdims=True)),)

    record("row_softmax", (x,), (out,), backward)
    return out


# --------------------------------------------------------------------------
# structural
# --------------------------------------------------------------------------

def concat_last(xs: Sequence[Tensor]) -> Tensor:
    if not xs:
        raise ContractError("concat_last needs at least one tensor")
    lead = xs[0].shape[:-1]
    for t in xs[1:]:
        if t.shape[:-1] != lead:
            raise DimensionError(
                f"concat_last: leading dims differ {xs[0].shape} vs {t.shape}")
    if len(xs) == 1:
        return xs[0]
    out = Tensor(np.concatenate([t.data for t in xs], axis=-1))
    bounds = np.cumsum([0] + [t.shape[-1] for t in xs])

    def backward(g):
        return tuple(g[..., bounds[i]:bounds[i + 1]] for i in range(len(xs)))

    record("concat_last", tuple(xs), (out,), backward)
    return out


def getitem(x: Tensor, index) -> Tensor:
    """Basic (slice / integer) indexing; advanced indexing is not supported."""
    out = Tensor(np.array(x.data[index]))

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[index] = g
        return (gx,)

    record("getitem", (x,), (out,), backward)
    return out


def stack_rows(rows: Sequence[Tensor], total: Optional[int] = None) -> Tensor:
    """Stack 1 x d (or length-d) rows into a ``total`` x d matrix, zero padded."""
    if not rows:
        raise ContractError("stack_rows needs at least one row")
    d = rows[0].size
    total = len(rows) if total is None else total
    if total < len(rows):
        raise RangeError(f"stack_rows: {len(rows)} rows do not fit in {total}")
    data = np.zeros((total, d))
    for i, r in enumerate(rows):
        if r.size != d:
            raise DimensionError(f"stack_rows: row {i} has shape {r.shape}, expected width {d}")
        data[i] = r.data.reshape(-1)
    out = Tensor(data)

    def backward(g):
        return tuple(g[i].reshape(r.shape) for i, r in enumerate(rows))

    record("stack_rows", tuple(rows), (out,), backward)
    return out


def split_rows(x: Tensor, count: int) -> list[Tensor]:
    """The first ``count`` rows of a matrix as separate 1 x d tensors."""
    if x.ndim != 2 or count > x.shape[0]:
        raise RangeError(f"split_rows: cannot take {count} rows from shape {x.shape}")
    outs = [Tensor(x.data[i:i + 1].copy()) for i in range(count)]

    def backward(*gs):
        gx = np.zeros_like(x.data)
        gx[:count] = np.concatenate(gs, axis=0)
        return (gx,)

    if count:
        record("split_rows", (x,), tuple(outs), backward)
    return outs


def pad_rows(x: Tensor, total: int) -> Tensor:
    """Append zero rows to a matrix until it has ``total`` rows."""
    n = x.shape[0]
    if total < n:
        raise RangeError(f"pad_rows: {n} rows do not fit in {total}")
    if total == n:
        return x
    data = np.zeros((total,) + x.shape[1:])
    data[:n] = x.data
    out = Tensor(data)
    record("pad_rows", (x,), (out,), lambda g: (g[:n],))
    return out


def gather_rows(table: Tensor, ids, padding_idx: Optional[int] = 0) -> Tensor:
    """Row lookup ``table[ids]``; the padding row never receives gradient."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise RangeError(f"gather_rows: id out of range for table with {table.shape[0]} rows")
    out = Tensor(table.data[ids])

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids, g)
        if padding_idx is not None:
            gt[padding_idx] = 0.0
        return (gt,)

    record("gather_rows", (table,), (out,), backward)
    return out


# --------------------------------------------------------------------------
# character convolution with max-over-time pooling
# --------------------------------------------------------------------------

def char_cnn(chars: Tensor, filters: Tensor, bias: Tensor, valid_lens) -> Tensor:
    """Batched 1-D convolution plus max-over-time pooling.

    ``chars`` is N x L x d_in, ``filters`` is w x d_in x d_out, and
    ``valid_lens[n]`` counts the real rows of item n.  Only windows lying
    fully inside the valid rows compete in the max; items shorter than w
    are zero padded to exactly one window.  Rows past the valid length are
    ignored.  Returns N x d_out.
    """
    if chars.ndim != 3 or filters.ndim != 3 or chars.shape[2] != filters.shape[1]:
        raise DimensionError(f"char_cnn: chars {chars.shape} incompatible with filters {filters.shape}")
    w, d_in, d_out = filters.shape
    if bias.shape != (d_out,):
        raise DimensionError(f"char_cnn: bias {bias.shape} does not match filters {filters.shape}")
    n_items, length, _ = chars.shape
    valid_lens = np.asarray(valid_lens, dtype=np.int64).reshape(-1)
    if valid_lens.shape != (n_items,):
        raise DimensionError(f"char_cnn: {valid_lens.shape[0]} lengths for {n_items} items")
    if np.any(valid_lens > length):
        raise RangeError(f"char_cnn: valid length {valid_lens.max()} exceeds {length} rows")
    if np.any(valid_lens < 1):
        raise ContractError("char_cnn: every valid length must be >= 1")

    padded_len = max(length, w)
    x = np.zeros((n_items, padded_len, d_in))
    x[:, :length] = chars.data
    row_ok = np.arange(padded_len)[None, :] < valid_lens[:, None]
    x *= row_ok[:, :, None]

    # windows: N x S x (w*d_in)
    win = sliding_window_view(x, w, axis=1)          # N x S x d_in x w
    win = np.ascontiguousarray(win.transpose(0, 1, 3, 2)).reshape(n_items, -1, w * d_in)
    n_windows = win.shape[1]
    flat_f = filters.data.reshape(w * d_in, d_out)
    conv = win @ flat_f + bias.data                   # N x S x d_out
    last_start = np.maximum(valid_lens - w + 1, 1)
    win_ok = np.arange(n_windows)[None, :] < last_start[:, None]
    conv = np.where(win_ok[:, :, None], conv, -np.inf)
    arg = np.argmax(conv, axis=1)                     # first index on ties
    out = Tensor(np.take_along_axis(conv, arg[:, None, :], axis=1)[:, 0, :])

    def backward(g):
        g_chars = g_filters = g_bias = None
        if filters.requires_grad:
            sel = np.take_along_axis(win, arg[:, :, None], axis=1)  # N x d_out x (w*d_in)
            g_filters = np.einsum("nok,no->ko", sel, g).reshape(w, d_in, d_out)
        if bias.requires_grad:
            g_bias = g.sum(axis=0)
        if chars.requires_grad:
            gx = np.zeros((n_items, padded_len, d_in))
            items = np.broadcast_to(np.arange(n_items)[:, None], arg.shape)
            for k in range(w):
                contrib = g[:, :, None] * filters.data[k].T[None, :, :]  # N x d_out x d_in
                np.add.at(gx, (items, arg + k), contrib)
            gx *= row_ok[:, :, None]
            g_chars = gx[:, :length]
        return g_chars, g_filters, g_bias

    record("char_cnn", (chars, filters, bias), (out,), backward)
    return out


def conv1d_maxpool(chars: Tensor, filters: Tensor, bias: Tensor, valid_len: int) -> Tensor:
    """Single-sequence form of :func:`char_cnn`: L x d_in -> d_out."""
    if chars.ndim != 2:
        raise DimensionError(f"conv1d_maxpool: expected L x d_in, got {chars.shape}")
    if valid_len > chars.shape[0]:
        raise RangeError(f"conv1d_maxpool: valid_len {valid_len} > {chars.shape[0]} rows")
    batched = reshape(chars, (1,) + chars.shape)
    return reshape(char_cnn(batched, filters, bias, [valid_len]), (filters.shape[2],))


def reshape(x: Tensor, shape: tuple) -> Tensor:
    out = Tensor(x.data.reshape(shape))
    record("reshape", (x,), (out,), lambda g: (g.reshape(x.shape),))
    return out


# --------------------------------------------------------------------------
# LSTM cell
# --------------------------------------------------------------------------

class LSTMWeights(NamedTuple):
    """Gate blocks are laid out along the last axis in order i, f, g, o."""

    w_x: Tensor   # d_in x 4H
    w_h: Tensor   # H x 4H
    b: Tensor     # 4H


def lstm_cell(x: Tensor, h_prev: Tensor, c_prev: Tensor, weights: LSTMWeights):
    """One LSTM step on row vectors (1 x d_in); returns ``(h_t, c_t)``."""
    w_x, w_h, b = weights
    hidden = w_h.shape[0]
    if (x.ndim != 2 or w_x.shape != (x.shape[1], 4 * hidden)
            or w_h.shape != (hidden, 4 * hidden) or b.shape != (4 * hidden,)):
        raise DimensionError(
            f"lstm_cell: x {x.shape}, w_x {w_x.shape}, w_h {w_h.shape}, b {b.shape} are inconsistent")
    if h_prev.shape != (x.shape[0], hidden) or c_prev.shape != h_prev.shape:
        raise DimensionError(
            f"lstm_cell: state shapes {h_prev.shape}, {c_prev.shape} do not match hidden size {hidden}")

    z = x.data @ w_x.data + h_prev.data @ w_h.data + b.data
    H = hidden
    i = _sigmoid(z[:, :H])
    f = _sigmoid(z[:, H:2 * H])
    gg = np.tanh(z[:, 2 * H:3 * H])
    o = _sigmoid(z[:, 3 * H:])
    c = f * c_prev.data + i * gg
    tc = np.tanh(c)
    h = o * tc
    h_out, c_out = Tensor(h), Tensor(c)

    def backward(gh, gc):
        dc = gc + gh * o * (1.0 - tc * tc)
        dz = np.concatenate([
            dc * gg * i * (1.0 - i),
            dc * c_prev.data * f * (1.0 - f),
            dc * i * (1.0 - gg * gg),
            gh * tc * o * (1.0 - o),
        ], axis=1)
        return (
            dz @ w_x.data.T if x.requires_grad else None,
            dz @ w_h.data.T if h_prev.requires_grad else None,
            dc * f if c_prev.requires_grad else None,
            x.data.T @ dz if w_x.requires_grad else None,
            h_prev.data.T @ dz if w_h.requires_grad else None,
            dz.sum(axis=0) if b.requires_grad else None,
        )

    record("lstm_cell", (x, h_prev, c_prev, w_x, w_h, b), (h_out, c_out), backward)
    return h_out, c_out


# operator sugar
Tensor.__add__ = add
Tensor.__sub__ = sub
Tensor.__rsub__ = lambda self, other: sub(other, self)
Tensor.__mul__ = mul
Tensor.__rmul__ = lambda self, other: mul(self, other)
Tensor.__neg__ = neg
Tensor.__matmul__ = matmul
Tensor.__getitem__ = getitem
Tensor.T = property(transpose)
Tensor.sum = sum_all
