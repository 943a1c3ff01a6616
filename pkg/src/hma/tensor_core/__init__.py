"""Float64 tensors with reverse-mode autodiff, Adam and checkpoint I/O."""

from .tensor import GradientTape, Tensor, backward, current_tape
from .ops import (
    LSTMWeights,
    add,
    add_bias,
    char_cnn,
    concat_last,
    conv1d_maxpool,
    elementwise,
    gather_rows,
    getitem,
    log,
    lstm_cell,
    matmul,
    mul,
    neg,
    pad_rows,
    reshape,
    row_softmax,
    scale,
    sigmoid,
    split_rows,
    stack_rows,
    sub,
    sum_all,
    tanh,
    transpose,
)
from .params import ModelParams
from .adam import AdamState, adam_step
from .checkpoint import load_arrays, load_params, save_arrays, save_params
