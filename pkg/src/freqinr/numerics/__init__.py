"""Tensor substrate: storage, reverse-mode differentiation, init and Adam."""

from .functional import concat, conv2d, linear, stack, take_rows, unfold
from .init import kaiming_uniform, make_rng
from .optim import Adam, AdamState, adam_step
from .tensor import (
    LOG_CLAMP,
    Tensor,
    absolute,
    add,
    as_tensor,
    clamp_min,
    div,
    exp,
    getitem,
    is_grad_enabled,
    log,
    matmul,
    mul,
    no_grad,
    power,
    record,
    reduce_max,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    sub,
    transpose,
)

__all__ = [
    "LOG_CLAMP", "Tensor", "Adam", "AdamState", "adam_step", "absolute", "add", "as_tensor",
    "clamp_min", "concat", "conv2d", "div", "exp", "getitem", "is_grad_enabled", "kaiming_uniform",
    "linear", "log", "make_rng", "matmul", "mul", "no_grad", "power", "record", "reduce_max",
    "reduce_mean", "reduce_sum", "relu", "reshape", "stack", "sub", "take_rows", "transpose", "unfold",
]
