"""Composite differentiable ops: concatenation, gathers, unfolding, convolution."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import ContractError
from .tensor import Tensor, as_tensor, matmul, record


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    """Concatenate tensors (or constant arrays) along ``axis``."""
    if not tensors:
        raise ContractError("concat of an empty list")
    dtype = next((t.dtype for t in tensors if isinstance(t, Tensor)), None)
    ts = [as_tensor(t, dtype=dtype) for t in tensors]
    ndim = ts[0].ndim
    ax = axis % ndim
    for t in ts[1:]:
        if t.ndim != ndim or any(t.shape[i] != ts[0].shape[i] for i in range(ndim) if i != ax):
            raise ContractError(f"concat: shapes {[t.shape for t in ts]} do not conform on axis {axis}")
    sizes = [t.shape[ax] for t in ts]
    bounds = np.cumsum([0] + sizes)
    out = np.concatenate([t.data for t in ts], axis=ax)

    def backward(g):
        return tuple(
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=ax) for i in range(len(ts))
        )

    return record(out, ts, backward)


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    expanded = [t.reshape(t.shape[:axis % (t.ndim + 1)] + (1,) + t.shape[axis % (t.ndim + 1):]) for t in ts]
    return concat(expanded, axis=axis)


def _scatter_rows(g: np.ndarray, index: np.ndarray, n: int) -> np.ndarray:
    """Sum rows of ``g`` into ``n`` rows by ``index`` (sorted segment reduce)."""
    out = np.zeros((n,) + g.shape[1:], dtype=g.dtype)
    if index.size == 0:
        return out
    order = np.argsort(index, kind="stable")
    sorted_idx = index[order]
    starts = np.flatnonzero(np.r_[True, sorted_idx[1:] != sorted_idx[:-1]])
    out[sorted_idx[starts]] = np.add.reduceat(g[order], starts, axis=0)
    return out


def take_rows(x: Tensor, index: np.ndarray) -> Tensor:
    """Gather rows ``x[index]`` of a 2-D tensor; backward scatter-adds."""
    x = as_tensor(x)
    if x.ndim != 2:
        raise ContractError("take_rows expects a 2-D tensor")
    index = np.asarray(index, dtype=np.intp).ravel()
    n = x.shape[0]
    if index.size and (index.min() < 0 or index.max() >= n):
        raise ContractError("take_rows: index out of range")
    return record(x.data[index], (x,), lambda g: (_scatter_rows(g, index, n),))


def _unfold_array(x: np.ndarray, k: int, dilation: int) -> np.ndarray:
    b, h, w, c = x.shape
    pad = dilation * (k - 1) // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    cols = np.empty((b, h, w, k * k, c), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, :, :, i * k + j, :] = xp[:, i * dilation : i * dilation + h, j * dilation : j * dilation + w, :]
    return cols.reshape(b, h, w, k * k * c)


def _fold_array(g: np.ndarray, shape: tuple[int, int, int, int], k: int, dilation: int) -> np.ndarray:
    b, h, w, c = shape
    pad = dilation * (k - 1) // 2
    g = g.reshape(b, h, w, k * k, c)
    out = np.zeros((b, h + 2 * pad, w + 2 * pad, c), dtype=g.dtype)
    for i in range(k):
        for j in range(k):
            out[:, i * dilation : i * dilation + h, j * dilation : j * dilation + w, :] += g[:, :, :, i * k + j, :]
    return out[:, pad : pad + h, pad : pad + w, :]


def unfold(x: Tensor, kernel: int, dilation: int = 1) -> Tensor:
    """Zero-padded ``kernel x kernel`` neighbourhood gather on a (B, H, W, C) map.

    Output is (B, H, W, kernel*kernel*C), neighbours in row-major order with
    channels innermost.
    """
    x = as_tensor(x)
    if x.ndim != 4:
        raise ContractError("unfold expects a (B, H, W, C) tensor")
    if kernel < 1 or kernel % 2 == 0:
        raise ContractError("unfold kernel must be a positive odd integer")
    shape = x.shape
    out = _unfold_array(x.data, kernel, dilation)
    return record(out, (x,), lambda g: (_fold_array(g, shape, kernel, dilation),))


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None, dilation: int = 1) -> Tensor:
    """Stride-1 'same' convolution.

    ``x`` is (B, H, W, Cin), ``weight`` is (k, k, Cin, Cout); zero padding of
    ``dilation * (k - 1) / 2`` keeps the spatial size.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 4 or weight.ndim != 4:
        raise ContractError("conv2d expects x (B,H,W,Cin) and weight (k,k,Cin,Cout)")
    k, k2, cin, cout = weight.shape
    if k != k2 or k % 2 == 0:
        raise ContractError("conv2d kernel must be square with odd size")
    if x.shape[-1] != cin:
        raise ContractError(f"conv2d: input has {x.shape[-1]} channels, kernel expects {cin}")
    b, h, w, _ = x.shape
    if k == 1:
        cols = x.reshape(b * h * w, cin)
    else:
        cols = unfold(x, k, dilation).reshape(b * h * w, k * k * cin)
    out = matmul(cols, weight.reshape(k * k * cin, cout))
    if bias is not None:
        out = out + bias
    return out.reshape(b, h, w, cout)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    out = matmul(x, weight)
    return out if bias is None else out + bias
