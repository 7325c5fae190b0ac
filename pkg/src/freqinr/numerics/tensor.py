"""Dense tensors with a dynamic reverse-mode tape.

Every operation on a :class:`Tensor` that requires a gradient records its
parents and a backward closure. :meth:`Tensor.backward` walks the recorded
graph once in reverse topological order, deposits gradients on leaf tensors
and then drops the graph.
"""

from __future__ import annotations

import contextlib
import threading
from typing import Callable, Iterator, Sequence

import numpy as np

from ..errors import ContractError, DomainError, NonFiniteError

LOG_CLAMP = 1e-8

_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable tape recording inside the block (per thread)."""
    prev = is_grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


def _check_finite(data: np.ndarray) -> None:
    # a finite sum implies every element is finite (barring overflow)
    if data.size and not np.isfinite(data.sum(dtype=np.float64)):
        raise NonFiniteError("operation produced non-finite values")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(a: tuple[int, ...], b: tuple[int, ...], op: str) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a, b)
    except ValueError:
        raise ContractError(f"{op}: shapes {a} and {b} do not conform") from None


class Tensor:
    """A dense float array plus an optional gradient slot."""

    __array_priority__ = 1000

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, *, dtype=None, name: str | None = None):
        arr = np.array(data, dtype=dtype, copy=True)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        _check_finite(arr)
        self.data: np.ndarray = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None

    @classmethod
    def _wrap(cls, data: np.ndarray) -> "Tensor":
        t = cls.__new__(cls)
        t.data = data
        t.grad = None
        t.requires_grad = False
        t.name = None
        t._parents = ()
        t._backward = None
        return t

    # -- basic properties -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def __len__(self) -> int:
        return len(self.data)

    # -- backward -----------------------------------------------------------

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Propagate ``grad`` (default 1 for scalars) to every leaf tensor.

        Gradients accumulate into ``leaf.grad``. The recorded graph is
        released afterwards, so a second call on the same output is an error.
        """
        if not self.requires_grad:
            raise ContractError("backward() on a tensor that does not require grad")
        if grad is None:
            if self.size != 1:
                raise ContractError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=self.dtype)
        if grad.shape != self.shape:
            raise ContractError(f"gradient shape {grad.shape} != tensor shape {self.shape}")

        order = _topological_order(self)
        pending: dict[int, np.ndarray] = {id(self): grad}
        for node in reversed(order):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + pg
                else:
                    pending[key] = pg
            node._parents = ()
            node._backward = None

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other) -> "Tensor":
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other) -> "Tensor":
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        return div(self, other)

    def __rtruediv__(self, other) -> "Tensor":
        return div(other, self)

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __pow__(self, exponent: float) -> "Tensor":
        return power(self, exponent)

    def __matmul__(self, other) -> "Tensor":
        return matmul(self, other)

    def __rmatmul__(self, other) -> "Tensor":
        return matmul(other, self)

    def __getitem__(self, index) -> "Tensor":
        return getitem(self, index)

    def abs(self) -> "Tensor":
        return absolute(self)

    def log(self, clamp: float | None = LOG_CLAMP) -> "Tensor":
        return log(self, clamp)

    def relu(self) -> "Tensor":
        return relu(self)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return reduce_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return reduce_mean(self, axis, keepdims)

    def max(self, axis=None, keepdims: bool = False) -> "Tensor":
        return reduce_max(self, axis, keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def clamp_min(self, lo: float) -> "Tensor":
        return clamp_min(self, lo)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    return order


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor._wrap(np.asarray(x, dtype=dtype))


def record(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    """Wrap ``data`` as the output of an op with the given parents.

    ``backward(grad)`` must return one gradient (or None) per parent. Nothing
    is recorded when grad mode is off or no parent requires a gradient.
    """
    _check_finite(data)
    out = Tensor._wrap(data)
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _coerce_pair(a, b) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        b = Tensor._wrap(np.asarray(b, dtype=a.dtype))
    elif isinstance(b, Tensor) and not isinstance(a, Tensor):
        a = Tensor._wrap(np.asarray(a, dtype=b.dtype))
    return as_tensor(a), as_tensor(b)


# -- elementwise ---------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _coerce_pair(a, b)
    _broadcast_shape(a.shape, b.shape, "add")
    sa, sb = a.shape, b.shape
    return record(a.data + b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = _coerce_pair(a, b)
    _broadcast_shape(a.shape, b.shape, "sub")
    sa, sb = a.shape, b.shape
    return record(a.data - b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = _coerce_pair(a, b)
    _broadcast_shape(a.shape, b.shape, "mul")
    ad, bd = a.data, b.data

    def backward(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return record(ad * bd, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _coerce_pair(a, b)
    _broadcast_shape(a.shape, b.shape, "div")
    ad, bd = a.data, b.data
    if np.any(bd == 0):
        raise DomainError("division by zero")
    out = ad / bd

    def backward(g):
        return _unbroadcast(g / bd, ad.shape), _unbroadcast(-g * out / bd, bd.shape)

    return record(out, (a, b), backward)


def power(a: Tensor, exponent: float) -> Tensor:
    a = as_tensor(a)
    p = float(exponent)
    x = a.data
    if p != int(p) and np.any(x < 0):
        raise DomainError("fractional power of a negative value")
    out = np.power(x, p)

    def backward(g):
        if p == 0:
            return (np.zeros_like(x),)
        if p < 1:
            safe = np.where(x == 0, 1, x)
            d = np.where(x == 0, 0, p * np.power(safe, p - 1))
        else:
            d = p * np.power(x, p - 1)
        return (g * d,)

    return record(out, (a,), backward)


def absolute(a: Tensor) -> Tensor:
    a = as_tensor(a)
    x = a.data
    # subgradient 0 at 0
    return record(np.abs(x), (a,), lambda g: (g * np.sign(x),))


def log(a: Tensor, clamp: float | None = LOG_CLAMP) -> Tensor:
    """Natural log. With ``clamp`` the argument is first raised to ``>= clamp``
    (zero gradient below it); with ``clamp=None`` nonpositive input is an error."""
    a = as_tensor(a)
    x = a.data
    if clamp is None:
        if np.any(x <= 0):
            raise DomainError("log of a nonpositive value")
        xc = x
        active = None
    else:
        active = x >= clamp
        xc = np.maximum(x, clamp)

    def backward(g):
        d = g / xc
        if active is not None:
            d = np.where(active, d, 0)
        return (d,)

    return record(np.log(xc), (a,), backward)


def exp(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return record(out, (a,), lambda g: (g * out,))


def relu(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out = np.maximum(a.data, 0)
    return record(out, (a,), lambda g: (g * (out > 0),))


def clamp_min(a: Tensor, lo: float) -> Tensor:
    a = as_tensor(a)
    mask = a.data >= lo
    return record(np.maximum(a.data, lo).astype(a.dtype, copy=False), (a,), lambda g: (g * mask,))


# -- linear algebra ------------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = _coerce_pair(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise ContractError("matmul needs operands with at least 2 dimensions")
    if a.shape[-1] != b.shape[-2]:
        raise ContractError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    _broadcast_shape(a.shape[:-2], b.shape[:-2], "matmul")
    ad, bd = a.data, b.data

    def backward(g):
        ga = np.matmul(g, np.swapaxes(bd, -1, -2)) if a.requires_grad else None
        gb = np.matmul(np.swapaxes(ad, -1, -2), g) if b.requires_grad else None
        return (
            None if ga is None else _unbroadcast(ga, ad.shape),
            None if gb is None else _unbroadcast(gb, bd.shape),
        )

    return record(np.matmul(ad, bd), (a, b), backward)


# -- reductions ----------------------------------------------------------------


def _norm_axes(axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def _expand_to(g: np.ndarray, shape: tuple[int, ...], axes: tuple[int, ...], keepdims: bool) -> np.ndarray:
    if not keepdims:
        for ax in sorted(axes):
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, shape)


def reduce_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(axis, a.ndim)
    out = np.sum(a.data, axis=axes, keepdims=keepdims, dtype=np.float64).astype(a.dtype)
    shape = a.shape
    return record(out, (a,), lambda g: (np.array(_expand_to(g, shape, axes, keepdims)),))


def reduce_mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    if count == 0:
        raise ContractError("mean over an empty axis")
    out = np.mean(a.data, axis=axes, keepdims=keepdims, dtype=np.float64).astype(a.dtype)
    shape = a.shape
    return record(out, (a,), lambda g: (np.array(_expand_to(g / count, shape, axes, keepdims)),))


def reduce_max(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    """Max reduction; the gradient goes to the first maximal element."""
    a = as_tensor(a)
    axes = _norm_axes(axis, a.ndim)
    x = a.data
    out = np.max(x, axis=axes, keepdims=True)

    def backward(g):
        g = g if keepdims else np.expand_dims(g, tuple(sorted(axes)))
        # route to the first argmax along the flattened reduced axes
        moved = np.moveaxis(x, axes, range(x.ndim - len(axes), x.ndim))
        flat = moved.reshape(moved.shape[: x.ndim - len(axes)] + (-1,))
        first = np.argmax(flat, axis=-1)
        onehot = np.zeros_like(flat)
        np.put_along_axis(onehot, first[..., None], 1, axis=-1)
        onehot = np.moveaxis(onehot.reshape(moved.shape), range(x.ndim - len(axes), x.ndim), axes)
        return (onehot * g,)

    data = out if keepdims else np.squeeze(out, axis=axes)
    return record(np.array(data), (a,), backward)


# -- shape ---------------------------------------------------------------------


def reshape(a: Tensor, shape) -> Tensor:
    a = as_tensor(a)
    src = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ContractError(f"cannot reshape {src} to {tuple(shape)}") from None
    return record(out, (a,), lambda g: (g.reshape(src),))


def transpose(a: Tensor, axes=None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inv = tuple(np.argsort(axes))
    return record(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inv),))


def getitem(a: Tensor, index) -> Tensor:
    a = as_tensor(a)
    out = a.data[index]
    if not isinstance(out, np.ndarray):
        out = np.asarray(out, dtype=a.dtype)
    shape, dtype = a.shape, a.dtype

    def backward(g):
        full = np.zeros(shape, dtype=dtype)
        if _is_basic_index(index):
            full[index] = g
        else:
            np.add.at(full, index, g)
        return (full,)

    return record(np.array(out), (a,), backward)


def _is_basic_index(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(isinstance(p, (int, np.integer, slice)) or p is None or p is Ellipsis for p in parts)
