"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..errors import ContractError
from .tensor import Tensor


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(param: Tensor, state: AdamState) -> Tensor:
    """Apply one Adam update to ``param`` in place and clear its gradient."""
    g = param.grad
    if g is None:
        raise ContractError(f"missing gradient for parameter {param.name or '<unnamed>'}")
    if state.first_moment.shape != param.shape:
        raise ContractError("Adam moments do not match the parameter shape")
    state.step_count += 1
    t = state.step_count
    m, v = state.first_moment, state.second_moment
    m *= state.beta1
    m += (1.0 - state.beta1) * g
    v *= state.beta2
    v += (1.0 - state.beta2) * (g * g)
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    param.data -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(param.dtype, copy=False)
    param.grad = None
    return param


class Adam:
    """Adam over a named parameter set; one :class:`AdamState` per tensor."""

    def __init__(self, params: Mapping[str, Tensor], lr: float = 1e-4,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = dict(params)
        self.state = {
            name: AdamState(np.zeros_like(p.data), np.zeros_like(p.data), 0, lr, betas[0], betas[1], eps)
            for name, p in self.params.items()
        }

    @property
    def lr(self) -> float:
        return next(iter(self.state.values())).lr if self.state else 0.0

    @lr.setter
    def lr(self, value: float) -> None:
        for s in self.state.values():
            s.lr = float(value)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self) -> None:
        missing = [name for name, p in self.params.items() if p.grad is None]
        if missing:
            raise ContractError(f"missing gradient for parameters: {', '.join(missing)}")
        for name, p in self.params.items():
            adam_step(p, self.state[name])
