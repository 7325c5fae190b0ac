"""Finite-difference checks of every hand-written backward pass.

Each check builds a scalar function of some float64 inputs, differentiates it
with the tape, and compares a random subset of gradient entries against
central differences. Frequency weights are data dependent but treated as
constants by the backward pass, so loss checks freeze them at the base point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import freqloss
from .freqloss import FreqLossConfig, LossMode
from .inr import DecoderConfig, EncoderConfig, LocalINR, RFMode, make_grid, query_rgb
from .numerics import Tensor, concat, conv2d, exp, make_rng, no_grad, take_rows, unfold
from .spectral import dct2_op, dft_magnitude2_op

DEFAULT_TOL = 1e-3
END_TO_END_TOL = 1e-2
STEP = 1e-4
REFINED_STEP = 1e-6
FLOOR = 1e-7


@dataclass
class CheckResult:
    name: str
    max_rel_err: float
    tol: float
    points: int
    refined: int = 0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_rel_err) and self.max_rel_err < self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        note = f", {self.refined} refined" if self.refined else ""
        return f"{status} {self.name}: max rel err {self.max_rel_err:.3e} (tol {self.tol:g}, {self.points} points{note})"


def check_gradients(name: str, fn: Callable[..., Tensor], inputs: list[np.ndarray], *, tol: float = DEFAULT_TOL,
                    points: int = 100, rng: np.random.Generator | None = None, h: float = STEP) -> CheckResult:
    """Compare tape gradients of scalar ``fn(*tensors)`` with central differences.

    ``points`` coordinates are drawn across all inputs (without replacement).
    A coordinate that misses ``tol`` at step ``h`` is measured again at
    ``REFINED_STEP``: relu and abs kinks closer than ``h`` to the base point
    spoil the coarse difference but not the fine one, while a wrong backward
    pass is wrong at every step size.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    arrays = [np.array(x, dtype=np.float64) for x in inputs]
    leaves = [Tensor(a, requires_grad=True) for a in arrays]
    fn(*leaves).backward()
    analytic = [np.zeros_like(a) if t.grad is None else t.grad for a, t in zip(arrays, leaves)]

    sizes = np.array([a.size for a in arrays])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    picks = rng.choice(offsets[-1], size=min(points, int(offsets[-1])), replace=False)

    def value() -> float:
        with no_grad():
            return float(fn(*[Tensor(a) for a in arrays]).data)

    def rel_err(k, idx, step) -> float:
        orig = arrays[k][idx]
        arrays[k][idx] = orig + step
        up = value()
        arrays[k][idx] = orig - step
        down = value()
        arrays[k][idx] = orig
        numeric = (up - down) / (2 * step)
        a = float(analytic[k][idx])
        err = abs(a - numeric) / max(abs(a), abs(numeric), FLOOR)
        return err if np.isfinite(err) else np.inf

    worst, refined = 0.0, 0
    for flat in picks:
        k = int(np.searchsorted(offsets, flat, side="right") - 1)
        idx = np.unravel_index(int(flat - offsets[k]), arrays[k].shape)
        err = rel_err(k, idx, h)
        if err >= tol and h > REFINED_STEP:
            refined += 1
            err = rel_err(k, idx, REFINED_STEP)
        worst = max(worst, err)
    return CheckResult(name, worst, tol, len(picks), refined)


# -- named suites -------------------------------------------------------------


def _numerics_checks(rng, tol, points) -> list[CheckResult]:
    a = rng.normal(size=(5, 4))
    b = rng.normal(size=(4, 3))
    x = rng.normal(size=(2, 6, 5, 3))
    wk = rng.normal(size=(3, 3, 3, 2)) * 0.3
    bias = rng.normal(size=(2,))
    pos = rng.uniform(0.5, 2.0, size=(4, 3))
    idx = rng.integers(0, 5, size=9)
    sel = np.abs(rng.normal(size=(3, 3, 2))) + 0.2
    out = [
        check_gradients("matmul", lambda p, q: ((p @ q) ** 2).sum(), [a, b], tol=tol, points=points, rng=rng),
        check_gradients("conv2d", lambda u, k, c: (conv2d(u, k, c, dilation=2) ** 2).mean(), [x, wk, bias],
                        tol=tol, points=points, rng=rng),
        check_gradients("unfold", lambda u: (unfold(u, 3) * unfold(u, 3)).sum(), [x], tol=tol, points=points, rng=rng),
        check_gradients("take_rows", lambda p: (take_rows(p, idx) ** 2).sum(), [a], tol=tol, points=points, rng=rng),
        check_gradients("concat", lambda p, q: (concat([p, q.transpose()], axis=0) ** 3).sum(), [a, b],
                        tol=tol, points=points, rng=rng),
        check_gradients("elementwise", lambda p: (p.log() + exp(p) * 0.1 + p ** 1.5 + 1.0 / p).sum(), [pos],
                        tol=tol, points=points, rng=rng),
        check_gradients("reduce_max", lambda p: (p.max(axis=0) * np.arange(1.0, 4.0)).sum(), [pos],
                        tol=tol, points=points, rng=rng),
        check_gradients("relu", lambda p: (p.relu() * p).sum(), [a], tol=tol, points=points, rng=rng),
        check_gradients("dct2", lambda u: (dct2_op(u) * sel).sum(), [rng.normal(size=(3, 3, 2))],
                        tol=tol, points=points, rng=rng),
        check_gradients("dft_magnitude", lambda u: (dft_magnitude2_op(u) * sel).sum(), [rng.normal(size=(3, 3, 2))],
                        tol=tol, points=points, rng=rng),
    ]
    return out


def _frozen(ref: np.ndarray, gen: np.ndarray, cfg: FreqLossConfig):
    with no_grad():
        _, weights = freqloss.adfl(ref, gen, cfg, return_weights=True)
    return weights


def _loss_checks(rng, tol, points) -> list[CheckResult]:
    ref = rng.uniform(size=(8, 8, 3))
    gen = np.clip(ref + rng.normal(scale=0.2, size=ref.shape), 0, 1)
    out = [check_gradients("spatial_l1", lambda g: freqloss.spatial_l1(ref, g), [gen],
                           tol=tol, points=points, rng=rng)]
    for mode in LossMode:
        cfg = FreqLossConfig(mode=mode)
        wts = _frozen(ref, gen, cfg)
        out.append(check_gradients(f"adfl[{mode.value}]",
                                   lambda g, cfg=cfg, wts=wts: freqloss.adfl(ref, g, cfg, weights=wts),
                                   [gen], tol=tol, points=points, rng=rng))
    cfg = FreqLossConfig(lam=0.5)
    wts = _frozen(ref, gen, cfg)
    out.append(check_gradients(
        "total_loss",
        lambda g: freqloss.spatial_l1(ref, g) + cfg.lam * freqloss.adfl(ref, g, cfg, weights=wts),
        [gen], tol=tol, points=points, rng=rng))
    return out


def _end_to_end_check(rng, tol, points, seed) -> CheckResult:
    model = LocalINR(EncoderConfig(channels=4, depth=2, dilation=1, rf_mode=RFMode.EXTENDED),
                     DecoderConfig(hidden=[8, 8]), seed=seed, dtype=np.float64)
    lr = rng.uniform(size=(6, 6, 3))
    hr = rng.uniform(size=(12, 12, 3))
    grid = make_grid(12, 12, (2.0, 2.0))
    params = model.parameters()
    names = list(params)
    cfg = FreqLossConfig(lam=1.0)
    # small random biases keep the relus off their kinks and the gradients generic
    for n in names:
        if n.endswith("bias"):
            params[n].data = rng.normal(scale=0.1, size=params[n].shape)

    def forward(*tensors):
        saved = {n: _owner(model, n)[0].params[_owner(model, n)[1]] for n in names}
        for n, t in zip(names, tensors):
            owner, key = _owner(model, n)
            owner.params[key] = t
        try:
            pred = query_rgb(model, model.features(lr), grid, lr).reshape(12, 12, 3)
        finally:
            for n in names:
                owner, key = _owner(model, n)
                owner.params[key] = saved[n]
        return freqloss.spatial_l1(hr, pred) + cfg.lam * freqloss.adfl(hr, pred, cfg, weights=wts)

    with no_grad():
        pred0 = query_rgb(model, model.features(lr), grid, lr).reshape(12, 12, 3).data
    wts = _frozen(hr, pred0, cfg)
    return check_gradients("end_to_end[encoder+decoder]", forward, [params[n].data for n in names],
                           tol=tol, points=points, rng=rng)


def _owner(model: LocalINR, name: str):
    part, _, key = name.partition(".")
    return (model.encoder if part == "encoder" else model.decoder), key


def run_all(seed: int = 0, tol: float | None = None, points: int = 100) -> list[CheckResult]:
    """Every suite; ``tol`` overrides both the op/loss and end-to-end tolerances."""
    rng = make_rng(seed, stream=3)
    op_tol = DEFAULT_TOL if tol is None else tol
    e2e_tol = END_TO_END_TOL if tol is None else tol
    results = _numerics_checks(rng, op_tol, points)
    results += _loss_checks(rng, op_tol, points)
    results.append(_end_to_end_check(rng, e2e_tol, points, seed))
    return results
