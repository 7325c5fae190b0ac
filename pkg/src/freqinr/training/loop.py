"""Scale-and-patch sampling and the optimisation loop."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..errors import ConfigError, NonFiniteError, TrainingDiverged
from ..freqloss import FreqLossConfig, FreqWeight, loss_terms, spatial_l1
from ..inr.checkpoint import save_checkpoint
from ..inr.liif import LocalINR, QueryGrid, make_grid, query_rgb
from ..inr.resample import downsample_bicubic
from ..numerics import Adam, make_rng, no_grad

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr_patch: int = 24
    scale_min: float = 1.0
    scale_max: float = 4.0
    batch: int = 8
    steps: int = 20000
    lr: float = 1e-4
    milestones: list[int] = field(default_factory=lambda: [10000, 15000])
    gamma: float = 0.5
    seed: int = 0
    sample_q: int | None = None
    flip: bool = True
    loss: FreqLossConfig = field(default_factory=FreqLossConfig)

    def __post_init__(self):
        if isinstance(self.loss, dict):
            self.loss = FreqLossConfig(**self.loss)
        if self.lr_patch < 1 or self.batch < 1 or self.steps < 0:
            raise ConfigError("lr_patch and batch must be positive, steps nonnegative")
        if not 1.0 <= self.scale_min <= self.scale_max:
            raise ConfigError("scales must satisfy 1 <= scale_min <= scale_max")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")
        if self.sample_q is not None:
            if self.sample_q < 1:
                raise ConfigError("sample_q must be positive (or null for full grids)")
            if self.loss.lam > 0:
                raise ConfigError("sample_q needs lambda == 0: the frequency loss needs a full HR raster")

    def learning_rate(self, step: int) -> float:
        return self.lr * self.gamma ** sum(1 for m in self.milestones if step >= m)


@dataclass
class TrainSample:
    lr: np.ndarray
    hr: np.ndarray
    grid: QueryGrid
    scale: tuple[float, float]
    target: np.ndarray | None = None  # HR pixels at the queries of a subsampled grid


@dataclass
class StepRecord:
    step: int
    l_spatial: float
    l_adfl: float | None  # None when the grid is subsampled
    l_total: float
    lr: float
    weights: list[FreqWeight] = field(default_factory=list, repr=False)

    def as_log(self) -> dict:
        return {"step": self.step, "l_spatial": self.l_spatial, "l_adfl": self.l_adfl,
                "l_total": self.l_total, "lr": self.lr}


def _hr_side(cfg: TrainConfig, r: float) -> int:
    return int(math.floor(r * cfg.lr_patch + 1e-6))


def sample_batch(dataset: Sequence[np.ndarray], cfg: TrainConfig, rng: np.random.Generator,
                 max_attempts: int = 100) -> list[TrainSample]:
    """Draw ``cfg.batch`` (LR, HR, grid) items.

    Per item: scale ``r ~ U[scale_min, scale_max]``, a random HR crop of side
    ``floor(r * lr_patch)`` (optionally mirrored), and its bicubic shrink to
    ``lr_patch``. Images too small for the crop are skipped with a warning.
    """
    if not dataset:
        raise ConfigError("empty dataset")
    out: list[TrainSample] = []
    attempts = 0
    while len(out) < cfg.batch:
        attempts += 1
        if attempts > max_attempts * cfg.batch:
            raise ConfigError("no dataset image is large enough for the requested crops")
        img = dataset[int(rng.integers(len(dataset)))]
        r = float(rng.uniform(cfg.scale_min, cfg.scale_max))
        side = _hr_side(cfg, r)
        h, w = img.shape[:2]
        if side > h or side > w:
            log.warning("image %dx%d too small for a %d-pixel crop; resampling", h, w, side)
            continue
        y0 = int(rng.integers(h - side + 1))
        x0 = int(rng.integers(w - side + 1))
        hr = img[y0 : y0 + side, x0 : x0 + side]
        if cfg.flip and rng.random() < 0.5:
            hr = hr[:, ::-1]
        hr = np.ascontiguousarray(hr, dtype=np.float32)
        lr = downsample_bicubic(hr, cfg.lr_patch, cfg.lr_patch).astype(np.float32)
        grid = make_grid(side, side, (r, r))
        target = None
        if cfg.sample_q is not None:
            idx = np.sort(rng.choice(len(grid), size=min(cfg.sample_q, len(grid)), replace=False))
            grid = grid.subset(idx)
            target = hr.reshape(-1, 3)[idx]
        out.append(TrainSample(lr, hr, grid, (r, r), target))
    return out


def train_step(model: LocalINR, opt: Adam, batch: Sequence[TrainSample], loss_cfg: FreqLossConfig,
               step: int = 0) -> StepRecord:
    """One forward/backward/update over ``batch``; loss terms are batch means."""
    lr_stack = np.stack([s.lr for s in batch]).astype(model.dtype)
    feats = model.features(lr_stack)
    spatial_sum = freq_sum = None
    weights: list[FreqWeight] = []
    full = all(s.grid.shape is not None for s in batch)
    for i, s in enumerate(batch):
        pred = query_rgb(model, feats[i], s.grid, s.lr)
        if full:
            h, w = s.grid.shape
            pred = pred.reshape(h, w, 3)
            _, sp, fr, wts = loss_terms(s.hr, pred, loss_cfg, return_weights=True)
            weights.extend(wts)
        else:
            sp, fr = spatial_l1(s.target, pred), None
        spatial_sum = sp if spatial_sum is None else spatial_sum + sp
        if fr is not None:
            freq_sum = fr if freq_sum is None else freq_sum + fr
    n = float(len(batch))
    spatial = spatial_sum * (1.0 / n)
    if freq_sum is not None:
        freq = freq_sum * (1.0 / n)
        total = spatial + loss_cfg.lam * freq if loss_cfg.lam > 0 else spatial
    else:
        freq, total = None, spatial
    l_total = float(total.data)
    if not math.isfinite(l_total):
        raise NonFiniteError("non-finite loss")
    total.backward()
    opt.step()
    return StepRecord(step, float(spatial.data), float(freq.data) if freq is not None else None,
                      l_total, opt.lr, weights)


@dataclass
class TrainResult:
    model: LocalINR
    metrics: list[dict]


def train(model: LocalINR, cfg: TrainConfig, dataset: Sequence[np.ndarray], *,
          output_dir: str | Path | None = None,
          callback: Callable[[StepRecord], None] | None = None) -> TrainResult:
    """Run ``cfg.steps`` optimiser steps on ``dataset``.

    Writes ``metrics.jsonl`` (one record per step), a checkpoint at each
    learning-rate milestone and ``model.json``/``model.bin`` at the end when
    ``output_dir`` is given.
    """
    rng = make_rng(cfg.seed, stream=1)
    opt = Adam(model.parameters(), lr=cfg.lr)
    metrics: list[dict] = []
    out = Path(output_dir) if output_dir is not None else None
    log_fh = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        log_fh = open(out / "metrics.jsonl", "w")
    try:
        for step in range(cfg.steps):
            opt.lr = cfg.learning_rate(step)
            batch = sample_batch(dataset, cfg, rng)
            try:
                rec = train_step(model, opt, batch, cfg.loss, step)
            except NonFiniteError as exc:
                model.zero_grad()
                if out is not None:
                    np.savez(out / f"diverged_step{step}.npz",
                             lr=np.stack([s.lr for s in batch]), seed=cfg.seed, step=step)
                raise TrainingDiverged(step, cfg.seed, str(exc)) from exc
            entry = rec.as_log()
            metrics.append(entry)
            if log_fh is not None:
                log_fh.write(json.dumps(entry) + "\n")
            if callback is not None:
                callback(rec)
            if out is not None and (step + 1) in cfg.milestones:
                save_checkpoint(model, out / f"checkpoint_{step + 1:06d}.json", {"step": step + 1})
    finally:
        if log_fh is not None:
            log_fh.close()
    if out is not None and cfg.steps > 0:
        save_checkpoint(model, out / "model.json", {"step": cfg.steps})
    return TrainResult(model, metrics)


def evaluate_loss(model: LocalINR, batch: Sequence[TrainSample], loss_cfg: FreqLossConfig) -> StepRecord:
    """Loss terms for a batch without updating the model."""
    with no_grad():
        feats = model.features(np.stack([s.lr for s in batch]).astype(model.dtype))
        sps, frs = [], []
        for i, s in enumerate(batch):
            h, w = s.grid.shape
            pred = query_rgb(model, feats[i], s.grid, s.lr).reshape(h, w, 3)
            _, sp, fr = loss_terms(s.hr, pred, loss_cfg)
            sps.append(float(sp.data))
            frs.append(float(fr.data))
    sp, fr = float(np.mean(sps)), float(np.mean(frs))
    return StepRecord(-1, sp, fr, sp + loss_cfg.lam * fr, 0.0)
