"""Boundary-cropped PSNR, scale sweeps against the bicubic baseline, and
band-wise DCT distance summaries."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ContractError
from .inr.liif import LocalINR, render
from .inr.resample import downsample_bicubic, resize_bicubic, scaled_size
from .spectral import dct2_array

IDENTICAL = math.inf
N_BANDS = 4


def psnr(ref: np.ndarray, gen: np.ndarray, crop: int = 0) -> float:
    """PSNR in dB for [0, 1] rasters after trimming ``crop`` pixels per border.

    Identical inputs give :data:`IDENTICAL` (``inf``).
    """
    ref = np.asarray(ref, dtype=np.float64)
    gen = np.asarray(gen, dtype=np.float64)
    if ref.shape != gen.shape:
        raise ContractError(f"image shapes differ: {ref.shape} vs {gen.shape}")
    if crop < 0 or 2 * crop >= ref.shape[0] or 2 * crop >= ref.shape[1]:
        raise ContractError(f"crop {crop} too large for a {ref.shape[0]}x{ref.shape[1]} image")
    if crop:
        ref = ref[crop:-crop, crop:-crop]
        gen = gen[crop:-crop, crop:-crop]
    mse = np.mean((ref - gen) ** 2)
    if mse == 0:
        return IDENTICAL
    return float(10.0 * math.log10(1.0 / mse))


def band_index(m: int, n: int) -> np.ndarray:
    """(M, N) band labels from ``max(u / M, v / N)`` in quarters."""
    u = (N_BANDS * np.arange(m)) // m
    v = (N_BANDS * np.arange(n)) // n
    return np.maximum(u[:, None], v[None, :])


def spectral_report(ref: np.ndarray, gen: np.ndarray) -> np.ndarray:
    """Mean ``|dF|`` of the DCT difference in each of 4 bands (low to high)."""
    ref = np.asarray(ref, dtype=np.float64)
    gen = np.asarray(gen, dtype=np.float64)
    if ref.shape != gen.shape:
        raise ContractError(f"image shapes differ: {ref.shape} vs {gen.shape}")
    diff = np.abs(dct2_array(gen) - dct2_array(ref))
    labels = band_index(*ref.shape[:2])
    out = np.zeros(N_BANDS)
    for b in range(N_BANDS):
        sel = labels == b
        if sel.any():
            out[b] = diff[sel].mean()
    return out


def _fmt_db(v: float) -> str | float:
    return "IDENTICAL" if v == IDENTICAL else round(float(v), 6)


@dataclass
class ScaleResult:
    scale: float
    psnr: dict[str, float] = field(default_factory=dict)
    bands: dict[str, list[float]] = field(default_factory=dict)
    images: int = 0
    skipped: list[str] = field(default_factory=list)


@dataclass
class EvalReport:
    methods: list[str]
    rows: list[ScaleResult] = field(default_factory=list)
    runtime: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "methods": self.methods,
            "scales": [
                {
                    "scale": r.scale,
                    "images": r.images,
                    "psnr": {m: _fmt_db(v) for m, v in r.psnr.items()},
                    "bands": {m: [round(x, 9) for x in v] for m, v in r.bands.items()},
                    "skipped": r.skipped,
                }
                for r in self.rows
            ],
        }
        if include_runtime:
            out["runtime_s_per_image"] = self.runtime
        return out

    def to_json(self, include_runtime: bool = False) -> str:
        return json.dumps(self.to_dict(include_runtime), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        """Plain-text table: one row per method, one column per scale."""
        heads = ["Method"] + [f"x{r.scale:g}" for r in self.rows]
        body = []
        for m in self.methods:
            cells = [m]
            for r in self.rows:
                v = r.psnr.get(m)
                cells.append("-" if v is None else ("IDENTICAL" if v == IDENTICAL else f"{v:.2f}"))
            body.append(cells)
        widths = [max(len(row[i]) for row in [heads] + body) for i in range(len(heads))]
        lines = [" | ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
                 for row in [heads] + body]
        rule = "-+-".join("-" * w for w in widths)
        return "\n".join([lines[0], rule] + lines[1:]) + "\n"

    def write(self, directory: str | Path, stem: str = "report", include_runtime: bool = False) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{stem}.json").write_text(self.to_json(include_runtime))
        (directory / f"{stem}.txt").write_text(self.to_table())


def degrade(hr: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Crop ``hr`` so it is an exact ``scale`` multiple of its bicubic shrink.

    Returns ``(lr, hr_cropped)`` with ``lr`` of size ``floor(H / scale)`` and
    ``hr_cropped`` of size ``floor(scale * lr_size)``.
    """
    h, w = hr.shape[:2]
    lh, lw = int(math.floor(h / scale + 1e-6)), int(math.floor(w / scale + 1e-6))
    if lh < 1 or lw < 1:
        raise ContractError(f"image {h}x{w} too small for scale {scale}")
    th, tw = scaled_size(lh, scale), scaled_size(lw, scale)
    hr = np.asarray(hr[:th, :tw])
    return downsample_bicubic(hr, lh, lw).astype(np.float32), hr


def benchmark(model: LocalINR | None, images: Sequence[np.ndarray], scales: Sequence[float],
              crop: int | None = None, min_lr: int = 2) -> EvalReport:
    """PSNR (and band distances) of the model and the bicubic baseline per scale.

    ``crop`` defaults to ``ceil(scale)``; PSNR is averaged over images.
    """
    methods = (["model"] if model is not None else []) + ["bicubic"]
    report = EvalReport(methods)
    timing = {m: 0.0 for m in methods}
    count = 0
    for scale in scales:
        scale = float(scale)
        if scale < 1:
            raise ContractError("scales must be >= 1")
        row = ScaleResult(scale)
        c = int(math.ceil(scale)) if crop is None else int(crop)
        acc = {m: [] for m in methods}
        bands = {m: [] for m in methods}
        for i, hr in enumerate(images):
            h, w = hr.shape[:2]
            if min(h, w) / scale < min_lr or 2 * c >= min(scaled_size(int(h / scale + 1e-6), scale),
                                                          scaled_size(int(w / scale + 1e-6), scale)):
                row.skipped.append(f"image {i} ({h}x{w}) too small for x{scale:g}")
                continue
            lr, gt = degrade(hr, scale)
            outputs = {}
            t0 = time.perf_counter()
            outputs["bicubic"] = np.clip(resize_bicubic(lr, gt.shape[0], gt.shape[1], antialias=False), 0, 1)
            timing["bicubic"] += time.perf_counter() - t0
            if model is not None:
                t0 = time.perf_counter()
                outputs["model"] = np.clip(render(model, lr, gt.shape[0], gt.shape[1]), 0, 1)
                timing["model"] += time.perf_counter() - t0
            for m in methods:
                acc[m].append(psnr(gt, outputs[m], c))
                bands[m].append(spectral_report(gt, outputs[m]))
            count += 1
        row.images = len(acc[methods[0]])
        for m in methods:
            if acc[m]:
                vals = acc[m]
                row.psnr[m] = IDENTICAL if all(v == IDENTICAL for v in vals) else float(
                    np.mean([v for v in vals if v != IDENTICAL]))
                row.bands[m] = [float(x) for x in np.mean(bands[m], axis=0)]
        report.rows.append(row)
    report.runtime = {m: (t / count if count else 0.0) for m, t in timing.items()}
    return report
