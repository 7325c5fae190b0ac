"""Adaptive DCT frequency loss and the combined spatial + frequency objective.

Pipeline for one image pair:

1. transform reference and prediction (orthonormal DCT, or DFT magnitude);
2. distance ``d(u, v) = mean_c |F_ref - F_gen|``;
3. weights ``w0 = |log max(d, eps)|**alpha``, ``wn = w0 / max(w0)``;
4. mask: zero in the low-frequency and noise corners, ``beta * wn`` elsewhere;
5. reduce ``(1 / HW) * sum(...)``.

Weights and mask are recomputed from the current spectra on every call and
are never differentiated.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .numerics import Tensor, as_tensor, no_grad
from .spectral import Spectrum, SpectrumKind, dct2_op, dft_magnitude2_op


class LossMode(str, enum.Enum):
    ADFL_LITERAL = "literal"
    ADFL_FFL_STYLE = "ffl_style"
    DFT_FFL = "dft_ffl"


@dataclass
class FreqLossConfig:
    alpha: float = 1.0
    beta: float = 1.0
    lf_fraction: float = 0.1
    noise_fraction: float = 0.1
    lam: float = 0.05
    mode: LossMode = LossMode.ADFL_FFL_STYLE
    distance_epsilon: float = 1e-8

    def __post_init__(self):
        self.mode = LossMode(self.mode)
        if self.alpha <= 0 or self.beta <= 0:
            raise ContractError("alpha and beta must be positive")
        if self.lam < 0:
            raise ContractError("lambda must be nonnegative")
        if self.distance_epsilon <= 0:
            raise ContractError("distance_epsilon must be positive")
        for name in ("lf_fraction", "noise_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ContractError(f"{name} must lie in [0, 1)")
        if self.lf_fraction + self.noise_fraction >= 1.0:
            raise ContractError("lf_fraction + noise_fraction must be < 1")

    @property
    def spectrum_kind(self) -> SpectrumKind:
        return SpectrumKind.DFT_MAGNITUDE if self.mode is LossMode.DFT_FFL else SpectrumKind.DCT


@dataclass
class FreqWeight:
    w0: np.ndarray
    wn: np.ndarray
    mask: np.ndarray


def frequency_distance(ref: Spectrum, gen: Spectrum) -> np.ndarray:
    """Per-frequency ``|F_ref - F_gen|`` averaged over channels -> (H, W)."""
    if ref.kind != gen.kind:
        raise ContractError(f"spectrum kinds differ: {ref.kind} vs {gen.kind}")
    if ref.coeffs.shape != gen.coeffs.shape:
        raise ContractError(f"spectrum shapes differ: {ref.coeffs.shape} vs {gen.coeffs.shape}")
    return np.abs(np.asarray(ref.coeffs) - np.asarray(gen.coeffs)).mean(axis=-1)


def build_fdm(d: np.ndarray, cfg: FreqLossConfig) -> tuple[np.ndarray, np.ndarray]:
    """Raw and max-normalised frequency distance weights for a distance raster."""
    d = np.asarray(d, dtype=np.float64)
    if np.any(d < 0):
        raise ContractError("frequency distances must be nonnegative")
    w0 = np.abs(np.log(np.maximum(d, cfg.distance_epsilon))) ** cfg.alpha
    top = w0.max() if w0.size else 0.0
    wn = w0 / top if top > 0 else w0.copy()
    return w0, wn


def _corner(n: int, fraction: float) -> int:
    # ceil, tolerant of representation error such as 0.1 * 30
    return int(math.ceil(fraction * n - 1e-9)) if fraction > 0 else 0


def zeroed_region(shape: tuple[int, int], cfg: FreqLossConfig) -> np.ndarray:
    """Boolean (M, N) raster, True inside the low-frequency and noise corners."""
    m, n = shape
    region = np.zeros((m, n), dtype=bool)
    lu, lv = _corner(m, cfg.lf_fraction), _corner(n, cfg.lf_fraction)
    region[:lu, :lv] = True
    nu, nv = _corner(m, cfg.noise_fraction), _corner(n, cfg.noise_fraction)
    if nu and nv:
        region[m - nu :, n - nv :] = True
    return region


def build_mask(wn: np.ndarray, cfg: FreqLossConfig, kind: SpectrumKind = SpectrumKind.DCT) -> np.ndarray:
    """Adaptive weighting mask: 0 in the zeroed corners, ``beta * wn`` elsewhere.

    The normalisation is re-taken over the surviving cells so that the
    zeroed coefficients have no influence on the loss at all. The DFT
    baseline keeps every cell.
    """
    wn = np.asarray(wn, dtype=np.float64)
    if kind is SpectrumKind.DFT_MAGNITUDE:
        region = np.zeros(wn.shape, dtype=bool)
    else:
        region = zeroed_region(wn.shape, cfg)
    active = np.where(region, 0.0, wn)
    top = active.max() if active.size else 0.0
    if top > 0:
        active = active / top
    return cfg.beta * active


def build_weights(d: np.ndarray, cfg: FreqLossConfig) -> FreqWeight:
    w0, wn = build_fdm(d, cfg)
    return FreqWeight(w0, wn, build_mask(wn, cfg, cfg.spectrum_kind))


def _spectra(ref: Tensor, gen: Tensor, kind: SpectrumKind) -> tuple[Tensor, Tensor]:
    op = dct2_op if kind is SpectrumKind.DCT else dft_magnitude2_op
    return op(ref), op(gen)


def _pair(ref, gen) -> tuple[Tensor, Tensor]:
    gen = as_tensor(gen)
    ref = as_tensor(ref, dtype=gen.dtype)
    if ref.shape != gen.shape:
        raise ContractError(f"image shapes differ: {ref.shape} vs {gen.shape}")
    if ref.ndim < 3:
        raise ContractError("images must be (H, W, C) rasters")
    return ref, gen


def adfl(ref, gen, cfg: FreqLossConfig, weights: list[FreqWeight] | FreqWeight | None = None,
         return_weights: bool = False):
    """Adaptive frequency loss between ``ref`` and ``gen``.

    Both are (H, W, C) or (B, H, W, C); a batch is averaged. Pass ``weights``
    to freeze the weight rasters instead of deriving them from the current
    spectra. With ``return_weights`` the per-item :class:`FreqWeight` list is
    returned alongside the loss.
    """
    ref, gen = _pair(ref, gen)
    kind = cfg.spectrum_kind
    fr, ff = _spectra(ref, gen, kind)
    d = (ff - fr).abs().mean(axis=-1)  # (..., H, W)
    h, w = d.shape[-2:]
    lead = d.shape[:-2]
    count = int(np.prod(lead)) if lead else 1

    if weights is None:
        flat = d.data.reshape(count, h, w)
        weights = [build_weights(flat[i], cfg) for i in range(count)]
    elif isinstance(weights, FreqWeight):
        weights = [weights]
    if len(weights) != count or any(wt.mask.shape != (h, w) for wt in weights):
        raise ContractError("frozen weights do not match the image batch")
    mask = np.stack([wt.mask for wt in weights]).reshape(lead + (h, w)).astype(gen.dtype)

    if cfg.mode is LossMode.ADFL_LITERAL:
        fdm = d.clamp_min(cfg.distance_epsilon).log(clamp=None).abs() ** cfg.alpha
        per_cell = fdm * mask
    else:
        per_cell = d * d * mask
    loss = per_cell.sum() * (1.0 / (h * w * count))
    return (loss, weights) if return_weights else loss


def spatial_l1(ref, gen) -> Tensor:
    """Mean absolute pixel difference."""
    gen = as_tensor(gen)
    ref = as_tensor(ref, dtype=gen.dtype)
    if ref.shape != gen.shape:
        raise ContractError(f"image shapes differ: {ref.shape} vs {gen.shape}")
    return (gen - ref).abs().mean()


def loss_terms(ref, gen, cfg: FreqLossConfig, return_weights: bool = False):
    """Return ``(total, spatial, frequency)`` tensors.

    With ``lam == 0`` the frequency term is evaluated without recording so it
    can be logged but contributes nothing to the gradient.
    """
    spatial = spatial_l1(ref, gen)
    if cfg.lam == 0:
        with no_grad():
            freq, wts = adfl(ref, gen, cfg, return_weights=True)
        total = spatial
    else:
        freq, wts = adfl(ref, gen, cfg, return_weights=True)
        total = spatial + cfg.lam * freq
    return (total, spatial, freq, wts) if return_weights else (total, spatial, freq)


def total_loss(ref, gen, cfg: FreqLossConfig) -> Tensor:
    """``spatial_l1 + lambda * adfl``."""
    return loss_terms(ref, gen, cfg)[0]
