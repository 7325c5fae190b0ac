"""Bicubic resizing (a = -0.5, half-pixel centres, edge clamp) and bilinear sampling."""

from __future__ import annotations

import functools
import math

import numpy as np

from ..errors import ContractError

CUBIC_A = -0.5


def cubic_kernel(x: np.ndarray, a: float = CUBIC_A) -> np.ndarray:
    ax = np.abs(x)
    near = ((a + 2) * ax - (a + 3)) * ax * ax + 1
    far = ((a * ax - 5 * a) * ax + 8 * a) * ax - 4 * a
    return np.where(ax <= 1, near, np.where(ax < 2, far, 0.0))


def scaled_size(n: int, scale: float) -> int:
    """``floor(scale * n)``, robust to representation error (2.3 * 10 -> 23)."""
    return int(math.floor(scale * n + 1e-6))


@functools.lru_cache(maxsize=256)
def resize_matrix(in_n: int, out_n: int, antialias: bool = True) -> np.ndarray:
    """(out_n, in_n) bicubic resampling matrix.

    Output pixel ``i`` samples source position ``(i + 0.5) * in_n / out_n - 0.5``.
    When shrinking with ``antialias`` the kernel is stretched by the inverse
    scale and each row renormalised to sum to one.
    """
    if in_n < 1 or out_n < 1:
        raise ContractError("resize extents must be positive")
    scale = out_n / in_n
    src = (np.arange(out_n) + 0.5) / scale - 0.5
    shrink = antialias and scale < 1
    kscale = scale if shrink else 1.0
    support = 2.0 / kscale
    first = np.floor(src - support).astype(int) + 1
    taps = int(math.ceil(2 * support)) + 1
    idx = first[:, None] + np.arange(taps)[None, :]
    wts = cubic_kernel((src[:, None] - idx) * kscale) * kscale
    if shrink:
        wts = wts / wts.sum(axis=1, keepdims=True)
    mat = np.zeros((out_n, in_n))
    rows = np.repeat(np.arange(out_n), taps)
    np.add.at(mat, (rows, np.clip(idx, 0, in_n - 1).ravel()), wts.ravel())
    mat.setflags(write=False)
    return mat


def resize_bicubic(img: np.ndarray, out_h: int, out_w: int, antialias: bool = True) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3:
        raise ContractError("expected an (H, W, C) image")
    h, w, _ = img.shape
    wy = resize_matrix(h, out_h, antialias)
    wx = resize_matrix(w, out_w, antialias)
    out = np.einsum("vw,hwc->hvc", wx, img.astype(np.float64))
    out = np.einsum("uh,hvc->uvc", wy, out)
    return out.astype(img.dtype if np.issubdtype(img.dtype, np.floating) else np.float64)


def _pair(scale) -> tuple[float, float]:
    if isinstance(scale, (tuple, list)):
        ry, rx = scale
    else:
        ry = rx = scale
    return float(ry), float(rx)


def upsample_bicubic(lr: np.ndarray, scale) -> np.ndarray:
    """Bicubic upsampling to ``floor(r_y * H) x floor(r_x * W)``."""
    ry, rx = _pair(scale)
    if ry < 1 or rx < 1:
        raise ContractError("upsampling scale must be >= 1")
    h, w = np.shape(lr)[:2]
    return resize_bicubic(lr, scaled_size(h, ry), scaled_size(w, rx), antialias=False)


def downsample_bicubic(hr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Anti-aliased bicubic shrink (the degradation model)."""
    return resize_bicubic(hr, out_h, out_w, antialias=True)


def _axis_taps(c: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    p = np.clip((c + 1.0) * 0.5 * n - 0.5, 0.0, n - 1.0)
    near = np.round(p)
    p = np.where(np.abs(p - near) < 1e-6, near, p)
    i0 = np.floor(p).astype(np.intp)
    i1 = np.minimum(i0 + 1, n - 1)
    return i0, i1, p - i0


def bilinear_sample(img: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Sample an (H, W, C) image at (Q, 2) coordinates in [-1, 1]^2 (row, col).

    Half-pixel-centre convention with border clamping, so pixel centres are
    reproduced exactly.
    """
    img = np.asarray(img)
    h, w, _ = img.shape
    coords = np.asarray(coords, dtype=np.float64)
    y0, y1, ty = _axis_taps(coords[:, 0], h)
    x0, x1, tx = _axis_taps(coords[:, 1], w)
    ty = ty[:, None]
    tx = tx[:, None]
    top = img[y0, x0] * (1 - tx) + img[y0, x1] * tx
    bot = img[y1, x0] * (1 - tx) + img[y1, x1] * tx
    return (top * (1 - ty) + bot * ty).astype(img.dtype, copy=False)
