"""PNG loading/saving and a procedural texture corpus for desk-scale runs."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import ConfigError, DatasetError
from ..numerics import make_rng

log = logging.getLogger(__name__)


def load_image(path: str | Path) -> np.ndarray:
    """Decode a PNG to an (H, W, 3) float32 raster in [0, 1].

    Grayscale is replicated to three channels and alpha is dropped.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("I;16", "I;16B", "I"):
                arr = np.asarray(im, dtype=np.float64) / 65535.0
                arr = np.repeat(arr[..., None], 3, axis=-1)
                return arr.astype(np.float32)
            if im.mode in ("L", "LA"):
                arr = np.asarray(im.convert("L"))
                arr = np.repeat(arr[..., None], 3, axis=-1)
            else:
                arr = np.asarray(im.convert("RGB"))
    except (OSError, ValueError) as exc:
        raise DatasetError(f"{path}: cannot decode image ({exc})") from exc
    return (arr.astype(np.float32) / np.float32(255.0)).astype(np.float32)


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def save_png(path: str | Path, img: np.ndarray) -> Path:
    """Write an (H, W, 3) or (H, W) raster in [0, 1] as an 8-bit PNG with fixed settings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = to_uint8(img)
    mode = "L" if pixels.ndim == 2 else "RGB"
    Image.fromarray(pixels, mode=mode).save(path, format="PNG", optimize=False, compress_level=6)
    return path


def load_dataset(directory: str | Path) -> list[np.ndarray]:
    """All PNG images in ``directory``, in lexicographic file-name order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"dataset directory does not exist: {directory}")
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise ConfigError(f"no PNG images in dataset directory: {directory}")
    return [load_image(p) for p in files]


# -- procedural textures ------------------------------------------------------


def _palette(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(0.05, 0.95, size=(n, 3))


def _contours(rng, yy, xx):
    field = np.zeros(yy.shape)
    for _ in range(rng.integers(2, 4)):
        theta = rng.uniform(0, np.pi)
        period = rng.uniform(10.0, 40.0)
        phase = rng.uniform(0, 2 * np.pi)
        field += np.sin(2 * np.pi * (np.cos(theta) * xx + np.sin(theta) * yy) / period + phase)
    levels = np.digitize(field, np.quantile(field, [1 / 3, 2 / 3]))
    return _palette(rng, 3)[levels]


def _checker(rng, yy, xx):
    theta = rng.uniform(0, np.pi / 2)
    period = rng.uniform(5.0, 16.0)
    u = np.cos(theta) * xx + np.sin(theta) * yy
    v = -np.sin(theta) * xx + np.cos(theta) * yy
    sel = (np.floor(u / period) + np.floor(v / period)) % 2
    a, b = _palette(rng, 2)
    return np.where(sel[..., None] > 0, a, b)


def _stripes(rng, yy, xx):
    theta = rng.uniform(0, np.pi)
    period = rng.uniform(4.0, 14.0)
    duty = rng.uniform(0.3, 0.7)
    u = (np.cos(theta) * xx + np.sin(theta) * yy) / period
    sel = (u - np.floor(u)) < duty
    a, b = _palette(rng, 2)
    return np.where(sel[..., None], a, b)


def _bubbles(rng, yy, xx):
    colors = _palette(rng, 6)
    out = np.broadcast_to(colors[0], yy.shape + (3,)).copy()
    size = yy.max()
    for _ in range(rng.integers(12, 30)):
        cy, cx = rng.uniform(0, size, size=2)
        r = rng.uniform(3.0, 14.0)
        inside = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
        out[inside] = colors[rng.integers(1, 6)]
    return out


def _blocks(rng, yy, xx):
    colors = _palette(rng, 5)
    out = np.broadcast_to(colors[0], yy.shape + (3,)).copy()
    size = yy.max()
    for _ in range(rng.integers(10, 25)):
        y0, x0 = rng.uniform(0, size, size=2)
        hh, ww = rng.uniform(3.0, 24.0, size=2)
        inside = (yy >= y0) & (yy < y0 + hh) & (xx >= x0) & (xx < x0 + ww)
        out[inside] = colors[rng.integers(1, 5)]
    return out


TEXTURES = (_contours, _checker, _stripes, _bubbles, _blocks)


def synthetic_texture(rng: np.random.Generator, size: int, kind: int, supersample: int = 4) -> np.ndarray:
    """One (size, size, 3) texture rendered with box-filtered supersampling."""
    n = size * supersample
    axis = (np.arange(n) + 0.5) / supersample
    yy, xx = np.meshgrid(axis, axis, indexing="ij")
    img = TEXTURES[kind % len(TEXTURES)](rng, yy, xx)
    img = img.reshape(size, supersample, size, supersample, 3).mean(axis=(1, 3))
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def synthetic_textures(count: int, size: int = 96, seed: int = 0) -> list[np.ndarray]:
    rng = make_rng(seed, stream=7)
    return [synthetic_texture(rng, size, i) for i in range(count)]


def write_texture_set(directory: str | Path, count: int, size: int = 96, seed: int = 0) -> list[Path]:
    directory = Path(directory)
    return [save_png(directory / f"tex_{i:03d}.png", img)
            for i, img in enumerate(synthetic_textures(count, size, seed))]
