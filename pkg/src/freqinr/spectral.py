"""Orthonormal 2-D DCT-II, its inverse, and a DFT-magnitude spectrum.

Images are (H, W, C) rasters (optionally with leading batch axes); the
transform runs over the two spatial axes, channels independently. The DCT is
applied separably as ``D_M @ f @ D_N.T`` with cached basis matrices.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, UnsupportedInverseError
from .numerics import Tensor, as_tensor, record


class SpectrumKind(str, enum.Enum):
    DCT = "dct"
    DFT_MAGNITUDE = "dft_magnitude"


@dataclass(frozen=True)
class Spectrum:
    coeffs: np.ndarray
    kind: SpectrumKind = SpectrumKind.DCT

    @property
    def height(self) -> int:
        return self.coeffs.shape[-3]

    @property
    def width(self) -> int:
        return self.coeffs.shape[-2]


@functools.lru_cache(maxsize=64)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis: ``D[k, x] = C(k) sqrt(2/n) cos(pi k (x + 1/2) / n)``."""
    if n < 1:
        raise ContractError("DCT size must be positive")
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    d = math.sqrt(2.0 / n) * np.cos(math.pi * k * (x + 0.5) / n)
    d[0, :] *= 1.0 / math.sqrt(2.0)
    d.setflags(write=False)
    return d


def _check_image(x: np.ndarray) -> None:
    if x.ndim < 3:
        raise ContractError(f"expected an (H, W, C) raster, got shape {x.shape}")
    if 0 in x.shape:
        raise ContractError(f"image has a zero-sized dimension: {x.shape}")


def _separable(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # out[..., u, v, c] = sum_{h, w} a[u, h] x[..., h, w, c] b[v, w]
    a = a.astype(x.dtype, copy=False)
    b = b.astype(x.dtype, copy=False)
    rows = np.einsum("vw,...hwc->...hvc", b, x)
    return np.einsum("uh,...hvc->...uvc", a, rows)


def dct2_array(x: np.ndarray) -> np.ndarray:
    _check_image(x)
    return _separable(x, dct_matrix(x.shape[-3]), dct_matrix(x.shape[-2]))


def idct2_array(f: np.ndarray) -> np.ndarray:
    _check_image(f)
    return _separable(f, dct_matrix(f.shape[-3]).T, dct_matrix(f.shape[-2]).T)


def dct2(image) -> Spectrum:
    """Orthonormal type-II DCT of an image (array input)."""
    x = np.asarray(image.data if isinstance(image, Tensor) else image)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    return Spectrum(dct2_array(x), SpectrumKind.DCT)


def idct2(spectrum: Spectrum) -> np.ndarray:
    if spectrum.kind is not SpectrumKind.DCT:
        raise UnsupportedInverseError("a DFT magnitude spectrum has no inverse (phase is discarded)")
    return idct2_array(np.asarray(spectrum.coeffs))


def dct2_op(x) -> Tensor:
    """Differentiable DCT; the backward pass is the inverse transform."""
    x = as_tensor(x)
    return record(dct2_array(x.data), (x,), lambda g: (idct2_array(g),))


def _dft_mag(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    spec = np.fft.fft2(x, axes=(-3, -2))
    return spec, np.abs(spec)


def dft_magnitude2(image) -> Spectrum:
    """Per-channel magnitude of the unnormalised 2-D DFT."""
    x = np.asarray(image.data if isinstance(image, Tensor) else image, dtype=None)
    _check_image(x)
    _, mag = _dft_mag(x)
    return Spectrum(mag.astype(x.dtype if np.issubdtype(x.dtype, np.floating) else np.float64),
                    SpectrumKind.DFT_MAGNITUDE)


def dft_magnitude2_op(x) -> Tensor:
    """Differentiable DFT magnitude; subgradient 0 where the magnitude vanishes."""
    x = as_tensor(x)
    _check_image(x.data)
    spec, mag = _dft_mag(x.data)
    m, n = x.shape[-3], x.shape[-2]

    def backward(g):
        phase = np.divide(spec, mag, out=np.zeros_like(spec), where=mag > 0)
        back = np.fft.ifft2(g * phase, axes=(-3, -2)).real * (m * n)
        return (back.astype(x.dtype, copy=False),)

    return record(mag.astype(x.dtype, copy=False), (x,), backward)


def transform(image, kind: SpectrumKind) -> Spectrum:
    kind = SpectrumKind(kind)
    return dct2(image) if kind is SpectrumKind.DCT else dft_magnitude2(image)


# -- export ----------------------------------------------------------------------


def write_csv(path: str | Path, raster: np.ndarray) -> None:
    """Write a 2-D raster as row-major CSV with fixed ``%.9g`` formatting."""
    raster = np.asarray(raster)
    if raster.ndim != 2:
        raise ContractError("CSV export takes one 2-D channel")
    np.savetxt(path, raster, delimiter=",", fmt="%.9g")


def log_magnitude_u8(raster: np.ndarray) -> np.ndarray:
    """Map ``log(1 + |x|)`` to 0..255, scaled by its own maximum."""
    mag = np.log1p(np.abs(np.asarray(raster, dtype=np.float64)))
    top = mag.max()
    if top > 0:
        mag = mag / top
    return np.round(mag * 255.0).astype(np.uint8)


def write_pgm(path: str | Path, raster: np.ndarray, log_scale: bool = True) -> None:
    """Write a 2-D raster as binary 8-bit PGM (P5)."""
    raster = np.asarray(raster)
    if raster.ndim != 2:
        raise ContractError("PGM export takes one 2-D raster")
    if log_scale:
        pixels = log_magnitude_u8(raster)
    else:
        pixels = np.round(np.clip(raster, 0.0, 1.0) * 255.0).astype(np.uint8)
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while blob[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while not blob[pos : pos + 1].isspace():
            pos += 1
        tokens.append(blob[start:pos])
    if tokens[0] != b"P5":
        raise ContractError(f"{path}: not a binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    return np.frombuffer(blob[pos + 1 : pos + 1 + w * h], dtype=np.uint8).reshape(h, w)
