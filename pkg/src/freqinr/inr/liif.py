"""Local implicit image decoder: nearest-latent lookup, feature unfolding,
cell decoding, 4-neighbour local ensemble and an LR skip connection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from ..numerics import Tensor, as_tensor, concat, kaiming_uniform, linear, make_rng, no_grad, take_rows, unfold
from .encoder import Encoder, EncoderConfig
from .resample import bilinear_sample, scaled_size

ENSEMBLE_SHIFTS = ((-1, -1), (-1, 1), (1, -1), (1, 1))
_EPS_SHIFT = 1e-6


@dataclass
class DecoderConfig:
    hidden: list[int] = field(default_factory=lambda: [256, 256, 256, 256])
    unfold_radius: int = 1
    ensemble: bool = True
    lr_skip: bool = True

    def __post_init__(self):
        self.hidden = [int(h) for h in self.hidden]
        if any(h < 1 for h in self.hidden):
            raise ContractError("hidden widths must be positive")
        if self.unfold_radius < 0:
            raise ContractError("unfold_radius must be nonnegative")


@dataclass
class QueryGrid:
    """Query coordinates (row, col) in [-1, 1]^2 with per-query cell sizes."""

    coords: np.ndarray
    cell: np.ndarray
    scale: tuple[float, float] = (1.0, 1.0)
    shape: tuple[int, int] | None = None

    def __len__(self) -> int:
        return len(self.coords)

    def subset(self, index: np.ndarray) -> "QueryGrid":
        return QueryGrid(self.coords[index], self.cell[index], self.scale, None)


def make_coord(h: int, w: int) -> np.ndarray:
    """Pixel-centre coordinates of an h x w grid, row-major, shape (h*w, 2)."""
    ys = -1.0 + (2.0 * np.arange(h) + 1.0) / h
    xs = -1.0 + (2.0 * np.arange(w) + 1.0) / w
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return np.stack([yy.ravel(), xx.ravel()], axis=-1)


def make_grid(h: int, w: int, scale: tuple[float, float] | None = None) -> QueryGrid:
    coords = make_coord(h, w)
    cell = np.tile(np.array([2.0 / h, 2.0 / w]), (h * w, 1)) if h and w else np.zeros((0, 2))
    return QueryGrid(coords, cell, scale or (1.0, 1.0), (h, w))


def grid_for_scale(lr_h: int, lr_w: int, scale) -> QueryGrid:
    ry, rx = (scale, scale) if np.isscalar(scale) else scale
    return make_grid(scaled_size(lr_h, ry), scaled_size(lr_w, rx), (float(ry), float(rx)))


class MLP:
    def __init__(self, in_dim: int, out_dim: int, hidden: list[int], rng: np.random.Generator, dtype=np.float32):
        self.params: dict[str, Tensor] = {}
        dims = [in_dim] + list(hidden) + [out_dim]
        for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
            self.params[f"layers.{i}.weight"] = Tensor(kaiming_uniform(rng, (a, b), a, dtype), True, name=f"layers.{i}.weight")
            self.params[f"layers.{i}.bias"] = Tensor(np.zeros(b, dtype=dtype), True, name=f"layers.{i}.bias")
        self.n_layers = len(dims) - 1

    def parameters(self) -> dict[str, Tensor]:
        return dict(self.params)

    def __call__(self, x: Tensor) -> Tensor:
        for i in range(self.n_layers):
            x = linear(x, self.params[f"layers.{i}.weight"], self.params[f"layers.{i}.bias"])
            if i < self.n_layers - 1:
                x = x.relu()
        return x


class LocalINR:
    """Encoder + local implicit decoder producing RGB at continuous coordinates."""

    def __init__(self, encoder_cfg: EncoderConfig | None = None, decoder_cfg: DecoderConfig | None = None,
                 seed: int = 0, dtype=np.float32):
        self.encoder_cfg = encoder_cfg or EncoderConfig()
        self.decoder_cfg = decoder_cfg or DecoderConfig()
        self.seed = seed
        self.dtype = np.dtype(dtype)
        rng = make_rng(seed, stream=0)
        self.encoder = Encoder(self.encoder_cfg, rng=rng, dtype=dtype)
        self.decoder = MLP(self.decoder_in_dim, 3, self.decoder_cfg.hidden, rng, dtype)

    @property
    def feature_width(self) -> int:
        k = 2 * self.decoder_cfg.unfold_radius + 1
        return self.encoder_cfg.channels * k * k

    @property
    def decoder_in_dim(self) -> int:
        return self.feature_width + 2 + 2

    def parameters(self) -> dict[str, Tensor]:
        out = {f"encoder.{k}": v for k, v in self.encoder.parameters().items()}
        out.update({f"decoder.{k}": v for k, v in self.decoder.parameters().items()})
        return out

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.grad = None

    def features(self, lr) -> Tensor:
        return self.encoder(lr)

    def query(self, features: Tensor, grid: QueryGrid, lr: np.ndarray | None = None) -> Tensor:
        return query_rgb(self, features, grid, lr)

    def __call__(self, lr: np.ndarray, grid: QueryGrid) -> Tensor:
        return query_rgb(self, self.features(lr), grid, lr)


def _latent_index(c: np.ndarray, n: int) -> np.ndarray:
    return np.clip(np.floor((c + 1.0) * 0.5 * n), 0, n - 1).astype(np.intp)


def _shift_plan(coords: np.ndarray, h: int, w: int, ensemble: bool):
    """Latent indices, relative coordinates and blend weights per shift.

    Returns ``idx`` (S, Q), ``rel`` (S, Q, 2) in feature-cell units and
    ``weights`` (S, Q).
    """
    shifts = ENSEMBLE_SHIFTS if ensemble else ((0, 0),)
    eps = _EPS_SHIFT if ensemble else 0.0
    ry, rx = 1.0 / h, 1.0 / w
    idx, rel, areas = [], [], []
    for vy, vx in shifts:
        cy = np.clip(coords[:, 0] + vy * ry + eps, -1 + 1e-6, 1 - 1e-6)
        cx = np.clip(coords[:, 1] + vx * rx + eps, -1 + 1e-6, 1 - 1e-6)
        iy, ix = _latent_index(cy, h), _latent_index(cx, w)
        centre_y = -1.0 + (2.0 * iy + 1.0) / h
        centre_x = -1.0 + (2.0 * ix + 1.0) / w
        r = np.stack([(coords[:, 0] - centre_y) * h, (coords[:, 1] - centre_x) * w], axis=-1)
        idx.append(iy * w + ix)
        rel.append(r)
        areas.append(np.abs(r[:, 0] * r[:, 1]) + 1e-9)
    idx, rel = np.stack(idx), np.stack(rel)
    if not ensemble:
        return idx, rel, np.ones((1, len(coords)))
    areas = np.stack(areas)
    # each prediction is weighted by the area of the diagonally opposite sub-rectangle
    weights = areas[::-1] / areas.sum(axis=0, keepdims=True)
    return idx, rel, weights


def ensemble_weights(coords: np.ndarray, feat_hw: tuple[int, int]) -> np.ndarray:
    """(4, Q) local-ensemble blend weights for the four nearest latents."""
    return _shift_plan(np.asarray(coords, dtype=np.float64), *feat_hw, ensemble=True)[2]


def query_rgb(model: LocalINR, features: Tensor, grid: QueryGrid, lr: np.ndarray | None = None) -> Tensor:
    """Decode RGB at every query of ``grid`` from an (h, w, C) feature map.

    Returns a (Q, 3) tensor; ``lr`` (h, w, 3) is required when the model has
    an LR skip connection.
    """
    cfg = model.decoder_cfg
    features = as_tensor(features)
    if features.ndim != 3:
        raise ContractError("query_rgb expects a single (h, w, C) feature map")
    coords = np.asarray(grid.coords, dtype=np.float64).reshape(-1, 2)
    cell = np.asarray(grid.cell, dtype=np.float64).reshape(-1, 2)
    if len(coords) == 0:
        return Tensor(np.zeros((0, 3), dtype=features.dtype))
    if np.any(np.abs(coords) > 1.0):
        raise ContractError("query coordinates must lie in [-1, 1]^2")
    if np.any(cell <= 0):
        raise ContractError("cell sizes must be positive")
    h, w, c = features.shape
    if cfg.unfold_radius > 0:
        k = 2 * cfg.unfold_radius + 1
        feat = unfold(features.reshape(1, h, w, c), k)
    else:
        feat = features
    flat = feat.reshape(h * w, model.feature_width)

    idx, rel, weights = _shift_plan(coords, h, w, cfg.ensemble)
    s, q = idx.shape
    cell_units = np.broadcast_to(cell * np.array([h, w]), (s, q, 2))
    extra = np.concatenate([rel, cell_units], axis=-1).reshape(s * q, 4).astype(model.dtype)
    inp = concat([take_rows(flat, idx.ravel()), extra], axis=1)
    pred = model.decoder(inp).reshape(s, q, 3)
    out = (pred * weights[:, :, None].astype(model.dtype)).sum(axis=0)
    if cfg.lr_skip:
        if lr is None:
            raise ContractError("the LR skip connection needs the LR image")
        out = out + bilinear_sample(np.asarray(lr, dtype=model.dtype), coords)
    return out


def render(model: LocalINR, lr: np.ndarray, out_h: int, out_w: int, chunk: int = 16384) -> np.ndarray:
    """Super-resolve ``lr`` to ``out_h x out_w`` without recording gradients."""
    lr = np.asarray(lr, dtype=model.dtype)
    grid = make_grid(out_h, out_w, (out_h / lr.shape[0], out_w / lr.shape[1]))
    out = np.empty((out_h * out_w, 3), dtype=model.dtype)
    with no_grad():
        feats = model.features(lr)
        for start in range(0, len(grid), chunk):
            sl = slice(start, start + chunk)
            out[sl] = query_rgb(model, feats, grid.subset(np.arange(len(grid))[sl]), lr).data
    return out.reshape(out_h, out_w, 3)


def upscale(model: LocalINR, lr: np.ndarray, scale) -> np.ndarray:
    ry, rx = (scale, scale) if np.isscalar(scale) else scale
    if ry < 1 or rx < 1:
        raise ContractError("scale must be >= 1")
    return render(model, lr, scaled_size(lr.shape[0], ry), scaled_size(lr.shape[1], rx))
