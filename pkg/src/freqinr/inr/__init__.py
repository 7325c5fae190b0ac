"""Encoder, local implicit decoder and resampling baselines."""

from .checkpoint import load_checkpoint, save_checkpoint
from .encoder import Encoder, EncoderConfig, RFMode, encode, probe_receptive_field, receptive_field
from .liif import (
    DecoderConfig,
    LocalINR,
    QueryGrid,
    ensemble_weights,
    grid_for_scale,
    make_coord,
    make_grid,
    query_rgb,
    render,
    upscale,
)
from .resample import bilinear_sample, downsample_bicubic, resize_bicubic, scaled_size, upsample_bicubic

__all__ = [
    "DecoderConfig", "Encoder", "EncoderConfig", "LocalINR", "QueryGrid", "RFMode", "bilinear_sample",
    "downsample_bicubic", "encode", "ensemble_weights", "grid_for_scale", "load_checkpoint", "make_coord",
    "make_grid", "probe_receptive_field", "query_rgb", "receptive_field", "render", "resize_bicubic",
    "save_checkpoint", "scaled_size", "upsample_bicubic", "upscale",
]
