"""Data ingestion, batch sampling and the training loop."""

from .data import load_dataset, load_image, save_png, synthetic_textures, write_texture_set
from .loop import StepRecord, TrainConfig, TrainResult, TrainSample, evaluate_loss, sample_batch, train, train_step

__all__ = [
    "StepRecord", "TrainConfig", "TrainResult", "TrainSample", "evaluate_loss", "load_dataset", "load_image",
    "sample_batch", "save_png", "synthetic_textures", "train", "train_step", "write_texture_set",
]
