"""Seedable random streams and parameter initialisers."""

from __future__ import annotations

import math

import numpy as np


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based (Philox) generator; ``stream`` selects an independent sequence."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def kaiming_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, dtype=np.float32) -> np.ndarray:
    # gain sqrt(2 / (1 + 5)) -> bound = 1 / sqrt(fan_in)
    bound = math.sqrt(3.0 / fan_in) * math.sqrt(1.0 / 3.0)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)
