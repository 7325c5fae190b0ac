"""Checkpoint files: a JSON manifest plus a little-endian float32 blob.

``<stem>.json`` records the format version, configs, seed and, for every
parameter, its name, shape and element offset into ``<stem>.bin``.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import ConfigError
from .encoder import EncoderConfig
from .liif import DecoderConfig, LocalINR

FORMAT = "freqinr-checkpoint"


def _jsonable(cfg) -> dict:
    out = dataclasses.asdict(cfg)
    return {k: (v.value if hasattr(v, "value") else v) for k, v in out.items()}


def save_checkpoint(model: LocalINR, path: str | Path, extra: dict | None = None) -> Path:
    path = Path(path).with_suffix(".json")
    blob_path = path.with_suffix(".bin")
    entries, chunks, offset = [], [], 0
    for name, p in model.parameters().items():
        arr = np.ascontiguousarray(p.data, dtype="<f4")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(arr.tobytes())
        offset += arr.size
    manifest = {
        "format": FORMAT,
        "version": __version__,
        "seed": model.seed,
        "encoder": _jsonable(model.encoder_cfg),
        "decoder": _jsonable(model.decoder_cfg),
        "blob": blob_path.name,
        "count": offset,
        "params": entries,
    }
    if extra:
        manifest["extra"] = extra
    path.parent.mkdir(parents=True, exist_ok=True)
    blob_path.write_bytes(b"".join(chunks))
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_checkpoint(path: str | Path) -> tuple[LocalINR, dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    manifest = json.loads(path.read_text())
    if manifest.get("format") != FORMAT:
        raise ConfigError(f"{path}: not a {FORMAT} manifest")
    model = LocalINR(EncoderConfig(**manifest["encoder"]), DecoderConfig(**manifest["decoder"]),
                     seed=manifest.get("seed", 0), dtype=np.float32)
    blob = np.frombuffer((path.parent / manifest["blob"]).read_bytes(), dtype="<f4")
    if blob.size != manifest["count"]:
        raise ConfigError(f"{path}: blob holds {blob.size} values, manifest expects {manifest['count']}")
    params = model.parameters()
    names = {e["name"] for e in manifest["params"]}
    if names != set(params):
        raise ConfigError(f"{path}: parameter names do not match the configured model")
    for e in manifest["params"]:
        p = params[e["name"]]
        n = int(np.prod(e["shape"]))
        if tuple(e["shape"]) != p.shape:
            raise ConfigError(f"{path}: shape mismatch for {e['name']}")
        p.data[...] = blob[e["offset"] : e["offset"] + n].reshape(p.shape)
    return model, manifest
