"""Command-line entry point: train, eval, upscale, spectrum, gradcheck, textures.

Exit codes: 0 success, 1 failed check, 2 usage or configuration error,
3 training aborted on a non-finite loss.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import gradcheck
from .errors import ConfigError, ContractError, DatasetError, TrainingDiverged
from .evaluate import benchmark, spectral_report
from .freqloss import FreqLossConfig
from .inr import DecoderConfig, EncoderConfig, LocalINR, load_checkpoint, resize_bicubic, scaled_size, upscale
from .spectral import dct2_array, write_csv, write_pgm
from .training import TrainConfig, load_dataset, load_image, save_png, train, write_texture_set

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3
OUTPUT_ENV = "FREQINR_OUTPUT_DIR"

log = logging.getLogger("freqinr")


def _defaults(cls) -> dict:
    out = {}
    for f in dataclasses.fields(cls):
        v = getattr(cls(), f.name)
        out[f.name] = v.value if hasattr(v, "value") else v
    return out


def default_config() -> dict:
    """The full configuration schema with default values."""
    train_cfg = _defaults(TrainConfig)
    train_cfg.pop("loss")
    loss = _defaults(FreqLossConfig)
    loss["lambda"] = loss.pop("lam")
    return {
        "data": {"train_dir": None, "val_dir": None},
        "encoder": _defaults(EncoderConfig),
        "decoder": _defaults(DecoderConfig),
        "train": train_cfg,
        "loss": loss,
        "eval": {"scales": [2, 3, 4, 6], "crop": None},
        "output_dir": None,
    }


def _merge(base: dict, update: dict, prefix: str = "") -> dict:
    for key, value in update.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown configuration key: {path}")
        if isinstance(base[key], dict) and not isinstance(value, dict):
            raise ConfigError(f"configuration key {path} must be a section")
        if isinstance(base[key], dict):
            _merge(base[key], value, path + ".")
        else:
            base[key] = value
    return base


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: dict, assignment: str) -> dict:
    """Apply one ``section.key=value`` override; values are parsed as JSON when possible."""
    key, sep, value = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(f"override must look like key=value, got {assignment!r}")
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            raise ConfigError(f"unknown configuration key: {key}")
        node = node[part]
    if parts[-1] not in node or isinstance(node[parts[-1]], dict):
        raise ConfigError(f"unknown configuration key: {key}")
    node[parts[-1]] = _parse_value(value)
    return cfg


def load_config(path: str | None, overrides: list[str] | None = None) -> dict:
    cfg = default_config()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"configuration file not found: {p}")
        try:
            _merge(cfg, json.loads(p.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
    for item in overrides or []:
        apply_override(cfg, item)
    return cfg


def build_objects(cfg: dict) -> tuple[EncoderConfig, DecoderConfig, TrainConfig]:
    try:
        loss = dict(cfg["loss"])
        loss["lam"] = loss.pop("lambda")
        enc = EncoderConfig(**cfg["encoder"])
        dec = DecoderConfig(**cfg["decoder"])
        tr = TrainConfig(**cfg["train"], loss=FreqLossConfig(**loss))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return enc, dec, tr


def output_dir(cfg: dict | None, flag: str | None) -> Path:
    """``--output``, then the config's ``output_dir``, then $FREQINR_OUTPUT_DIR, then ``runs``."""
    if flag:
        return Path(flag)
    if cfg is not None and cfg.get("output_dir"):
        return Path(cfg["output_dir"])
    return Path(os.environ.get(OUTPUT_ENV) or "runs")


def _eval_scales(cfg: dict) -> tuple[list[float], int | None]:
    return [float(s) for s in cfg["eval"]["scales"]], cfg["eval"]["crop"]


# -- commands -----------------------------------------------------------------


def cmd_train(args) -> int:
    cfg = load_config(args.config, args.set)
    enc, dec, tr = build_objects(cfg)
    train_dir = cfg["data"]["train_dir"]
    if not train_dir:
        raise ConfigError("data.train_dir is not set")
    dataset = load_dataset(train_dir)
    out = output_dir(cfg, args.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    model = LocalINR(enc, dec, seed=tr.seed)
    result = train(model, tr, dataset, output_dir=out)
    if result.metrics:
        last = result.metrics[-1]
        print(f"step {last['step']}: l_spatial {last['l_spatial']:.6f} l_adfl {last['l_adfl']} "
              f"l_total {last['l_total']:.6f}")
    if cfg["data"]["val_dir"]:
        scales, crop = _eval_scales(cfg)
        report = benchmark(model, load_dataset(cfg["data"]["val_dir"]), scales, crop)
        report.write(out, "validation")
        print(report.to_table(), end="")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = load_config(args.config, args.set)
    model, _ = load_checkpoint(args.checkpoint)
    val_dir = args.data or cfg["data"]["val_dir"]
    if not val_dir:
        raise ConfigError("no evaluation images: pass --data or set data.val_dir")
    scales, crop = _eval_scales(cfg)
    report = benchmark(model, load_dataset(val_dir), scales, crop)
    out = output_dir(cfg, args.output)
    report.write(out, "report", include_runtime=args.runtime)
    print(report.to_table(), end="")
    return EXIT_OK


def cmd_upscale(args) -> int:
    if args.scale < 1:
        raise ConfigError("scale must be >= 1")
    model, _ = load_checkpoint(args.checkpoint)
    lr = load_image(args.input)
    sr = upscale(model, lr, args.scale)
    out = Path(args.output)
    save_png(out, sr)
    print(f"wrote {out} ({sr.shape[0]}x{sr.shape[1]})")
    if args.baseline:
        h, w = scaled_size(lr.shape[0], args.scale), scaled_size(lr.shape[1], args.scale)
        base = out.with_name(out.stem + "_bicubic.png")
        save_png(base, resize_bicubic(lr, h, w, antialias=False))
        print(f"wrote {base}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    a = load_image(args.input_a)
    b = load_image(args.input_b) if args.input_b else None
    if b is not None and a.shape != b.shape:
        raise ConfigError(f"image sizes differ: {a.shape[:2]} vs {b.shape[:2]}")
    out = output_dir(None, args.output)
    out.mkdir(parents=True, exist_ok=True)
    fa = dct2_array(a.astype(np.float64))
    write_pgm(out / f"{Path(args.input_a).stem}_dct.pgm", np.abs(fa).mean(axis=-1))
    written = [f"{Path(args.input_a).stem}_dct.pgm"]
    if b is not None:
        fb = dct2_array(b.astype(np.float64))
        write_pgm(out / f"{Path(args.input_b).stem}_dct.pgm", np.abs(fb).mean(axis=-1))
        distance = np.abs(fb - fa).mean(axis=-1)
        write_pgm(out / "distance.pgm", distance)
        write_csv(out / "distance.csv", distance)
        bands = spectral_report(a, b)
        with open(out / "bands.csv", "w") as fh:
            fh.write("band,mean_abs_diff\n")
            for i, v in enumerate(bands):
                fh.write(f"{i},{v:.9g}\n")
        written += [f"{Path(args.input_b).stem}_dct.pgm", "distance.pgm", "distance.csv", "bands.csv"]
    for name in written:
        print(f"wrote {out / name}")
    return EXIT_OK


GRADCHECK_KEYS = {"tol": float, "seed": int, "points": int}


def cmd_gradcheck(args) -> int:
    opts = {"tol": None, "seed": 0, "points": 100}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep or key not in GRADCHECK_KEYS:
            raise ConfigError(f"unknown gradcheck setting: {item} (known: {', '.join(GRADCHECK_KEYS)})")
        try:
            opts[key] = GRADCHECK_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value}") from exc
    results = gradcheck.run_all(seed=opts["seed"], tol=opts["tol"], points=opts["points"])
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return EXIT_CHECK
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def cmd_textures(args) -> int:
    paths = write_texture_set(args.output, args.count, args.size, args.seed)
    print(f"wrote {len(paths)} textures to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freqinr", description="Arbitrary-scale SR with a frequency-aware loss.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
    p.add_argument("--output", help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="PSNR sweep of a checkpoint against bicubic")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config")
    p.add_argument("--data", help="directory of evaluation PNGs (default: data.val_dir)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--output")
    p.add_argument("--runtime", action="store_true", help="include per-image timing in report.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("upscale", help="super-resolve one PNG")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--scale", type=float, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--baseline", action="store_true", help="also write the bicubic result")
    p.set_defaults(func=cmd_upscale)

    p = sub.add_parser("spectrum", help="DCT magnitude maps and band distances")
    p.add_argument("input_a")
    p.add_argument("input_b", nargs="?")
    p.add_argument("--output")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("gradcheck", help="finite-difference gradient self-checks")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="tol, seed or points")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("textures", help="write a procedural texture corpus")
    p.add_argument("--output", required=True)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--size", type=int, default=96)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_textures)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, ContractError, DatasetError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
