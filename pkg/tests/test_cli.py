import json

import numpy as np
import pytest

from freqinr import cli
from freqinr.errors import ConfigError
from freqinr.inr import DecoderConfig, EncoderConfig, LocalINR, save_checkpoint
from freqinr.training import load_image, save_png, write_texture_set

TINY = [
    "encoder.channels=4", "encoder.depth=1", "decoder.hidden=[8]",
    "train.lr_patch=6", "train.batch=2", "train.steps=3", "train.milestones=[2]",
]


@pytest.fixture
def corpus(tmp_path):
    write_texture_set(tmp_path / "train", 3, size=24, seed=0)
    write_texture_set(tmp_path / "val", 2, size=24, seed=1)
    cfg = {"data": {"train_dir": str(tmp_path / "train"), "val_dir": str(tmp_path / "val")},
           "eval": {"scales": [2, 3]}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def run_train(corpus, out, *extra):
    args = ["train", "--config", str(corpus), "--output", str(out)]
    for s in TINY + list(extra):
        args += ["--set", s]
    return cli.main(args)


@pytest.fixture
def identity_checkpoint(tmp_path):
    model = LocalINR(EncoderConfig(channels=4, depth=1), DecoderConfig(hidden=[8]), seed=0)
    for name, p in model.parameters().items():
        if name.startswith("decoder."):
            p.data[...] = 0
    return save_checkpoint(model, tmp_path / "zero.json")


class TestConfig:
    def test_defaults_round_trip(self):
        enc, dec, tr = cli.build_objects(cli.default_config())
        assert tr.loss.lam == cli.default_config()["loss"]["lambda"]

    def test_override_parses_json(self):
        cfg = cli.apply_override(cli.default_config(), "train.milestones=[5, 9]")
        assert cfg["train"]["milestones"] == [5, 9]
        cfg = cli.apply_override(cfg, "loss.mode=literal")
        assert cfg["loss"]["mode"] == "literal"

    @pytest.mark.parametrize("item", ["train.nope=1", "nope.x=1", "train=1", "novalue"])
    def test_bad_override(self, item):
        with pytest.raises(ConfigError):
            cli.apply_override(cli.default_config(), item)

    def test_unknown_file_key(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"train": {"stepz": 3}}))
        with pytest.raises(ConfigError, match="train.stepz"):
            cli.load_config(str(p))

    def test_toy_config_loads(self):
        enc, dec, tr = cli.build_objects(cli.load_config("configs/toy.json"))
        assert tr.steps == 2000 and tr.loss.lam == 100.0

    def test_output_precedence(self, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_ENV, "/env")
        assert str(cli.output_dir({"output_dir": "/cfg"}, "/flag")) == "/flag"
        assert str(cli.output_dir({"output_dir": "/cfg"}, None)) == "/cfg"
        assert str(cli.output_dir({"output_dir": None}, None)) == "/env"
        monkeypatch.delenv(cli.OUTPUT_ENV)
        assert str(cli.output_dir(None, None)) == "runs"


class TestTrain:
    def test_writes_outputs(self, corpus, tmp_path):
        out = tmp_path / "run"
        assert run_train(corpus, out) == cli.EXIT_OK
        for name in ("config.json", "metrics.jsonl", "model.json", "model.bin", "checkpoint_000002.json",
                     "validation.json", "validation.txt"):
            assert (out / name).exists(), name

    def test_unknown_key_exits_2(self, corpus, tmp_path, capsys):
        assert run_train(corpus, tmp_path / "r", "train.bogus=1") == cli.EXIT_USAGE
        assert "train.bogus" in capsys.readouterr().err

    def test_missing_dataset_names_path(self, corpus, tmp_path, capsys):
        assert run_train(corpus, tmp_path / "r", f"data.train_dir={tmp_path / 'absent'}") == cli.EXIT_USAGE
        assert "absent" in capsys.readouterr().err

    def test_zero_lambda_still_logs_frequency_term(self, corpus, tmp_path):
        out = tmp_path / "r"
        run_train(corpus, out, "loss.lambda=0")
        for line in (out / "metrics.jsonl").read_text().splitlines():
            rec = json.loads(line)
            assert rec["l_adfl"] is not None and rec["l_adfl"] > 0
            assert rec["l_total"] == rec["l_spatial"]

    def test_repeat_runs_identical(self, corpus, tmp_path):
        run_train(corpus, tmp_path / "a")
        run_train(corpus, tmp_path / "b")
        for name in ("metrics.jsonl", "model.bin", "validation.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_output_from_environment(self, corpus, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "envdir"))
        args = ["train", "--config", str(corpus)]
        for s in TINY:
            args += ["--set", s]
        assert cli.main(args) == cli.EXIT_OK
        assert (tmp_path / "envdir" / "metrics.jsonl").exists()


class TestEval:
    def test_report(self, corpus, tmp_path, identity_checkpoint):
        code = cli.main(["eval", "--checkpoint", str(identity_checkpoint), "--config", str(corpus),
                         "--output", str(tmp_path / "ev")])
        assert code == cli.EXIT_OK
        rep = json.loads((tmp_path / "ev" / "report.json").read_text())
        assert [r["scale"] for r in rep["scales"]] == [2.0, 3.0]
        assert "runtime_s_per_image" not in rep

    def test_no_data(self, tmp_path, identity_checkpoint):
        code = cli.main(["eval", "--checkpoint", str(identity_checkpoint), "--output", str(tmp_path)])
        assert code == cli.EXIT_USAGE


class TestUpscale:
    def test_fractional_scale_size(self, tmp_path, identity_checkpoint):
        save_png(tmp_path / "in.png", np.random.default_rng(0).uniform(size=(20, 20, 3)))
        code = cli.main(["upscale", "--checkpoint", str(identity_checkpoint), "--input", str(tmp_path / "in.png"),
                         "--scale", "2.5", "--output", str(tmp_path / "out.png"), "--baseline"])
        assert code == cli.EXIT_OK
        assert load_image(tmp_path / "out.png").shape == (50, 50, 3)
        assert load_image(tmp_path / "out_bicubic.png").shape == (50, 50, 3)

    def test_unit_scale_identity(self, tmp_path, identity_checkpoint):
        img = np.random.default_rng(1).integers(0, 256, size=(9, 11, 3)) / 255.0
        save_png(tmp_path / "in.png", img)
        cli.main(["upscale", "--checkpoint", str(identity_checkpoint), "--input", str(tmp_path / "in.png"),
                  "--scale", "1", "--output", str(tmp_path / "out.png")])
        np.testing.assert_array_equal(load_image(tmp_path / "out.png"), load_image(tmp_path / "in.png"))

    def test_missing_checkpoint(self, tmp_path, capsys):
        save_png(tmp_path / "in.png", np.zeros((4, 4, 3)))
        code = cli.main(["upscale", "--checkpoint", str(tmp_path / "none.json"), "--input", str(tmp_path / "in.png"),
                         "--scale", "2", "--output", str(tmp_path / "o.png")])
        assert code == cli.EXIT_USAGE
        assert "none.json" in capsys.readouterr().err

    def test_downscale_rejected(self, tmp_path, identity_checkpoint):
        save_png(tmp_path / "in.png", np.zeros((4, 4, 3)))
        code = cli.main(["upscale", "--checkpoint", str(identity_checkpoint), "--input", str(tmp_path / "in.png"),
                         "--scale", "0.5", "--output", str(tmp_path / "o.png")])
        assert code == cli.EXIT_USAGE


class TestSpectrum:
    def test_single_input(self, tmp_path):
        save_png(tmp_path / "a.png", np.random.default_rng(2).uniform(size=(8, 8, 3)))
        assert cli.main(["spectrum", str(tmp_path / "a.png"), "--output", str(tmp_path / "s")]) == cli.EXIT_OK
        assert sorted(p.name for p in (tmp_path / "s").iterdir()) == ["a_dct.pgm"]

    def test_identical_pair(self, tmp_path):
        img = np.random.default_rng(3).uniform(size=(8, 8, 3))
        save_png(tmp_path / "a.png", img)
        save_png(tmp_path / "b.png", img)
        cli.main(["spectrum", str(tmp_path / "a.png"), str(tmp_path / "b.png"), "--output", str(tmp_path / "s")])
        assert not np.loadtxt(tmp_path / "s" / "distance.csv", delimiter=",").any()
        bands = (tmp_path / "s" / "bands.csv").read_text().splitlines()
        assert bands[0] == "band,mean_abs_diff" and len(bands) == 5

    def test_size_mismatch(self, tmp_path):
        save_png(tmp_path / "a.png", np.zeros((8, 8, 3)))
        save_png(tmp_path / "b.png", np.zeros((8, 9, 3)))
        assert cli.main(["spectrum", str(tmp_path / "a.png"), str(tmp_path / "b.png"),
                         "--output", str(tmp_path / "s")]) == cli.EXIT_USAGE


class TestGradcheck:
    def test_default_passes(self, capsys):
        assert cli.main(["gradcheck"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "FAIL" not in out and "adfl[ffl_style]" in out

    def test_impossible_tolerance_fails(self, capsys):
        assert cli.main(["gradcheck", "--set", "tol=1e-12", "--set", "points=5"]) == cli.EXIT_CHECK
        assert "failed" in capsys.readouterr().out

    def test_unknown_setting(self):
        assert cli.main(["gradcheck", "--set", "bogus=1"]) == cli.EXIT_USAGE


class TestTextures:
    def test_writes_pngs(self, tmp_path):
        assert cli.main(["textures", "--output", str(tmp_path / "t"), "--count", "3", "--size", "16"]) == cli.EXIT_OK
        assert len(list((tmp_path / "t").glob("*.png"))) == 3
