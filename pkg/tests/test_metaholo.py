"""
Tests for the metaholo.py command line tool.
"""

import json
import math
import os
import sys
import tempfile
from unittest.mock import Mock, patch

import pytest
import torch
import yaml

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from metaholo import HologramPipeline, create_argument_parser, main
from metameric_holography.common.config import RunConfig
from metameric_holography.common.image_io import read_raw_dump, save_image, write_raw_dump
from metameric_holography.common.propagation import WAVELENGTH_GREEN
from metameric_holography.common.slm import import_phase, read_sidecar


# Small images need a coarse viewing geometry to have any periphery
GEOMETRY = ["--ppd", "20", "--alpha", "0.5", "--no-progress"]


def _target_image(channels=3, size=32, seed=0):
    ys, xs = torch.meshgrid(torch.linspace(0, 1, size, dtype=torch.float64),
                            torch.linspace(0, 1, size, dtype=torch.float64), indexing="ij")
    base = 0.5 + 0.3 * torch.sin(8 * xs) * torch.cos(6 * ys)
    noise = torch.rand((channels, size, size), generator=torch.Generator().manual_seed(seed),
                       dtype=torch.float64)
    return (base + 0.1 * (noise - 0.5)).clamp(0.0, 1.0)


class TestCommands:
    """End-to-end runs of every command on small images."""

    def setup_method(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = self.temp_dir.name
        self.out = os.path.join(self.root, "out")
        self.target = save_image(os.path.join(self.root, "target.png"), _target_image(), bit_depth=16)

    def teardown_method(self):
        self.temp_dir.cleanup()

    def run(self, *args):
        return main(list(args))

    def _optimise(self, *extra):
        code = self.run("optimise", "--target", self.target, "--out", self.out,
                        "--steps", "3", "--loss", "mse", *GEOMETRY, *extra)
        assert code == 0
        return os.path.join(self.out, "phase.yaml")

    def test_optimise_outputs(self):
        self._optimise()

        for name in ("phase_c0.png", "phase_c1.png", "phase_c2.png", "phase.yaml",
                     "reconstruction.png", "reconstruction.f32", "reconstruction.f32.yaml",
                     "loss_history.tsv", "optimise_manifest.json"):
            assert os.path.exists(os.path.join(self.out, name)), name

        with open(os.path.join(self.out, "loss_history.tsv"), encoding="utf-8") as f:
            lines = f.read().splitlines()
        assert lines[0] == "iteration\tloss"
        assert len(lines) == 4

        with open(os.path.join(self.out, "optimise_manifest.json"), encoding="utf-8") as f:
            manifest = json.load(f)
        assert manifest["config"]["optim"]["steps"] == 3
        assert manifest["results"]["loss_kind"] == "mse"
        assert all("sha256" in entry for entry in manifest["outputs"])
        assert manifest["inputs"][0]["path"] == self.target

    def test_simulate_reproduces_optimised_reconstruction(self):
        sidecar = self._optimise("--grating", "horizontal")
        sim_out = os.path.join(self.root, "sim")
        assert self.run("simulate", "--phase", sidecar, "--out", sim_out, "--no-progress") == 0

        optimised = read_raw_dump(os.path.join(self.out, "reconstruction.f32"))
        simulated = read_raw_dump(os.path.join(sim_out, "simulated.f32"))
        relative = float(((simulated - optimised) ** 2).mean() / (optimised ** 2).mean())
        assert relative < 0.01
        assert os.path.exists(os.path.join(sim_out, "simulated.png"))

    def test_seeded_runs_are_byte_identical(self):
        digests = []
        for run in ("a", "b"):
            out = os.path.join(self.root, run)
            assert self.run("optimise", "--target", self.target, "--out", out, "--steps", "2",
                            "--loss", "mse", "--seed", "7", *GEOMETRY) == 0
            with open(os.path.join(out, "optimise_manifest.json"), encoding="utf-8") as f:
                outputs = json.load(f)["outputs"]
            digests.append({o["path"]: o["sha256"] for o in outputs if o["path"].startswith("phase")})

        assert len(digests[0]) == 4
        assert digests[0] == digests[1]

    def test_simulate_override_matching_sidecar_distance(self):
        sidecar = self._optimise()
        plain, override = os.path.join(self.root, "plain"), os.path.join(self.root, "override")
        assert self.run("simulate", "--phase", sidecar, "--out", plain, "--no-progress") == 0
        assert self.run("simulate", "--phase", sidecar, "--out", override,
                        "--override-distance", str(read_sidecar(sidecar).distance_m), "--no-progress") == 0

        assert torch.equal(read_raw_dump(os.path.join(plain, "simulated.f32")),
                           read_raw_dump(os.path.join(override, "simulated.f32")))

    def test_simulate_distance_override(self):
        sidecar = self._optimise()
        sim_out = os.path.join(self.root, "sim")
        assert self.run("simulate", "--phase", sidecar, "--out", sim_out,
                        "--override-distance", "0.3", "--no-progress") == 0

        with open(os.path.join(sim_out, "simulate_manifest.json"), encoding="utf-8") as f:
            manifest = json.load(f)
        assert manifest["results"]["distance_m"] == 0.3

    def test_simulate_wavelength_conflict(self):
        sidecar = self._optimise()
        config_path = os.path.join(self.root, "red.yaml")
        with open(config_path, "w", encoding="utf-8") as f:
            yaml.safe_dump({"display": {"wavelengths_m": [6.4e-7, 5.2e-7, 4.5e-7]}}, f)

        code = self.run("simulate", "--phase", sidecar, "--config", config_path,
                        "--out", os.path.join(self.root, "sim"), "--no-progress")
        assert code == 2

    def test_simulate_corrupt_phase_set(self):
        sidecar = self._optimise()
        with open(os.path.join(self.out, "phase_c1.png"), "wb") as f:
            f.write(b"broken")
        code = self.run("simulate", "--phase", sidecar, "--out", os.path.join(self.root, "sim"),
                        "--no-progress")
        assert code == 3

    def test_compare(self):
        code = self.run("compare", "--target", self.target, "--out", self.out, "--steps", "2",
                        "--losses", "mse,blur_match", "--workers", "2", *GEOMETRY)
        assert code == 0

        with open(os.path.join(self.out, "compare.tsv"), encoding="utf-8") as f:
            lines = f.read().splitlines()
        header = lines[0].split("\t")
        rows = [dict(zip(header, line.split("\t"))) for line in lines[1:]]

        assert [row["loss"] for row in rows] == ["mse", "blur_match"]
        for column in ("mse", "psnr", "foveal_mse", "peripheral_mse", "metameric"):
            assert column in header
        # identical seeds give identical initial phases across rows
        assert rows[0]["init_sha256"] == rows[1]["init_sha256"]
        assert os.path.exists(os.path.join(self.out, "insets", "mse_fovea.png"))
        assert os.path.exists(os.path.join(self.out, "insets", "blur_match_periphery.png"))
        assert os.path.exists(os.path.join(self.out, "mse", "phase_mse.yaml"))

    def test_compare_single_loss(self):
        code = self.run("compare", "--target", self.target, "--out", self.out, "--steps", "2",
                        "--losses", "mse", *GEOMETRY)
        assert code == 0
        with open(os.path.join(self.out, "compare.tsv"), encoding="utf-8") as f:
            assert len(f.read().splitlines()) == 2

    def test_metamer_without_pooling_is_target(self):
        code = self.run("metamer", "--target", self.target, "--out", self.out,
                        "--ppd", "20", "--alpha", "0", "--no-progress")
        assert code == 0
        with open(os.path.join(self.out, "metamer_manifest.json"), encoding="utf-8") as f:
            results = json.load(f)["results"]
        assert results["mse"] == 0.0
        assert results["metameric_loss"] == 0.0

    def test_metamer(self):
        code = self.run("metamer", "--target", self.target, "--out", self.out, "--seed", "3",
                        "--passes", "2", *GEOMETRY)
        assert code == 0

        with open(os.path.join(self.out, "metamer_manifest.json"), encoding="utf-8") as f:
            results = json.load(f)["results"]
        assert results["seed"] == 3
        assert results["metameric_loss"] < results["noise_metameric_loss"]
        assert os.path.exists(os.path.join(self.out, "metamer.png"))
        assert os.path.exists(os.path.join(self.out, "metamer_side_by_side.png"))
        assert os.path.exists(os.path.join(self.out, "metamer_summary.txt"))

    def test_encode_regrates_phase_set(self):
        sidecar = self._optimise()
        enc_out = os.path.join(self.root, "enc")
        assert self.run("encode", "--phase", sidecar, "--grating", "horizontal",
                        "--out", enc_out, "--no-progress") == 0

        original, _ = import_phase(sidecar)
        encoded, metadata = import_phase(os.path.join(enc_out, "encoded.yaml"))
        assert metadata.grating == "horizontal"
        expected = original.data.clone()
        expected[..., ::2] = (expected[..., ::2] + 128) % 256
        assert torch.equal(encoded.data, expected)

    def test_encode_raw_phase_dump(self):
        phase = torch.rand((1, 16, 16), generator=torch.Generator().manual_seed(1), dtype=torch.float64) * 6.0
        raw = write_raw_dump(os.path.join(self.root, "phase.f32"), phase)
        assert self.run("encode", "--phase", raw, "--bit-depth", "10", "--out", self.out,
                        "--no-progress") == 0

        metadata = read_sidecar(os.path.join(self.out, "encoded.yaml"))
        assert metadata.bit_depth == 10
        assert metadata.wavelengths_m == [WAVELENGTH_GREEN]

    def test_average(self):
        code = self.run("average", "--target", self.target, "--out", self.out, "--steps", "3",
                        "--loss", "mse", "--count", "2", "--dither", "0.3", *GEOMETRY)
        assert code == 0

        with open(os.path.join(self.out, "average.tsv"), encoding="utf-8") as f:
            lines = f.read().splitlines()
        assert lines[0].split("\t")[:4] == ["region", "count", "single_mse", "average_mse"]
        assert len(lines) == 4
        assert os.path.exists(os.path.join(self.out, "frames", "frame_1.yaml"))

    def test_average_of_five_frames_halves_the_error(self):
        code = self.run("average", "--target", self.target, "--out", self.out, "--steps", "200",
                        "--loss", "mse", "--count", "5", *GEOMETRY)
        assert code == 0

        with open(os.path.join(self.out, "average.tsv"), encoding="utf-8") as f:
            header, full = [line.split("\t") for line in f.read().splitlines()[:2]]
        row = dict(zip(header, full))
        assert row["region"] == "full"
        assert float(row["frame_variance"]) > 0.0
        assert float(row["ratio"]) <= 0.5

    def test_average_warm_mode(self):
        code = self.run("average", "--target", self.target, "--out", self.out, "--steps", "3",
                        "--loss", "mse", "--count", "2", "--temporal-mode", "warm", "--dither", "0.3",
                        *GEOMETRY)
        assert code == 0

        with open(os.path.join(self.out, "average_manifest.json"), encoding="utf-8") as f:
            manifest = json.load(f)
        assert manifest["results"]["mode"] == "warm"
        assert manifest["config"]["optim"]["temporal_dither_rad"] == 0.3

    def test_average_single_frame_equals_reconstruction(self):
        code = self.run("average", "--target", self.target, "--out", self.out, "--steps", "2",
                        "--loss", "mse", "--count", "1", *GEOMETRY)
        assert code == 0
        single = read_raw_dump(os.path.join(self.out, "single_frame.f32"))
        average = read_raw_dump(os.path.join(self.out, "average.f32"))
        assert torch.equal(single, average)


class TestFailures:
    """Test exit codes of failing runs."""

    def setup_method(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = self.temp_dir.name
        self.target = save_image(os.path.join(self.root, "target.png"), _target_image(), bit_depth=16)

    def teardown_method(self):
        self.temp_dir.cleanup()

    def test_missing_target(self, capsys):
        missing = os.path.join(self.root, "missing.png")
        code = main(["optimise", "--target", missing, "--out", self.root, "--no-progress"])

        assert code == 3
        assert f"(file: {missing})" in capsys.readouterr().out

    def test_missing_phase_set_names_the_sidecar(self, capsys):
        sidecar = os.path.join(self.root, "absent.yaml")
        code = main(["simulate", "--phase", sidecar, "--out", self.root, "--no-progress"])

        assert code == 3
        out = capsys.readouterr().out
        assert "Error in simulate" in out
        assert f"(file: {sidecar})" in out

    def test_no_target(self):
        assert main(["optimise", "--out", self.root, "--no-progress"]) == 2

    def test_invalid_gaze(self):
        assert main(["optimise", "--target", self.target, "--gaze", "2,2", "--out", self.root]) == 2

    def test_invalid_steps(self):
        assert main(["optimise", "--target", self.target, "--steps", "0", "--out", self.root]) == 2

    def test_size_mismatch_needs_resize(self):
        config_path = os.path.join(self.root, "slm.yaml")
        with open(config_path, "w", encoding="utf-8") as f:
            yaml.safe_dump({"display": {"slm_width": 24, "slm_height": 16}}, f)
        args = ["optimise", "--target", self.target, "--config", config_path, "--loss", "mse",
                "--steps", "1", "--out", os.path.join(self.root, "out"), *GEOMETRY]

        assert main(args) == 2
        assert main(args + ["--resize"]) == 0
        _, metadata = import_phase(os.path.join(self.root, "out", "phase.yaml"))
        assert (metadata.width, metadata.height) == (24, 16)

    def test_divergence(self):
        def exploding_loss(kind, target, ctx, cfg):
            return lambda image: image.sum() * float("nan")

        with patch("metameric_holography.common.optimizer.build_loss", exploding_loss):
            code = main(["optimise", "--target", self.target, "--steps", "2", "--loss", "mse",
                         "--out", self.root, *GEOMETRY])
        assert code == 4

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            create_argument_parser().parse_args(["render"])


class TestInsetWindows:
    """Test report window placement."""

    def _pipeline(self, temp_dir, inset=None):
        config = RunConfig()
        config.output.out_dir = temp_dir
        config.output.inset = inset
        config.gaze.pixels_per_degree = 20.0
        config.gaze.alpha = 0.5
        return HologramPipeline(config, logger=Mock(), argv=[])

    def test_default_windows(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            pipeline = self._pipeline(temp_dir)
            windows = pipeline.inset_windows(pipeline.gaze_context(), 64, 64)

        radius = math.sqrt(20.0 / 0.5)
        assert windows["fovea"] == (28, 28, 8)
        assert windows["periphery"] == (int(round(32 + 2 * radius - 4)), 28, 8)

    def test_configured_periphery(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            pipeline = self._pipeline(temp_dir, inset=[2, 3, 10])
            windows = pipeline.inset_windows(pipeline.gaze_context(), 64, 64)

        assert windows["periphery"] == (2, 3, 10)
        assert windows["fovea"][2] == 10

    def test_windows_stay_inside(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            pipeline = self._pipeline(temp_dir)
            pipeline.config.gaze.gaze = [1.0, 0.0]
            windows = pipeline.inset_windows(pipeline.gaze_context(), 32, 32)

        for x, y, size in windows.values():
            assert 0 <= x <= 32 - size and 0 <= y <= 32 - size
