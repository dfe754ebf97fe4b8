"""
Tests for configuration management.
"""

import argparse
import os
import tempfile

import pytest
import yaml

from metameric_holography.common.config import (
    RunConfig,
    add_common_arguments,
    add_display_arguments,
    add_gaze_arguments,
    add_optim_arguments,
    add_output_arguments,
    parse_gaze,
)
from metameric_holography.common.error_handler import InvalidConfigError
from metameric_holography.common.propagation import DEFAULT_WAVELENGTHS, WAVELENGTH_GREEN


def _write_yaml(content: str) -> str:
    with tempfile.NamedTemporaryFile(mode='w', suffix='.yaml', delete=False) as f:
        f.write(content)
        return f.name


def test_config_defaults():
    """Test default configuration values."""
    config = RunConfig()

    assert config.target == ""
    assert config.display.pitch_m == 8e-6
    assert config.display.distance_m == 0.15
    assert config.display.wavelengths_m == list(DEFAULT_WAVELENGTHS)
    assert config.display.grating == "none"
    assert config.display.bit_depth == 8

    assert config.gaze.gaze == [0.5, 0.5]
    assert config.gaze.pixels_per_degree == 109.7
    assert config.gaze.alpha == 0.05

    assert config.loss.loss_kind == "metameric"
    assert config.loss.feature_norm == "L2"
    assert config.optim.steps == 200
    assert config.optim.seed == 0
    assert config.optim.temporal_count == 5

    assert config.output.reconstruction_bit_depth == 16
    assert config.performance.max_workers == 1
    assert config.logging.level == "INFO"

    config.validate()


def test_config_from_yaml():
    """Test loading configuration from YAML file."""
    path = _write_yaml("""
target: "scene.png"
display:
  distance_m: 0.2
  grating: horizontal
gaze:
  gaze: [0.25, 0.75]
  alpha: 0.1
loss:
  loss_kind: mse
  channel_weights: [1.0, 0.5, 0.5]
optim:
  steps: 50
  learning_rate: 0.05
performance:
  max_workers: 4
""")
    try:
        config = RunConfig.from_file(path)

        assert config.config_path == path
        assert config.target == "scene.png"
        assert config.display.distance_m == 0.2
        assert config.display.grating == "horizontal"
        assert config.gaze.gaze == [0.25, 0.75]
        assert config.gaze.alpha == 0.1
        assert config.loss.loss_kind == "mse"
        assert config.loss.channel_weights == [1.0, 0.5, 0.5]
        assert config.optim.steps == 50
        assert config.optim.learning_rate == 0.05
        assert config.performance.max_workers == 4
        # untouched sections keep their defaults
        assert config.display.pitch_m == 8e-6
    finally:
        os.unlink(path)


def test_config_file_not_found():
    with pytest.raises(FileNotFoundError):
        RunConfig.from_file("/nonexistent/config.yaml")


@pytest.mark.parametrize("content, fragment", [
    ("display:\n  distance_m: [\n", "Malformed"),
    ("camera:\n  fps: 30\n", "Unknown configuration sections"),
    ("display:\n  focal_length: 0.1\n", "display.focal_length"),
    ("optim:\n  steps: many\n", "optim.steps"),
    ("display:\n  zero_pad: 1\n", "display.zero_pad"),
    ("- a\n- b\n", "mapping"),
])
def test_config_file_errors(content, fragment):
    """Malformed files, unknown keys and wrong types are configuration errors."""
    path = _write_yaml(content)
    try:
        with pytest.raises(InvalidConfigError) as exc_info:
            RunConfig.from_file(path)
        assert fragment in str(exc_info.value)
    finally:
        os.unlink(path)


def test_config_validation():
    """Every violation is reported in one error."""
    config = RunConfig()
    config.display.pitch_m = 0.0
    config.gaze.alpha = -1.0
    config.optim.steps = 0
    config.loss.loss_kind = "perceptual"
    config.optim.temporal_mode = "interleaved"

    with pytest.raises(InvalidConfigError) as exc_info:
        config.validate()

    error_message = str(exc_info.value)
    assert "display.pitch_m" in error_message
    assert "gaze.alpha" in error_message
    assert "optim.steps" in error_message
    assert "loss.loss_kind" in error_message
    assert "optim.temporal_mode" in error_message


def test_validation_requires_existing_target():
    config = RunConfig(target="/nonexistent/scene.png")
    with pytest.raises(InvalidConfigError, match="does not exist"):
        config.validate(require_target=True)

    with pytest.raises(InvalidConfigError, match="Target image is required"):
        RunConfig().validate(require_target=True)


def test_alpha_zero_is_valid():
    """alpha = 0 means the whole image is foveal; it is not an error."""
    config = RunConfig()
    config.gaze.alpha = 0.0
    config.validate()


class TestParseGaze:
    """Test gaze argument parsing."""

    def test_center_preset(self):
        assert parse_gaze("center") == (0.5, 0.5)
        assert parse_gaze(" Centre ") == (0.5, 0.5)

    def test_coordinates(self):
        assert parse_gaze("0.25,0.75") == (0.25, 0.75)

    @pytest.mark.parametrize("value", ["0.5", "a,b", "1.5,0.5", "0.1,0.2,0.3"])
    def test_invalid(self, value):
        with pytest.raises(InvalidConfigError):
            parse_gaze(value)


class TestCommandLineOverrides:
    """Test command line arguments applied on top of file values."""

    def _parser(self):
        parser = argparse.ArgumentParser()
        add_common_arguments(parser)
        add_display_arguments(parser)
        add_gaze_arguments(parser)
        add_optim_arguments(parser)
        add_output_arguments(parser)
        return parser

    def test_flags_override_file(self):
        path = _write_yaml("optim:\n  steps: 50\n  seed: 3\ngaze:\n  alpha: 0.2\n")
        try:
            args = self._parser().parse_args([
                '--target', 'scene.png', '--steps', '10', '--gaze', 'center',
                '--distance', '0.3', '--grating', 'horizontal', '--out', 'results',
                '--no-progress', '--zero-pad',
            ])
            config = RunConfig.from_args(args, RunConfig.from_file(path))

            assert config.target == "scene.png"
            assert config.optim.steps == 10
            assert config.optim.seed == 3
            assert config.gaze.alpha == 0.2
            assert config.gaze.gaze == [0.5, 0.5]
            assert config.display.distance_m == 0.3
            assert config.display.grating == "horizontal"
            assert config.display.zero_pad is True
            assert config.output.out_dir == "results"
            assert config.logging.show_progress is False
        finally:
            os.unlink(path)

    def test_absent_flags_keep_defaults(self):
        config = RunConfig.from_args(self._parser().parse_args([]))
        assert config.optim.steps == 200
        assert config.display.zero_pad is False
        assert config.output.resize is False

    def test_compare_and_average_flags(self):
        args = argparse.Namespace(losses="mse, metameric", workers=2, count=3, dither=0.1,
                                  temporal_mode="warm")
        config = RunConfig.from_args(args)

        assert config.loss.compare_kinds == ["mse", "metameric"]
        assert config.performance.max_workers == 2
        assert config.optim.temporal_count == 3
        assert config.optim.temporal_dither_rad == 0.1
        assert config.optim.temporal_mode == "warm"


class TestDerivedSettings:
    """Test conversion into library settings."""

    def test_wavelengths_for(self):
        config = RunConfig()
        assert config.wavelengths_for(3) == list(DEFAULT_WAVELENGTHS)
        assert config.wavelengths_for(1) == [WAVELENGTH_GREEN]

        config.display.wavelengths_m = [WAVELENGTH_GREEN]
        with pytest.raises(InvalidConfigError):
            config.wavelengths_for(3)

    def test_gaze_context(self):
        config = RunConfig()
        config.gaze.gaze = [0.2, 0.8]
        ctx = config.gaze_context()
        assert ctx.gaze == (0.2, 0.8)
        assert ctx.pixels_per_degree == config.gaze.pixels_per_degree
        assert hash(ctx) == hash(config.gaze_context())

    def test_optim_config(self):
        config = RunConfig()
        config.optim.temporal_dither_rad = 0.3
        cfg = config.optim_config(loss_kind="blur_match")
        assert cfg.loss_kind == "blur_match"
        assert cfg.temporal_dither == 0.3
        assert cfg.temporal_mode == "independent"
        assert config.optim_config().loss_kind == "metameric"

    def test_loss_config(self):
        cfg = RunConfig().loss_config()
        assert cfg.channel_weights == (1.0, 0.25, 0.25)
        cfg.validate()

    def test_to_dict_round_trips_through_yaml(self):
        """The echoed config can be loaded back as a config file."""
        config = RunConfig(target="scene.png")
        config.optim.steps = 7
        data = config.to_dict()
        data.pop("config_path")
        path = _write_yaml(yaml.safe_dump(data))
        try:
            loaded = RunConfig.from_file(path)
            assert loaded.optim.steps == 7
            assert loaded.target == "scene.png"
        finally:
            os.unlink(path)
