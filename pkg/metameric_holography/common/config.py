"""
Configuration management for the hologram toolkit.
"""

import argparse
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Tuple

import yaml

from .error_handler import InvalidConfigError
from .losses import FEATURE_NORMS, LOSS_KINDS, LossConfig
from .optimizer import TEMPORAL_MODES, OptimConfig
from .perception import DEFAULT_ALPHA, DEFAULT_PIXELS_PER_DEGREE, GazeContext
from .propagation import DEFAULT_DISTANCE, DEFAULT_PITCH, DEFAULT_WAVELENGTHS, WAVELENGTH_GREEN
from .slm import GRATINGS, MAX_BIT_DEPTH


@dataclass
class DisplayConfig:
    """SLM geometry and drive settings."""
    pitch_m: float = DEFAULT_PITCH
    wavelengths_m: List[float] = field(default_factory=lambda: list(DEFAULT_WAVELENGTHS))
    distance_m: float = DEFAULT_DISTANCE
    zero_pad: bool = False
    slm_width: Optional[int] = None
    slm_height: Optional[int] = None
    bit_depth: int = 8
    grating: str = "none"  # none | horizontal


@dataclass
class GazeConfig:
    """Fixation and pooling parameters."""
    gaze: List[float] = field(default_factory=lambda: [0.5, 0.5])
    pixels_per_degree: float = DEFAULT_PIXELS_PER_DEGREE
    alpha: float = DEFAULT_ALPHA
    fovea_threshold_px: float = 1.0
    blend_band_deg: float = 0.0  # 0 = hard foveal threshold


@dataclass
class LossSettings:
    """Loss selection and weighting."""
    loss_kind: str = "metameric"
    feature_norm: str = "L2"
    channel_weights: List[float] = field(default_factory=lambda: [1.0, 0.25, 0.25])
    foveal_weight: float = 1.0
    level_count: Optional[int] = None  # None = automatic
    metamer_seed: int = 0
    metamer_passes: int = 3
    compare_kinds: List[str] = field(default_factory=lambda: list(LOSS_KINDS))


@dataclass
class OptimSettings:
    """Optimiser settings."""
    steps: int = 200
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    warm_steps: int = 5
    warm_lr_factor: float = 0.2
    temporal_count: int = 5
    temporal_dither_rad: float = 0.0
    temporal_mode: str = "independent"


@dataclass
class OutputConfig:
    """Output locations and encodings."""
    out_dir: str = "./output"
    linear: bool = False
    resize: bool = False
    reconstruction_bit_depth: int = 16
    inset: Optional[List[int]] = None  # [x, y, size] of the peripheral report window


@dataclass
class PerformanceConfig:
    """Parallelism settings."""
    max_workers: int = 1


@dataclass
class LoggingConfig:
    """Logging configuration."""
    level: str = "INFO"
    file: Optional[str] = None
    show_progress: bool = True


_SECTIONS = {
    "display": DisplayConfig,
    "gaze": GazeConfig,
    "loss": LossSettings,
    "optim": OptimSettings,
    "output": OutputConfig,
    "performance": PerformanceConfig,
    "logging": LoggingConfig,
}


def parse_gaze(value: str) -> Tuple[float, float]:
    """Parse 'x,y' in normalized image coordinates, or the preset 'center'."""
    text = value.strip().lower()
    if text in ("center", "centre"):
        return 0.5, 0.5
    parts = text.split(",")
    if len(parts) != 2:
        raise InvalidConfigError(f"Gaze must be 'x,y' or 'center', got '{value}'")
    try:
        x, y = float(parts[0]), float(parts[1])
    except ValueError as e:
        raise InvalidConfigError(f"Gaze must be 'x,y' or 'center', got '{value}'") from e
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise InvalidConfigError(f"Gaze coordinates must lie in [0, 1], got '{value}'")
    return x, y


def _load_section(section_cls, data, name: str):
    """Build a section dataclass from a YAML mapping, rejecting unknown keys and bad types."""
    section = section_cls()
    if data is None:
        return section
    if not isinstance(data, dict):
        raise InvalidConfigError(f"Section '{name}' must be a mapping")

    known = {f.name: f for f in fields(section_cls)}
    for key, value in data.items():
        if key not in known:
            raise InvalidConfigError(f"Unknown setting '{name}.{key}'")
        default = getattr(section, key)
        if value is None:
            setattr(section, key, None)
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                raise InvalidConfigError(f"'{name}.{key}' must be true or false")
            setattr(section, key, value)
        elif isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidConfigError(f"'{name}.{key}' must be a number, got {value!r}")
            setattr(section, key, type(default)(value) if isinstance(default, float) else value)
        elif isinstance(default, list):
            if not isinstance(value, list):
                raise InvalidConfigError(f"'{name}.{key}' must be a list")
            setattr(section, key, list(value))
        else:
            setattr(section, key, value)
    return section


@dataclass
class RunConfig:
    """Main configuration of a toolkit run."""

    target: str = ""
    config_path: Optional[str] = None

    display: DisplayConfig = field(default_factory=DisplayConfig)
    gaze: GazeConfig = field(default_factory=GazeConfig)
    loss: LossSettings = field(default_factory=LossSettings)
    optim: OptimSettings = field(default_factory=OptimSettings)
    output: OutputConfig = field(default_factory=OutputConfig)
    performance: PerformanceConfig = field(default_factory=PerformanceConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    @classmethod
    def from_file(cls, config_path: str) -> 'RunConfig':
        """Load configuration from YAML file."""
        if not os.path.exists(config_path):
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise InvalidConfigError(f"Malformed configuration file {config_path}: {e}") from e

        data = data or {}
        if not isinstance(data, dict):
            raise InvalidConfigError(f"Configuration file {config_path} must hold a mapping")

        config = cls(config_path=config_path)
        target = data.get('target', config.target)
        config.target = "" if target is None else str(target)
        for name, section_cls in _SECTIONS.items():
            setattr(config, name, _load_section(section_cls, data.get(name), name))

        unknown = set(data) - set(_SECTIONS) - {'target'}
        if unknown:
            raise InvalidConfigError(f"Unknown configuration sections: {sorted(unknown)}")
        return config

    @classmethod
    def from_args(cls, args: argparse.Namespace, base: Optional['RunConfig'] = None) -> 'RunConfig':
        """Apply command line arguments on top of base (or the defaults). Given flags win."""
        config = base or cls()

        def given(name: str) -> bool:
            return getattr(args, name, None) is not None

        if given('target'):
            config.target = args.target

        # Display
        if given('distance'):
            config.display.distance_m = args.distance
        if given('pitch'):
            config.display.pitch_m = args.pitch
        if getattr(args, 'zero_pad', False):
            config.display.zero_pad = True
        if given('grating'):
            config.display.grating = args.grating
        if given('bit_depth'):
            config.display.bit_depth = args.bit_depth

        # Gaze
        if given('gaze'):
            config.gaze.gaze = list(parse_gaze(args.gaze))
        if given('alpha'):
            config.gaze.alpha = args.alpha
        if given('ppd'):
            config.gaze.pixels_per_degree = args.ppd

        # Loss
        if given('loss'):
            config.loss.loss_kind = args.loss
        if given('losses'):
            config.loss.compare_kinds = [k.strip() for k in args.losses.split(',') if k.strip()]
        if given('feature_norm'):
            config.loss.feature_norm = args.feature_norm

        # Optimiser
        if given('steps'):
            config.optim.steps = args.steps
        if given('lr'):
            config.optim.learning_rate = args.lr
        if given('seed'):
            config.optim.seed = args.seed
        if given('count'):
            config.optim.temporal_count = args.count
        if given('dither'):
            config.optim.temporal_dither_rad = args.dither
        if given('temporal_mode'):
            config.optim.temporal_mode = args.temporal_mode

        # Output
        if given('out'):
            config.output.out_dir = args.out
        if getattr(args, 'resize', False):
            config.output.resize = True
        if getattr(args, 'linear', False):
            config.output.linear = True

        # Performance
        if given('workers'):
            config.performance.max_workers = args.workers

        # Logging
        if given('log_level'):
            config.logging.level = args.log_level
        if given('log_file'):
            config.logging.file = args.log_file
        if getattr(args, 'no_progress', False):
            config.logging.show_progress = False

        return config

    def validate(self, require_target: bool = False) -> None:
        """Validate configuration parameters; every violation is reported at once."""
        errors = []

        if require_target:
            if not self.target:
                errors.append("Target image is required")
            elif not os.path.exists(self.target):
                errors.append(f"Target image does not exist: {self.target}")

        display = self.display
        if not (display.pitch_m > 0 and math.isfinite(display.pitch_m)):
            errors.append("display.pitch_m must be greater than 0")
        if not display.wavelengths_m or len(display.wavelengths_m) not in (1, 3):
            errors.append("display.wavelengths_m must list 1 or 3 wavelengths")
        elif not all(isinstance(w, (int, float)) and w > 0 for w in display.wavelengths_m):
            errors.append("display.wavelengths_m must be positive")
        if not math.isfinite(display.distance_m):
            errors.append("display.distance_m must be finite")
        for name in ('slm_width', 'slm_height'):
            value = getattr(display, name)
            if value is not None and value < 2:
                errors.append(f"display.{name} must be at least 2")
        if not 1 <= display.bit_depth <= MAX_BIT_DEPTH:
            errors.append(f"display.bit_depth must lie in [1, {MAX_BIT_DEPTH}]")
        if display.grating not in GRATINGS:
            errors.append(f"display.grating must be one of {GRATINGS}")

        gaze = self.gaze
        if len(gaze.gaze) != 2 or not all(0.0 <= g <= 1.0 for g in gaze.gaze):
            errors.append("gaze.gaze must be two coordinates in [0, 1]")
        if not gaze.pixels_per_degree > 0:
            errors.append("gaze.pixels_per_degree must be greater than 0")
        if not gaze.alpha >= 0:
            errors.append("gaze.alpha must be >= 0")
        if not gaze.fovea_threshold_px >= 0:
            errors.append("gaze.fovea_threshold_px must be >= 0")
        if not gaze.blend_band_deg >= 0:
            errors.append("gaze.blend_band_deg must be >= 0")

        loss = self.loss
        if loss.loss_kind not in LOSS_KINDS:
            errors.append(f"loss.loss_kind must be one of {LOSS_KINDS}")
        unknown = [k for k in loss.compare_kinds if k not in LOSS_KINDS]
        if unknown or not loss.compare_kinds:
            errors.append(f"loss.compare_kinds must be a nonempty subset of {LOSS_KINDS}")
        if loss.feature_norm not in FEATURE_NORMS:
            errors.append(f"loss.feature_norm must be one of {FEATURE_NORMS}")
        if len(loss.channel_weights) != 3 or any(w < 0 for w in loss.channel_weights):
            errors.append("loss.channel_weights must be three values >= 0")
        if not loss.foveal_weight >= 0:
            errors.append("loss.foveal_weight must be >= 0")
        if loss.level_count is not None and loss.level_count < 1:
            errors.append("loss.level_count must be >= 1 or null")
        if loss.metamer_passes < 1:
            errors.append("loss.metamer_passes must be >= 1")

        optim = self.optim
        if optim.steps < 1:
            errors.append("optim.steps must be at least 1")
        if not optim.learning_rate > 0:
            errors.append("optim.learning_rate must be greater than 0")
        if not (0 <= optim.beta1 < 1 and 0 <= optim.beta2 < 1):
            errors.append("optim.beta1 and optim.beta2 must lie in [0, 1)")
        if not optim.eps > 0:
            errors.append("optim.eps must be greater than 0")
        if optim.warm_steps < 1:
            errors.append("optim.warm_steps must be at least 1")
        if not optim.warm_lr_factor > 0:
            errors.append("optim.warm_lr_factor must be greater than 0")
        if optim.temporal_count < 1:
            errors.append("optim.temporal_count must be at least 1")
        if not optim.temporal_dither_rad >= 0:
            errors.append("optim.temporal_dither_rad must be >= 0")
        if optim.temporal_mode not in TEMPORAL_MODES:
            errors.append(f"optim.temporal_mode must be one of {TEMPORAL_MODES}")

        output = self.output
        if output.reconstruction_bit_depth not in (8, 16):
            errors.append("output.reconstruction_bit_depth must be 8 or 16")
        if output.inset is not None and (len(output.inset) != 3 or output.inset[2] < 1):
            errors.append("output.inset must be [x, y, size] with size >= 1")

        if self.performance.max_workers <= 0:
            errors.append("performance.max_workers must be greater than 0")

        if str(self.logging.level).upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR'):
            errors.append("logging.level must be DEBUG, INFO, WARNING or ERROR")

        if errors:
            raise InvalidConfigError(
                "Configuration validation failed:\n" + "\n".join(f"- {error}" for error in errors))

    def to_dict(self) -> dict:
        """Plain mapping for manifests."""
        return asdict(self)

    def wavelengths_for(self, channels: int) -> List[float]:
        """Configured wavelengths for a target with the given channel count."""
        wavelengths = list(self.display.wavelengths_m)
        if channels == len(wavelengths):
            return wavelengths
        if channels == 1:
            # grayscale targets run on the green line
            return [WAVELENGTH_GREEN]
        raise InvalidConfigError(
            f"Target has {channels} channels but {len(wavelengths)} wavelength(s) are configured")

    def gaze_context(self) -> GazeContext:
        return GazeContext(
            gaze=tuple(self.gaze.gaze),
            pixels_per_degree=float(self.gaze.pixels_per_degree),
            alpha=float(self.gaze.alpha),
            fovea_threshold_px=float(self.gaze.fovea_threshold_px),
            blend_band_deg=float(self.gaze.blend_band_deg),
        )

    def loss_config(self) -> LossConfig:
        return LossConfig(
            feature_norm=self.loss.feature_norm,
            channel_weights=tuple(float(w) for w in self.loss.channel_weights),
            foveal_weight=float(self.loss.foveal_weight),
            level_count=self.loss.level_count,
            metamer_seed=int(self.loss.metamer_seed),
            metamer_passes=int(self.loss.metamer_passes),
        )

    def optim_config(self, loss_kind: Optional[str] = None) -> OptimConfig:
        o = self.optim
        return OptimConfig(
            steps=int(o.steps), learning_rate=float(o.learning_rate),
            beta1=float(o.beta1), beta2=float(o.beta2), eps=float(o.eps), seed=int(o.seed),
            loss_kind=loss_kind or self.loss.loss_kind,
            warm_steps=int(o.warm_steps), warm_lr_factor=float(o.warm_lr_factor),
            temporal_count=int(o.temporal_count), temporal_dither=float(o.temporal_dither_rad),
            temporal_mode=str(o.temporal_mode),
        )


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """Add common command line arguments to parser."""
    parser.add_argument(
        '--config', '-c',
        type=str,
        help='Configuration file path (YAML, see config.yaml.template)'
    )
    parser.add_argument(
        '--log-level',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        help='Logging level (default: from config file or INFO)'
    )
    parser.add_argument(
        '--log-file',
        type=str,
        help='Also write the log to this file'
    )
    parser.add_argument(
        '--no-progress',
        action='store_true',
        help='Disable the single-line progress bar'
    )


def add_display_arguments(parser: argparse.ArgumentParser) -> None:
    """Add display model command line arguments."""
    parser.add_argument(
        '--distance',
        type=float,
        help='Focal distance in meters (default: from config file or 0.15)'
    )
    parser.add_argument(
        '--pitch',
        type=float,
        help='SLM pixel pitch in meters (default: 8e-6)'
    )
    parser.add_argument(
        '--zero-pad',
        action='store_true',
        help='Propagate on a 2x zero-padded grid'
    )
    parser.add_argument(
        '--grating',
        choices=list(GRATINGS),
        help='Grating applied before quantization (default: none)'
    )
    parser.add_argument(
        '--bit-depth',
        type=int,
        help='SLM drive bit depth (default: 8)'
    )


def add_gaze_arguments(parser: argparse.ArgumentParser) -> None:
    """Add gaze and pooling command line arguments."""
    parser.add_argument(
        '--gaze',
        type=str,
        help="Fixation in normalized image coordinates 'x,y', or 'center'"
    )
    parser.add_argument(
        '--alpha',
        type=float,
        help='Pooling rate in degrees per squared degree of eccentricity (default: 0.05)'
    )
    parser.add_argument(
        '--ppd',
        type=float,
        help='Pixels per degree of visual angle (default: 109.7)'
    )


def add_optim_arguments(parser: argparse.ArgumentParser) -> None:
    """Add optimiser command line arguments."""
    parser.add_argument(
        '--loss',
        choices=list(LOSS_KINDS),
        help='Loss to optimise (default: metameric)'
    )
    parser.add_argument(
        '--steps',
        type=int,
        help='Number of Adam iterations (default: 200)'
    )
    parser.add_argument(
        '--lr',
        type=float,
        help='Adam learning rate in radians (default: 0.1)'
    )
    parser.add_argument(
        '--seed',
        type=int,
        help='Seed of the random phase initialisation (default: 0)'
    )


def add_output_arguments(parser: argparse.ArgumentParser) -> None:
    """Add input/output command line arguments."""
    parser.add_argument(
        '--target', '-t',
        type=str,
        help='Target image (can be specified in config file)'
    )
    parser.add_argument(
        '--out', '-o',
        type=str,
        help='Output directory (default: ./output)'
    )
    parser.add_argument(
        '--resize',
        action='store_true',
        help='Bicubic-resize the target to the configured SLM size'
    )
    parser.add_argument(
        '--linear',
        action='store_true',
        help='Treat image files as linear; skip sRGB decoding and encoding'
    )
