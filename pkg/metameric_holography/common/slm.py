"""
SLM drive preparation: horizontal pi grating, phase quantization and the
phase-set file format.

A phase set on disk is one grayscale PNG per channel (`<stem>_c<i>.png`) plus
a YAML sidecar (`<stem>.yaml`) describing the display geometry.
"""

import math
import os
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
import yaml

from .. import __version__
from .error_handler import ConfigConflictError, FormatError, InvalidInputError
from .image_io import load_codes, save_codes
from .propagation import DEFAULT_PITCH, PI_ON_GRID, PhaseMap, wrap_phase


GRATINGS = ("none", "horizontal")
DEFAULT_BIT_DEPTH = 8
MAX_BIT_DEPTH = 16


@dataclass
class QuantizedPhase:
    """Integer drive codes shaped (channels, height, width); code v means 2*pi*v / 2^bit_depth."""
    data: torch.Tensor
    bit_depth: int = DEFAULT_BIT_DEPTH

    def __post_init__(self):
        if not 1 <= self.bit_depth <= MAX_BIT_DEPTH:
            raise InvalidInputError(f"bit_depth must lie in [1, {MAX_BIT_DEPTH}], got {self.bit_depth}")
        if self.data.dim() != 3:
            raise InvalidInputError("Quantized phase must be (channels, height, width)")
        if self.data.numel() and (int(self.data.min()) < 0 or int(self.data.max()) >= self.levels):
            raise InvalidInputError(f"Codes must lie in [0, {self.levels - 1}]")

    @property
    def levels(self) -> int:
        return 2 ** self.bit_depth


@dataclass
class PhaseMetadata:
    """Sidecar contents of an exported phase set."""
    pitch_m: float = DEFAULT_PITCH
    wavelengths_m: List[float] = field(default_factory=list)
    distance_m: float = 0.15
    gaze_xy: List[float] = field(default_factory=lambda: [0.5, 0.5])
    grating: str = "none"
    version: str = __version__
    bit_depth: int = DEFAULT_BIT_DEPTH
    width: int = 0
    height: int = 0
    channels: int = 0
    files: List[str] = field(default_factory=list)
    # Per-channel mean target intensity; empty means unit brightness
    brightness: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PhaseMetadata":
        try:
            return cls(
                pitch_m=float(data["pitch_m"]),
                wavelengths_m=[float(w) for w in data["wavelengths_m"]],
                distance_m=float(data["distance_m"]),
                gaze_xy=[float(g) for g in data["gaze_xy"]],
                grating=str(data.get("grating", "none")),
                version=str(data.get("version", "")),
                bit_depth=int(data.get("bit_depth", DEFAULT_BIT_DEPTH)),
                width=int(data["width"]),
                height=int(data["height"]),
                channels=int(data["channels"]),
                files=[str(f) for f in data["files"]],
                brightness=[float(b) for b in data.get("brightness") or []],
            )
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"Sidecar is missing or has a malformed field: {e}") from e


def apply_horizontal_grating(phase: PhaseMap) -> PhaseMap:
    """
    Add pi to every even column, modulo 2*pi; odd columns are unchanged.

    Works on canonical phases, so applying it twice returns the input exactly.
    """
    data = wrap_phase(phase.data)
    even = data[..., ::2]
    shifted = torch.where(even < PI_ON_GRID, even + PI_ON_GRID, even - PI_ON_GRID)
    grated = data.clone()
    grated[..., ::2] = shifted
    return PhaseMap(grated, phase.pitch)


def quantize_phase(phase: PhaseMap, bit_depth: int = DEFAULT_BIT_DEPTH) -> QuantizedPhase:
    """v = round(phi * 2^bit_depth / (2*pi)) mod 2^bit_depth."""
    if not 1 <= bit_depth <= MAX_BIT_DEPTH:
        raise InvalidInputError(f"bit_depth must lie in [1, {MAX_BIT_DEPTH}], got {bit_depth}")
    levels = 2 ** bit_depth
    codes = torch.round(wrap_phase(phase.data) * (levels / (2.0 * math.pi))).to(torch.int64)
    return QuantizedPhase(torch.remainder(codes, levels), bit_depth)


def dequantize(quantized: QuantizedPhase, pitch: float = DEFAULT_PITCH) -> PhaseMap:
    """Phase 2*pi*v / 2^bit_depth for every code."""
    phase = quantized.data.to(torch.float64) * (2.0 * math.pi / quantized.levels)
    return PhaseMap(wrap_phase(phase), pitch)


def prepare_for_slm(phase: PhaseMap, grating: str = "none",
                    bit_depth: int = DEFAULT_BIT_DEPTH) -> QuantizedPhase:
    """Optional grating, then quantization."""
    if grating not in GRATINGS:
        raise InvalidInputError(f"grating must be one of {GRATINGS}, got {grating}")
    if grating == "horizontal":
        phase = apply_horizontal_grating(phase)
    return quantize_phase(phase, bit_depth)


def check_wavelengths(metadata: PhaseMetadata, requested: Sequence[float],
                      rel_tol: float = 1e-9) -> None:
    """Raise ConfigConflictError when a sidecar disagrees with the requested wavelengths."""
    stored = list(metadata.wavelengths_m)
    if len(stored) != len(requested) or not all(
            math.isclose(a, b, rel_tol=rel_tol) for a, b in zip(stored, requested)):
        raise ConfigConflictError(
            f"Phase set was optimised for wavelengths {stored}, simulation requested "
            f"{list(requested)}")


def export_phase(quantized: QuantizedPhase, metadata: PhaseMetadata, out_dir: str,
                 stem: str = "phase") -> Tuple[List[str], str]:
    """
    Write one grayscale PNG per channel plus the YAML sidecar.

    8-bit files are written for bit depths up to 8, 16-bit files above.

    Returns:
        (image paths, sidecar path)
    """
    channels, height, width = quantized.data.shape
    if len(metadata.wavelengths_m) != channels:
        raise InvalidInputError(
            f"{channels} phase channel(s) but {len(metadata.wavelengths_m)} wavelength(s) in metadata")
    if metadata.grating not in GRATINGS:
        raise InvalidInputError(f"grating must be one of {GRATINGS}, got {metadata.grating}")

    os.makedirs(out_dir, exist_ok=True)
    dtype = np.uint8 if quantized.bit_depth <= 8 else np.uint16

    paths, names = [], []
    for c in range(channels):
        name = f"{stem}_c{c}.png"
        codes = quantized.data[c].cpu().numpy().astype(dtype)
        paths.append(save_codes(os.path.join(out_dir, name), codes))
        names.append(name)

    metadata.bit_depth = quantized.bit_depth
    metadata.width, metadata.height, metadata.channels = width, height, channels
    metadata.files = names

    sidecar = os.path.join(out_dir, f"{stem}.yaml")
    with open(sidecar, "w", encoding="utf-8") as f:
        yaml.safe_dump(metadata.to_dict(), f, sort_keys=False)
    return paths, sidecar


def read_sidecar(sidecar_path: str) -> PhaseMetadata:
    """Parse and sanity-check a phase-set sidecar."""
    if not os.path.exists(sidecar_path):
        raise FormatError(f"Phase sidecar missing: {sidecar_path}")
    try:
        with open(sidecar_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise FormatError(f"Phase sidecar is not valid YAML: {sidecar_path}: {e}") from e
    if not isinstance(data, dict):
        raise FormatError(f"Phase sidecar is not a mapping: {sidecar_path}")

    metadata = PhaseMetadata.from_dict(data)
    if metadata.grating not in GRATINGS:
        raise FormatError(f"Unknown grating '{metadata.grating}' in {sidecar_path}")
    if not 1 <= metadata.bit_depth <= MAX_BIT_DEPTH:
        raise FormatError(f"Unsupported bit depth {metadata.bit_depth} in {sidecar_path}")
    if metadata.channels != len(metadata.files) or metadata.channels != len(metadata.wavelengths_m):
        raise FormatError(f"Sidecar channel count disagrees with its files or wavelengths: {sidecar_path}")
    if metadata.brightness and len(metadata.brightness) != metadata.channels:
        raise FormatError(f"Sidecar brightness does not list one value per channel: {sidecar_path}")
    return metadata


def import_phase(sidecar_path: str,
                 expected_wavelengths: Optional[Sequence[float]] = None
                 ) -> Tuple[QuantizedPhase, PhaseMetadata]:
    """
    Read a phase set written by export_phase, bit-exactly.

    Raises FormatError for a missing or corrupt sidecar or image, or when an
    image disagrees with the sidecar; ConfigConflictError when
    expected_wavelengths differ from the stored ones.
    """
    metadata = read_sidecar(sidecar_path)
    if expected_wavelengths is not None:
        check_wavelengths(metadata, expected_wavelengths)

    directory = os.path.dirname(sidecar_path)
    planes = []
    for name in metadata.files:
        codes = load_codes(os.path.join(directory, name))
        if codes.shape != (metadata.height, metadata.width):
            raise FormatError(
                f"{name} is {codes.shape[1]}x{codes.shape[0]}, sidecar declares "
                f"{metadata.width}x{metadata.height}")
        planes.append(torch.from_numpy(codes.astype(np.int64)))

    data = torch.stack(planes)
    if int(data.max()) >= 2 ** metadata.bit_depth:
        raise FormatError(f"Codes exceed the declared {metadata.bit_depth}-bit range")
    return QuantizedPhase(data, metadata.bit_depth), metadata
