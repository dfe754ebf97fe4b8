"""
Phase-only holographic display model.

Maps SLM phase values to reconstructed intensities at a focal distance with
the Fresnel transfer function applied on the FFT grid:

    H(fx, fy) = exp(-j * pi * wavelength * distance * (fx^2 + fy^2))

FFTs use the unitary ("ortho") normalization so field energy is preserved.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple, Union

import torch

from .error_handler import InvalidConfigError, InvalidInputError


DEFAULT_PITCH = 8e-6
DEFAULT_DISTANCE = 0.15
WAVELENGTH_RED = 638e-9
WAVELENGTH_GREEN = 520e-9
WAVELENGTH_BLUE = 450e-9
DEFAULT_WAVELENGTHS = (WAVELENGTH_RED, WAVELENGTH_GREEN, WAVELENGTH_BLUE)

# Phases are canonicalized onto a 2^-50 rad grid. On that grid adding the
# grid value of pi and wrapping is exact, so the pi-shift grating is an exact
# involution.
PHASE_GRID = 2.0 ** -50
PI_ON_GRID = round(math.pi / PHASE_GRID) * PHASE_GRID
PHASE_PERIOD = 2.0 * PI_ON_GRID


def wrap_phase(phase: torch.Tensor) -> torch.Tensor:
    """Canonicalize phase values to [0, 2*pi). Value-only; not differentiable."""
    wrapped = torch.remainder(phase.detach().to(torch.float64), PHASE_PERIOD)
    wrapped = torch.round(wrapped / PHASE_GRID) * PHASE_GRID
    return torch.where(wrapped >= PHASE_PERIOD, wrapped - PHASE_PERIOD, wrapped)


def wavelengths_for(channels: int) -> Tuple[float, ...]:
    """Default wavelengths for a 1- or 3-channel target."""
    if channels == 3:
        return DEFAULT_WAVELENGTHS
    if channels == 1:
        return (WAVELENGTH_GREEN,)
    raise InvalidInputError(f"Targets must have 1 or 3 channels, got {channels}")


@dataclass(frozen=True)
class PropagationConfig:
    """Distance (signed), wavelength and pixel pitch of one propagation, in meters."""
    distance: float = DEFAULT_DISTANCE
    wavelength: float = WAVELENGTH_GREEN
    pitch: float = DEFAULT_PITCH
    zero_pad: bool = False

    def validate(self) -> None:
        errors = []
        if not math.isfinite(self.distance):
            errors.append(f"distance must be finite, got {self.distance}")
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            errors.append(f"wavelength must be > 0, got {self.wavelength}")
        if not (self.pitch > 0 and math.isfinite(self.pitch)):
            errors.append(f"pitch must be > 0, got {self.pitch}")
        if errors:
            raise InvalidConfigError("Invalid propagation config: " + "; ".join(errors))


@dataclass
class ComplexField:
    """Complex wave amplitudes on a (height, width) grid."""
    data: torch.Tensor
    pitch: float = DEFAULT_PITCH

    def __post_init__(self):
        if self.data.dim() != 2 or not self.data.is_complex():
            raise InvalidInputError("ComplexField data must be a 2D complex tensor")
        if self.pitch <= 0:
            raise InvalidInputError(f"pitch must be > 0, got {self.pitch}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def energy(self) -> torch.Tensor:
        """Total energy sum |u|^2."""
        return (self.data.real ** 2 + self.data.imag ** 2).sum()


@dataclass
class PhaseMap:
    """Per-channel SLM phase values in radians, shaped (channels, height, width)."""
    data: torch.Tensor
    pitch: float = DEFAULT_PITCH

    def __post_init__(self):
        if self.data.dim() != 3 or self.data.shape[0] not in (1, 3):
            raise InvalidInputError(
                f"PhaseMap data must be (1|3, height, width), got {tuple(self.data.shape)}")
        if self.pitch <= 0:
            raise InvalidInputError(f"pitch must be > 0, got {self.pitch}")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def canonical(self) -> "PhaseMap":
        """Copy with every value wrapped to [0, 2*pi)."""
        return PhaseMap(wrap_phase(self.data), self.pitch)


@dataclass(frozen=True)
class TransferKernel:
    """
    Frequency-domain Fresnel kernel.

    data has the dimensions of the grid it multiplies: the field itself, or
    the 2x padded grid when config.zero_pad is set. field_width/field_height
    are the dimensions of the fields it accepts.
    """
    data: torch.Tensor
    config: PropagationConfig
    field_width: int
    field_height: int


def field_from_phase(phase_channel: torch.Tensor, pitch: float = DEFAULT_PITCH) -> ComplexField:
    """Unit-amplitude field exp(j*phi) for one phase channel. Differentiable in phi."""
    if phase_channel.dim() != 2:
        raise InvalidInputError("field_from_phase expects a 2D phase grid")
    if not torch.isfinite(phase_channel.detach()).all():
        raise InvalidInputError("Phase values must be finite")
    phase_channel = phase_channel.to(torch.float64)
    return ComplexField(torch.exp(1j * phase_channel), pitch)


@lru_cache(maxsize=32)
def _kernel_data(width: int, height: int, distance: float, wavelength: float,
                 pitch: float) -> torch.Tensor:
    fx = torch.fft.fftfreq(width, d=pitch, dtype=torch.float64)
    fy = torch.fft.fftfreq(height, d=pitch, dtype=torch.float64)
    squared = fy[:, None] ** 2 + fx[None, :] ** 2
    angle = -math.pi * wavelength * distance * squared
    return torch.polar(torch.ones_like(angle), angle)


def fresnel_transfer(width: int, height: int, cfg: PropagationConfig) -> TransferKernel:
    """
    Build the Fresnel transfer kernel for a width x height field.

    The constant global phase exp(j*2*pi*d/wavelength) is omitted; it does not
    change intensities.
    """
    if width < 2 or height < 2:
        raise InvalidInputError(f"Field must be at least 2x2, got {width}x{height}")
    cfg.validate()

    grid_width, grid_height = (2 * width, 2 * height) if cfg.zero_pad else (width, height)
    data = _kernel_data(grid_width, grid_height, float(cfg.distance),
                        float(cfg.wavelength), float(cfg.pitch))
    return TransferKernel(data=data, config=cfg, field_width=width, field_height=height)


def propagate(field: ComplexField, kernel: TransferKernel) -> ComplexField:
    """IFFT(H * FFT(u)) with unitary FFTs."""
    if (field.width, field.height) != (kernel.field_width, kernel.field_height):
        raise InvalidInputError(
            f"Field is {field.width}x{field.height}, kernel expects "
            f"{kernel.field_width}x{kernel.field_height}")

    u = field.data.to(torch.complex128)
    if kernel.config.zero_pad:
        top, left = field.height // 2, field.width // 2
        padded = torch.zeros(kernel.data.shape, dtype=torch.complex128)
        padded[top:top + field.height, left:left + field.width] = u
        out = torch.fft.ifft2(kernel.data * torch.fft.fft2(padded, norm="ortho"), norm="ortho")
        out = out[top:top + field.height, left:left + field.width]
    else:
        out = torch.fft.ifft2(kernel.data * torch.fft.fft2(u, norm="ortho"), norm="ortho")

    return ComplexField(out, field.pitch)


def intensity(field: ComplexField) -> torch.Tensor:
    """|u|^2, written as re^2 + im^2 so the derivative is smooth at zero."""
    return field.data.real ** 2 + field.data.imag ** 2


def reconstruct_intensity(phase: Union[PhaseMap, torch.Tensor], distance: float,
                          wavelengths: Sequence[float], pitch: float = DEFAULT_PITCH,
                          zero_pad: bool = False) -> torch.Tensor:
    """
    Simulate the perceived image of a phase-only hologram.

    Args:
        phase: PhaseMap, or a (channels, height, width) phase tensor
        distance: Propagation distance in meters
        wavelengths: One wavelength per phase channel
        pitch: Pixel pitch, used when phase is a bare tensor
        zero_pad: Propagate on a 2x padded grid

    Returns:
        Nonnegative (channels, height, width) intensity tensor
    """
    if isinstance(phase, PhaseMap):
        pitch = phase.pitch
        phase = phase.data
    if phase.dim() != 3:
        raise InvalidInputError("Phase must be a (channels, height, width) tensor")

    channels, height, width = phase.shape
    if len(wavelengths) != channels:
        raise InvalidConfigError(
            f"{channels} phase channel(s) but {len(wavelengths)} wavelength(s) given")

    planes = []
    for channel, wavelength in zip(phase, wavelengths):
        cfg = PropagationConfig(distance=float(distance), wavelength=float(wavelength),
                                pitch=float(pitch), zero_pad=zero_pad)
        kernel = fresnel_transfer(width, height, cfg)
        planes.append(intensity(propagate(field_from_phase(channel, pitch), kernel)))
    return torch.stack(planes)
