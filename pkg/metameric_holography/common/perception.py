"""
Gaze-contingent perception model.

An image is mapped to a feature space of steerable-pyramid band statistics
(local mean and standard deviation) pooled over regions whose diameter grows
with the square of eccentricity. Pooling reads a MIP map of each band at a
fractional level of detail with trilinear interpolation. Pixels whose pooling
region is no larger than the foveal threshold are kept as raw values.
"""

import hashlib
import math
import threading
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, Optional, Tuple

import torch
import torch.nn.functional as F

from .error_handler import InvalidConfigError, InvalidInputError
from .image_io import check_image


DEFAULT_PIXELS_PER_DEGREE = 109.7
DEFAULT_ALPHA = 0.05
STD_EPSILON = 1e-8
MAX_LEVELS = 5
MIN_LEVEL_SIZE = 8

# Full-range ITU-R BT.601
_RGB_TO_YCBCR = torch.tensor([
    [0.299, 0.587, 0.114],
    [-0.168736, -0.331264, 0.5],
    [0.5, -0.418688, -0.081312],
], dtype=torch.float64)
_YCBCR_TO_RGB = torch.linalg.inv(_RGB_TO_YCBCR)
_CHROMA_OFFSET = torch.tensor([0.0, 0.5, 0.5], dtype=torch.float64).view(3, 1, 1)


@dataclass(frozen=True)
class GazeContext:
    """
    Fixation point and viewing geometry.

    gaze is normalized (x, y) in [0, 1]^2; alpha is the pooling diameter in
    degrees per squared degree of eccentricity; fovea_threshold_px is the
    largest pooling size, in pixels, that still counts as foveal.
    """
    gaze: Tuple[float, float] = (0.5, 0.5)
    pixels_per_degree: float = DEFAULT_PIXELS_PER_DEGREE
    alpha: float = DEFAULT_ALPHA
    fovea_threshold_px: float = 1.0
    blend_band_deg: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gaze", tuple(float(g) for g in self.gaze))

    def validate(self) -> None:
        errors = []
        if len(self.gaze) != 2 or not all(0.0 <= g <= 1.0 for g in self.gaze):
            errors.append(f"gaze must lie in [0, 1]^2, got {self.gaze}")
        if not self.pixels_per_degree > 0:
            errors.append(f"pixels_per_degree must be > 0, got {self.pixels_per_degree}")
        if not self.alpha >= 0:
            errors.append(f"alpha must be >= 0, got {self.alpha}")
        if not self.fovea_threshold_px >= 0:
            errors.append(f"fovea_threshold_px must be >= 0, got {self.fovea_threshold_px}")
        if not self.blend_band_deg >= 0:
            errors.append(f"blend_band_deg must be >= 0, got {self.blend_band_deg}")
        if errors:
            raise InvalidConfigError("Invalid gaze context: " + "; ".join(errors))

    def for_level(self, level: int) -> "GazeContext":
        """Context for a grid downsampled by 2^level: pixel sizes shrink, angles stay."""
        if level == 0:
            return self
        scale = 2.0 ** level
        return replace(self, pixels_per_degree=self.pixels_per_degree / scale,
                       fovea_threshold_px=self.fovea_threshold_px / scale)


@dataclass
class PyramidLevel:
    """Oriented bands of one pyramid scale; the coarsest level also holds the lowpass residual."""
    horizontal: torch.Tensor
    vertical: torch.Tensor
    lowpass: Optional[torch.Tensor] = None


@dataclass
class Pyramid:
    """Two-orientation steerable pyramid of a (..., height, width) tensor."""
    highpass: torch.Tensor
    levels: List[PyramidLevel]

    @property
    def level_count(self) -> int:
        return len(self.levels)

    def bands(self) -> List[Tuple[str, int, torch.Tensor]]:
        """(name, level, band) in analysis order."""
        out = [("highpass", 0, self.highpass)]
        for i, level in enumerate(self.levels):
            out.append(("horizontal", i, level.horizontal))
            out.append(("vertical", i, level.vertical))
        out.append(("lowpass", self.level_count, self.levels[-1].lowpass))
        return out


@dataclass
class Mipmap:
    """Level 0 is the source; each further level halves both dimensions."""
    levels: List[torch.Tensor]


@dataclass
class LodMap:
    """Fractional MIP level per pixel."""
    data: torch.Tensor

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass
class FeatureEntry:
    """Pooled statistics of one band of one channel."""
    channel: int
    band: str
    level: int
    mean: torch.Tensor
    std: torch.Tensor


@dataclass
class FeatureSet:
    """Perceptual representation of an image under a gaze context."""
    entries: List[FeatureEntry]
    foveal_mask: torch.Tensor
    foveal_pixels: torch.Tensor
    level_count: int
    context: GazeContext


# ---------------------------------------------------------------------------
# Colour
# ---------------------------------------------------------------------------

def rgb_to_ycbcr(img: torch.Tensor) -> torch.Tensor:
    """Full-range BT.601 YCbCr; single-channel images pass through."""
    if img.shape[0] == 1:
        return img
    if img.shape[0] != 3:
        raise InvalidInputError(f"Expected 1 or 3 channels, got {img.shape[0]}")
    matrix = _RGB_TO_YCBCR.to(img.dtype)
    return torch.einsum("ij,jhw->ihw", matrix, img) + _CHROMA_OFFSET.to(img.dtype)


def ycbcr_to_rgb(img: torch.Tensor) -> torch.Tensor:
    """Inverse of rgb_to_ycbcr."""
    if img.shape[0] == 1:
        return img
    if img.shape[0] != 3:
        raise InvalidInputError(f"Expected 1 or 3 channels, got {img.shape[0]}")
    matrix = _YCBCR_TO_RGB.to(img.dtype)
    return torch.einsum("ij,jhw->ihw", matrix, img - _CHROMA_OFFSET.to(img.dtype))


# ---------------------------------------------------------------------------
# Steerable pyramid (frequency domain, tight frame)
# ---------------------------------------------------------------------------

def default_level_count(width: int, height: int) -> int:
    """Levels until the smallest level would drop below 16 px, capped at MAX_LEVELS."""
    levels = 0
    while levels < MAX_LEVELS and min(width, height) >= 2 ** (levels + 1) * MIN_LEVEL_SIZE:
        levels += 1
    return levels


def _check_level_count(width: int, height: int, level_count: int) -> None:
    if level_count < 1:
        raise InvalidConfigError(f"Pyramid needs at least one level, got {level_count}")
    if min(width, height) < 2 ** level_count * MIN_LEVEL_SIZE:
        raise InvalidConfigError(
            f"{level_count} pyramid levels need an image of at least "
            f"{2 ** level_count * MIN_LEVEL_SIZE} px per side, got {width}x{height}")


def _raised_cosine(radius: torch.Tensor, cutoff: float) -> Tuple[torch.Tensor, torch.Tensor]:
    """High/low masks with a log-radial transition on [cutoff/2, cutoff]; high^2 + low^2 = 1."""
    t = torch.log2(radius.clamp(min=1e-300) / cutoff) + 1.0
    t = t.clamp(0.0, 1.0)
    high = torch.sin(0.5 * math.pi * t)
    low = torch.where(t >= 1.0, torch.zeros_like(t), torch.cos(0.5 * math.pi * t))
    return high, low


@lru_cache(maxsize=64)
def _filters(height: int, width: int):
    """Frequency masks for one grid: (hi0, lo0, band, low, sin, cos)."""
    fy = 2.0 * math.pi * torch.fft.fftfreq(height, dtype=torch.float64)
    fx = 2.0 * math.pi * torch.fft.fftfreq(width, dtype=torch.float64)
    fy, fx = fy[:, None].expand(height, width), fx[None, :].expand(height, width)
    radius = torch.sqrt(fx ** 2 + fy ** 2)

    hi0, lo0 = _raised_cosine(radius, math.pi)
    band, low = _raised_cosine(radius, math.pi / 2.0)

    safe = torch.where(radius > 0, radius, torch.ones_like(radius))
    sin = torch.where(radius > 0, fy / safe, torch.zeros_like(radius))
    cos = torch.where(radius > 0, fx / safe, torch.zeros_like(radius))
    return hi0, lo0, band, low, sin, cos


def _crop_spectrum(spectrum: torch.Tensor) -> torch.Tensor:
    """Keep the central ceil(n/2) frequencies per axis; pixel values are preserved."""
    height, width = spectrum.shape[-2:]
    out_h, out_w = (height + 1) // 2, (width + 1) // 2
    top, left = height // 2 - out_h // 2, width // 2 - out_w // 2
    shifted = torch.fft.fftshift(spectrum, dim=(-2, -1))
    cropped = shifted[..., top:top + out_h, left:left + out_w]
    scale = (out_h * out_w) / (height * width)
    return torch.fft.ifftshift(cropped, dim=(-2, -1)) * scale


def _pad_spectrum(spectrum: torch.Tensor, height: int, width: int) -> torch.Tensor:
    """Inverse of _crop_spectrum for a target grid of height x width."""
    in_h, in_w = spectrum.shape[-2:]
    top, left = height // 2 - in_h // 2, width // 2 - in_w // 2
    shifted = torch.fft.fftshift(spectrum, dim=(-2, -1))
    padded = torch.zeros(spectrum.shape[:-2] + (height, width), dtype=spectrum.dtype)
    padded[..., top:top + in_h, left:left + in_w] = shifted
    scale = (height * width) / (in_h * in_w)
    return torch.fft.ifftshift(padded, dim=(-2, -1)) * scale


def _round_up(size: int, step: int) -> int:
    return -(-size // step) * step


def _level_shape(height: int, width: int, level: int) -> Tuple[int, int]:
    return -(-height // 2 ** level), -(-width // 2 ** level)


@lru_cache(maxsize=64)
def _half_shift(height: int, width: int) -> torch.Tensor:
    """Spectral factor that moves samples by half a pixel along both axes."""
    fy = 2.0 * math.pi * torch.fft.fftfreq(height, dtype=torch.float64)
    fx = 2.0 * math.pi * torch.fft.fftfreq(width, dtype=torch.float64)
    return torch.exp(0.5j * (fy[:, None] + fx[None, :]))


def _mirror(grid: torch.Tensor, height: int, width: int,
            parity: Tuple[int, int] = (1, 1)) -> torch.Tensor:
    """
    Half-sample mirror extension of a (..., h, w) grid to (..., 2*height, 2*width).

    The grid is first mirrored out to height x width when smaller. A parity of
    -1 negates the mirrored copy along that axis (odd bands).
    """
    sign_y, sign_x = parity
    h, w = grid.shape[-2:]
    if height > h:
        grid = torch.cat([grid, sign_y * grid.flip(-2)[..., :height - h, :]], dim=-2)
    if width > w:
        grid = torch.cat([grid, sign_x * grid.flip(-1)[..., :width - w]], dim=-1)
    grid = torch.cat([grid, sign_y * grid.flip(-2)], dim=-2)
    return torch.cat([grid, sign_x * grid.flip(-1)], dim=-1)


def build_steerable_pyramid(channel: torch.Tensor, level_count: int) -> Pyramid:
    """
    Decompose a (..., height, width) tensor into a highpass residual, two
    oriented bands per level and a lowpass residual.

    Level i has dimensions ceil(dim / 2^i). The image is mirrored at its
    borders (half-sample symmetric) before filtering, so no content wraps
    from one edge to the opposite one. Each coarser level samples the centres
    of 2x2 cells of the finer one, which keeps the mirror symmetry exact.
    """
    if channel.dim() < 2:
        raise InvalidInputError("Pyramid input must have at least two dimensions")
    height, width = channel.shape[-2:]
    _check_level_count(width, height, level_count)

    step = 2 ** level_count
    canvas = _mirror(channel.to(torch.float64), _round_up(height, step), _round_up(width, step))
    spectrum = torch.fft.fft2(canvas)
    hi0, lo0, _, _, _, _ = _filters(*canvas.shape[-2:])
    highpass = torch.fft.ifft2(spectrum * hi0).real[..., :height, :width]
    current = spectrum * lo0

    levels = []
    for i in range(level_count):
        h, w = current.shape[-2:]
        _, _, band, low, sin, cos = _filters(h, w)
        size_h, size_w = _level_shape(height, width, i)
        oriented = current * band * (-1j)
        horizontal = torch.fft.ifft2(oriented * sin).real[..., :size_h, :size_w]
        vertical = torch.fft.ifft2(oriented * cos).real[..., :size_h, :size_w]
        current = _crop_spectrum(current * low * _half_shift(h, w))
        levels.append(PyramidLevel(horizontal=horizontal, vertical=vertical))

    size_h, size_w = _level_shape(height, width, level_count)
    levels[-1].lowpass = torch.fft.ifft2(current).real[..., :size_h, :size_w]
    return Pyramid(highpass=highpass, levels=levels)


def reconstruct_from_pyramid(p: Pyramid) -> torch.Tensor:
    """
    Synthesis inverse of build_steerable_pyramid.

    Exact when both dimensions are multiples of 2^level_count; otherwise the
    mirrored margin is re-derived from the stored bands.
    """
    if p.highpass is None or not p.levels or p.levels[-1].lowpass is None:
        raise InvalidInputError("Pyramid is missing its highpass, levels or lowpass residual")
    for i, level in enumerate(p.levels):
        if level.horizontal is None or level.vertical is None:
            raise InvalidInputError(f"Pyramid level {i} is missing an oriented band")

    height, width = p.highpass.shape[-2:]
    step = 2 ** p.level_count
    padded_h, padded_w = _round_up(height, step), _round_up(width, step)

    current = torch.fft.fft2(_mirror(p.levels[-1].lowpass, padded_h // step, padded_w // step))
    for i in reversed(range(p.level_count)):
        level = p.levels[i]
        h, w = padded_h // 2 ** i, padded_w // 2 ** i
        _, _, band, low, sin, cos = _filters(2 * h, 2 * w)
        current = _pad_spectrum(current, 2 * h, 2 * w) * _half_shift(2 * h, 2 * w).conj() * low
        # sin is odd along y and cos along x; their bands mirror with opposite sign
        current = current + torch.fft.fft2(_mirror(level.horizontal, h, w, (-1, 1))) * band * sin * 1j
        current = current + torch.fft.fft2(_mirror(level.vertical, h, w, (1, -1))) * band * cos * 1j

    hi0, lo0, _, _, _, _ = _filters(2 * padded_h, 2 * padded_w)
    spectrum = torch.fft.fft2(_mirror(p.highpass, padded_h, padded_w)) * hi0 + current * lo0
    return torch.fft.ifft2(spectrum).real[..., :height, :width]


# ---------------------------------------------------------------------------
# MIP maps and pooling
# ---------------------------------------------------------------------------

def mip_level_count(width: int, height: int) -> int:
    """Number of MIP levels down to 1x1."""
    count = 1
    while width > 1 or height > 1:
        width, height = (width + 1) // 2, (height + 1) // 2
        count += 1
    return count


def make_mipmap(band: torch.Tensor) -> Mipmap:
    """
    2x2 average MIP chain of a (..., height, width) tensor down to 1x1.

    Odd dimensions are edge-replicated to even size before averaging.
    """
    if band.dim() < 2 or band.numel() == 0:
        raise InvalidInputError("make_mipmap needs a nonempty grid")

    lead = band.shape[:-2]
    current = band.reshape((-1, 1) + band.shape[-2:])
    levels = [band]
    while current.shape[-2] > 1 or current.shape[-1] > 1:
        height, width = current.shape[-2:]
        if height % 2 or width % 2:
            current = F.pad(current, (0, width % 2, 0, height % 2), mode="replicate")
        current = F.avg_pool2d(current, kernel_size=2)
        levels.append(current.reshape(lead + current.shape[-2:]))
    return Mipmap(levels=levels)


def eccentricity(pixel: Tuple[float, float], ctx: GazeContext, width: int, height: int) -> float:
    """Degrees between a pixel and the gaze point (flat-screen small-angle model)."""
    x, y = pixel
    dx = x - ctx.gaze[0] * width
    dy = y - ctx.gaze[1] * height
    return math.hypot(dx, dy) / ctx.pixels_per_degree


def _eccentricity_grid(width: int, height: int, ctx: GazeContext) -> torch.Tensor:
    xs = torch.arange(width, dtype=torch.float64) - ctx.gaze[0] * width
    ys = torch.arange(height, dtype=torch.float64) - ctx.gaze[1] * height
    return torch.sqrt(ys[:, None] ** 2 + xs[None, :] ** 2) / ctx.pixels_per_degree


def _raw_pooling_size(width: int, height: int, ctx: GazeContext) -> torch.Tensor:
    return ctx.alpha * _eccentricity_grid(width, height, ctx) ** 2 * ctx.pixels_per_degree


def pooling_size_map(width: int, height: int, ctx: GazeContext) -> torch.Tensor:
    """Pooling diameter in pixels, max(1, alpha * e^2 * ppd)."""
    return _raw_pooling_size(width, height, ctx).clamp(min=1.0)


def foveal_mask(width: int, height: int, ctx: GazeContext) -> torch.Tensor:
    """Pixels whose pooling size is at most the foveal threshold."""
    return _raw_pooling_size(width, height, ctx) <= ctx.fovea_threshold_px


def foveal_weight_map(width: int, height: int, ctx: GazeContext) -> torch.Tensor:
    """1 inside the fovea, 0 in the periphery, with an optional linear ramp of blend_band_deg."""
    mask = foveal_mask(width, height, ctx)
    if ctx.blend_band_deg <= 0 or ctx.alpha <= 0:
        return mask.to(torch.float64)

    radius = math.sqrt(ctx.fovea_threshold_px / (ctx.alpha * ctx.pixels_per_degree))
    ramp = 1.0 - (_eccentricity_grid(width, height, ctx) - radius) / ctx.blend_band_deg
    return torch.where(mask, torch.ones_like(ramp), ramp.clamp(0.0, 1.0))


@lru_cache(maxsize=128)
def _lod_data(width: int, height: int, ctx: GazeContext) -> torch.Tensor:
    ctx.validate()
    lod = torch.log2(pooling_size_map(width, height, ctx))
    return lod.clamp(0.0, float(mip_level_count(width, height) - 1))


def make_lod_map(width: int, height: int, ctx: GazeContext) -> LodMap:
    """
    Fractional MIP level per pixel: log2 of the pooling diameter, clamped to
    the MIP chain of a width x height grid.

    Maps are cached per geometry; every call returns its own copy.
    """
    return LodMap(_lod_data(width, height, ctx).clone())


def pool(band: torch.Tensor, lod: LodMap) -> torch.Tensor:
    """
    Trilinear MIP-map read of a (..., height, width) band.

    Each pixel bilinearly samples levels floor(LoD) and ceil(LoD) at its own
    position and blends them by the fractional part. Level 0 is read at
    integer positions, so it is the band itself.
    """
    height, width = band.shape[-2:]
    if (lod.height, lod.width) != (height, width):
        raise InvalidInputError(
            f"LoD map is {lod.width}x{lod.height}, band is {width}x{height}")

    levels = make_mipmap(band).levels
    lod_data = lod.data.clamp(0.0, float(len(levels) - 1)).to(band.dtype)
    top = int(math.ceil(float(lod_data.max()))) if lod_data.numel() else 0

    result = band * (1.0 - lod_data).clamp(min=0.0)
    if top == 0:
        return result

    lead = band.shape[:-2]
    xs = torch.arange(width, dtype=band.dtype) + 0.5
    ys = torch.arange(height, dtype=band.dtype) + 0.5
    for k in range(1, top + 1):
        weight = (1.0 - (lod_data - k).abs()).clamp(min=0.0)
        level = levels[k].reshape((-1, 1) + levels[k].shape[-2:])
        level_h, level_w = level.shape[-2:]
        scale = 2.0 ** k
        # align_corners=False: normalized coordinate of level pixel u is (2u + 1) / size - 1
        gx = 2.0 * xs / (scale * level_w) - 1.0
        gy = 2.0 * ys / (scale * level_h) - 1.0
        grid = torch.stack(torch.broadcast_tensors(gx[None, :], gy[:, None]), dim=-1)
        grid = grid.unsqueeze(0).expand(level.shape[0], height, width, 2).contiguous()
        sampled = F.grid_sample(level, grid, mode="bilinear", padding_mode="border",
                                align_corners=False)
        result = result + weight * sampled.reshape(lead + (height, width))
    return result


# ---------------------------------------------------------------------------
# Percept and metamers
# ---------------------------------------------------------------------------

def _smooth_std(mean: torch.Tensor, second_moment: torch.Tensor) -> torch.Tensor:
    variance = (second_moment - mean ** 2).clamp(min=0.0)
    return torch.sqrt(variance + STD_EPSILON) - math.sqrt(STD_EPSILON)


def _band_statistics(pyramid: Pyramid, ctx: GazeContext):
    """Yield (name, level, band, mean, std) for every band of a batched pyramid."""
    for name, level, band in pyramid.bands():
        height, width = band.shape[-2:]
        lod = make_lod_map(width, height, ctx.for_level(level))
        mean = pool(band, lod)
        std = _smooth_std(mean, pool(band * band, lod))
        yield name, level, band, mean, std


def _resolve_levels(width: int, height: int, level_count: Optional[int]) -> int:
    levels = default_level_count(width, height) if level_count is None else level_count
    _check_level_count(width, height, levels)
    return levels


def percept(img: torch.Tensor, ctx: GazeContext, level_count: Optional[int] = None) -> FeatureSet:
    """
    Map an image to pooled band statistics under a gaze context.

    Three-channel images are analysed in YCbCr. Entries are ordered by band,
    then channel. Differentiable with respect to img.
    """
    check_image(img)
    ctx.validate()
    _, height, width = img.shape
    levels = _resolve_levels(width, height, level_count)

    pyramid = build_steerable_pyramid(rgb_to_ycbcr(img), levels)
    entries = []
    for name, level, _, mean, std in _band_statistics(pyramid, ctx):
        for c in range(img.shape[0]):
            entries.append(FeatureEntry(channel=c, band=name, level=level,
                                        mean=mean[c], std=std[c]))

    mask = foveal_mask(width, height, ctx)
    return FeatureSet(entries=entries, foveal_mask=mask, foveal_pixels=img[:, mask],
                      level_count=levels, context=ctx)


def synthesize_metamer(target: torch.Tensor, ctx: GazeContext, seed: int,
                       level_count: Optional[int] = None, passes: int = 3) -> torch.Tensor:
    """
    Synthesize an image whose pooled band statistics match the target's.

    Starts from seeded uniform noise; every pass normalizes each band's local
    statistics, rescales them to the target's pooled std and mean, and
    resynthesizes. Foveal pixels are copied from the target after every pass.
    """
    check_image(target)
    ctx.validate()
    if passes < 1:
        raise InvalidConfigError(f"passes must be >= 1, got {passes}")
    channels, height, width = target.shape
    levels = _resolve_levels(width, height, level_count)
    mask = foveal_mask(width, height, ctx)

    with torch.no_grad():
        target = target.detach().to(torch.float64)
        target_stats = [(mean, std) for _, _, _, mean, std in
                        _band_statistics(build_steerable_pyramid(rgb_to_ycbcr(target), levels), ctx)]

        generator = torch.Generator().manual_seed(int(seed))
        current = torch.rand(target.shape, generator=generator, dtype=torch.float64)

        for _ in range(passes):
            pyramid = build_steerable_pyramid(rgb_to_ycbcr(current), levels)
            adjusted = []
            for (_, _, band, mean, std), (target_mean, target_std) in zip(
                    _band_statistics(pyramid, ctx), target_stats):
                adjusted.append((band - mean) * target_std / std.clamp(min=1e-6) + target_mean)

            pyramid.highpass = adjusted[0]
            for i, level in enumerate(pyramid.levels):
                level.horizontal = adjusted[1 + 2 * i]
                level.vertical = adjusted[2 + 2 * i]
            pyramid.levels[-1].lowpass = adjusted[-1]

            current = ycbcr_to_rgb(reconstruct_from_pyramid(pyramid))
            current[:, mask] = target[:, mask]
            current = current.clamp(0.0, 1.0)

    return current


class MetamerCache:
    """Thread-safe cache of synthesized metamers keyed by target content and synthesis settings."""

    def __init__(self, max_entries: int = 8):
        self.max_entries = max_entries
        self._entries = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(target: torch.Tensor, ctx: GazeContext, seed: int, level_count, passes: int):
        data = target.detach().to(torch.float64).contiguous().cpu().numpy()
        digest = hashlib.sha256(data.tobytes()).hexdigest()
        return digest, tuple(data.shape), int(seed), ctx, level_count, passes

    def get(self, target: torch.Tensor, ctx: GazeContext, seed: int,
            level_count: Optional[int] = None, passes: int = 3) -> torch.Tensor:
        key = self._key(target, ctx, seed, level_count, passes)
        with self._lock:
            if key in self._entries:
                return self._entries[key]

        metamer = synthesize_metamer(target, ctx, seed, level_count, passes)
        with self._lock:
            if len(self._entries) >= self.max_entries:
                self._entries.pop(next(iter(self._entries)))
            self._entries[key] = metamer
        return metamer

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()
