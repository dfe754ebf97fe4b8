"""
Differentiable image losses and evaluation metrics.

The metameric loss compares pooled band statistics outside the fovea and
pixels inside it. The comparison losses are pixel MSE, MSE against an
acuity-blurred target, MSE between blurred images and MSE against one
synthesized metamer of the target.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import torch

from .error_handler import InvalidConfigError, InvalidInputError, UnsupportedConfigError
from .image_io import check_image
from .perception import (
    FeatureSet,
    GazeContext,
    MetamerCache,
    foveal_mask,
    foveal_weight_map,
    make_lod_map,
    percept,
    pool,
)


LOSS_KINDS = ("metameric", "mse", "blur_match", "blur_lowpass", "metamer_target")
FEATURE_NORMS = ("L1", "L2")

LossFunction = Callable[[torch.Tensor], torch.Tensor]

_METAMER_CACHE = MetamerCache()


@dataclass
class LossConfig:
    """Loss settings shared by every loss kind."""
    feature_norm: str = "L2"
    channel_weights: Tuple[float, float, float] = (1.0, 0.25, 0.25)
    foveal_weight: float = 1.0
    level_count: Optional[int] = None
    metamer_seed: int = 0
    metamer_passes: int = 3

    def validate(self) -> None:
        errors = []
        if self.feature_norm not in FEATURE_NORMS:
            errors.append(f"feature_norm must be one of {FEATURE_NORMS}, got {self.feature_norm}")
        if len(self.channel_weights) != 3:
            errors.append("channel_weights needs three values (Y, Cb, Cr)")
        elif not all(math.isfinite(w) and w >= 0 for w in self.channel_weights):
            errors.append(f"channel_weights must be finite and >= 0, got {self.channel_weights}")
        elif sum(self.channel_weights) <= 0:
            errors.append("at least one channel weight must be positive")
        if not (math.isfinite(self.foveal_weight) and self.foveal_weight >= 0):
            errors.append(f"foveal_weight must be finite and >= 0, got {self.foveal_weight}")
        if self.level_count is not None and self.level_count < 1:
            errors.append(f"level_count must be >= 1 or unset, got {self.level_count}")
        if self.metamer_passes < 1:
            errors.append(f"metamer_passes must be >= 1, got {self.metamer_passes}")
        if errors:
            raise InvalidConfigError("Invalid loss config: " + "; ".join(errors))


def _check_pair(a: torch.Tensor, b: torch.Tensor) -> None:
    check_image(a, "first image")
    check_image(b, "second image")
    if a.shape != b.shape:
        raise InvalidInputError(f"Image shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")


def _distance(diff: torch.Tensor, norm: str) -> torch.Tensor:
    return diff * diff if norm == "L2" else diff.abs()


def mse_loss(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Mean squared difference over all pixels and channels."""
    _check_pair(a, b)
    diff = a - b
    return (diff * diff).mean()


def metameric_loss(a: torch.Tensor, b: torch.Tensor, ctx: GazeContext,
                   cfg: Optional[LossConfig] = None,
                   target_features: Optional[FeatureSet] = None) -> torch.Tensor:
    """
    Feature-space distance outside the fovea plus pixel MSE inside it.

    Each feature map contributes the mean of its weighted per-pixel distance;
    maps are averaged with the channel weights. target_features, when given,
    must be percept(b, ctx, cfg.level_count).
    """
    cfg = cfg or LossConfig()
    _check_pair(a, b)

    features_a = percept(a, ctx, cfg.level_count)
    features_b = target_features or percept(b, ctx, cfg.level_count)
    if len(features_a.entries) != len(features_b.entries):
        raise InvalidInputError("Feature sets were built with different pyramid depths")

    weights = cfg.channel_weights if a.shape[0] == 3 else cfg.channel_weights[:1]
    peripheral = {}
    total = a.new_zeros(())
    weight_sum = 0.0
    for entry_a, entry_b in zip(features_a.entries, features_b.entries):
        height, width = entry_a.mean.shape
        key = (entry_a.level, width, height)
        if key not in peripheral:
            peripheral[key] = 1.0 - foveal_weight_map(width, height, ctx.for_level(entry_a.level))
        outside = peripheral[key]

        term = (outside * _distance(entry_a.mean - entry_b.mean, cfg.feature_norm)).mean()
        term = term + (outside * _distance(entry_a.std - entry_b.std, cfg.feature_norm)).mean()
        channel_weight = weights[entry_a.channel]
        total = total + channel_weight * term
        weight_sum += channel_weight

    loss = total / weight_sum if weight_sum > 0 else total

    _, height, width = a.shape
    inside = foveal_weight_map(width, height, ctx)
    covered = float(inside.sum())
    if cfg.foveal_weight > 0 and covered > 0:
        diff = a - b
        foveal = (inside * (diff * diff)).sum() / (covered * a.shape[0])
        loss = loss + cfg.foveal_weight * foveal
    return loss


def acuity_blur(img: torch.Tensor, ctx: GazeContext) -> torch.Tensor:
    """Spatially varying lowpass with the percept's pooling size; identity at the gaze point."""
    check_image(img)
    _, height, width = img.shape
    return pool(img, make_lod_map(width, height, ctx))


def blur_match_loss(i: torch.Tensor, t: torch.Tensor, ctx: GazeContext) -> torch.Tensor:
    """MSE between an image and the acuity-blurred target."""
    _check_pair(i, t)
    return mse_loss(i, acuity_blur(t, ctx))


def blur_lowpass_loss(i: torch.Tensor, t: torch.Tensor, ctx: GazeContext) -> torch.Tensor:
    """MSE between the acuity-blurred image and the acuity-blurred target."""
    _check_pair(i, t)
    return mse_loss(acuity_blur(i, ctx), acuity_blur(t, ctx))


def metamer_target_loss(i: torch.Tensor, t: torch.Tensor, ctx: GazeContext, seed: int,
                        level_count: Optional[int] = None, passes: int = 3,
                        cache: Optional[MetamerCache] = None) -> torch.Tensor:
    """MSE against one metamer of the target, synthesized once per (target, seed)."""
    _check_pair(i, t)
    metamer = (cache or _METAMER_CACHE).get(t, ctx, seed, level_count, passes)
    return mse_loss(i, metamer)


def build_loss(kind: str, target: torch.Tensor, ctx: GazeContext,
               cfg: Optional[LossConfig] = None) -> LossFunction:
    """
    Bind a loss kind to a fixed target.

    Target-side work (percept, blur, metamer synthesis) runs once here; the
    returned function maps a reconstruction to a scalar loss.
    """
    cfg = cfg or LossConfig()
    cfg.validate()
    check_image(target, "target")
    target = target.detach()

    if kind == "metameric":
        with torch.no_grad():
            features = percept(target, ctx, cfg.level_count)
        return lambda image: metameric_loss(image, target, ctx, cfg, features)
    if kind == "mse":
        return lambda image: mse_loss(image, target)
    if kind == "blur_match":
        with torch.no_grad():
            blurred = acuity_blur(target, ctx)
        return lambda image: mse_loss(image, blurred)
    if kind == "blur_lowpass":
        with torch.no_grad():
            blurred = acuity_blur(target, ctx)
        return lambda image: mse_loss(acuity_blur(image, ctx), blurred)
    if kind == "metamer_target":
        metamer = _METAMER_CACHE.get(target, ctx, cfg.metamer_seed, cfg.level_count,
                                     cfg.metamer_passes)
        return lambda image: mse_loss(image, metamer)

    raise UnsupportedConfigError(f"Unknown loss kind '{kind}'; expected one of {LOSS_KINDS}")


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def psnr(a: torch.Tensor, b: torch.Tensor, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; inf for identical inputs."""
    if a.shape != b.shape:
        raise InvalidInputError(f"Image shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")
    mse = float(((a.detach() - b.detach()) ** 2).mean())
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def region_mse(a: torch.Tensor, b: torch.Tensor, mask: torch.Tensor) -> float:
    """MSE over the pixels selected by a (height, width) mask; nan for an empty mask."""
    if a.shape != b.shape or a.shape[-2:] != mask.shape:
        raise InvalidInputError("Images and mask must share their spatial dimensions")
    if not bool(mask.any()):
        return math.nan
    diff = (a.detach() - b.detach())[:, mask]
    return float((diff * diff).mean())


def region_errors(a: torch.Tensor, b: torch.Tensor, ctx: GazeContext) -> dict:
    """Full, foveal and peripheral MSE plus PSNR of a against b."""
    _, height, width = a.shape
    mask = foveal_mask(width, height, ctx)
    return {
        "mse": region_mse(a, b, torch.ones_like(mask)),
        "foveal_mse": region_mse(a, b, mask),
        "peripheral_mse": region_mse(a, b, ~mask),
        "psnr": psnr(a, b),
    }
