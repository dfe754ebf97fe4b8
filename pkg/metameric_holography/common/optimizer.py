"""
Gradient-based phase retrieval.

Phases are optimised with an explicit Adam update; gradients come from
reverse-mode differentiation through propagation and the chosen loss. All
channels are simulated together and share one scalar loss.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import torch

from .error_handler import (
    InvalidConfigError,
    InvalidInputError,
    OptimisationDivergedError,
    UnsupportedConfigError,
)
from .image_io import check_image
from .logger import Logger
from .losses import LOSS_KINDS, LossConfig, build_loss
from .perception import GazeContext
from .propagation import (
    DEFAULT_PITCH,
    PHASE_PERIOD,
    PhaseMap,
    reconstruct_intensity,
    wavelengths_for,
    wrap_phase,
)


ProgressCallback = Callable[[int, int, float], None]

TEMPORAL_MODES = ("independent", "warm")


@dataclass
class OptimConfig:
    """Adam and run-length settings."""
    steps: int = 200
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    loss_kind: str = "metameric"
    warm_steps: int = 5
    warm_lr_factor: float = 0.2
    temporal_count: int = 5
    temporal_dither: float = 0.0
    temporal_mode: str = "independent"

    def validate(self) -> None:
        errors = []
        if self.steps < 1:
            errors.append(f"steps must be >= 1, got {self.steps}")
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            errors.append(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0 <= self.beta1 < 1:
            errors.append(f"beta1 must lie in [0, 1), got {self.beta1}")
        if not 0 <= self.beta2 < 1:
            errors.append(f"beta2 must lie in [0, 1), got {self.beta2}")
        if not self.eps > 0:
            errors.append(f"eps must be > 0, got {self.eps}")
        if self.warm_steps < 1:
            errors.append(f"warm_steps must be >= 1, got {self.warm_steps}")
        if not self.warm_lr_factor > 0:
            errors.append(f"warm_lr_factor must be > 0, got {self.warm_lr_factor}")
        if self.temporal_count < 1:
            errors.append(f"temporal_count must be >= 1, got {self.temporal_count}")
        if not self.temporal_dither >= 0:
            errors.append(f"temporal_dither must be >= 0, got {self.temporal_dither}")
        if self.temporal_mode not in TEMPORAL_MODES:
            errors.append(f"temporal_mode must be one of {TEMPORAL_MODES}, got {self.temporal_mode}")
        if errors:
            raise InvalidConfigError("Invalid optimiser config: " + "; ".join(errors))
        if self.loss_kind not in LOSS_KINDS:
            raise UnsupportedConfigError(
                f"Unknown loss kind '{self.loss_kind}'; expected one of {LOSS_KINDS}")


@dataclass
class AdamState:
    """First and second moment estimates plus the number of updates taken."""
    first_moment: torch.Tensor
    second_moment: torch.Tensor
    step_count: int = 0

    @classmethod
    def zeros_like(cls, phase: torch.Tensor) -> "AdamState":
        return cls(torch.zeros_like(phase, dtype=torch.float64),
                   torch.zeros_like(phase, dtype=torch.float64), 0)


def adam_step(phase: torch.Tensor, gradient: torch.Tensor, state: AdamState,
              cfg: OptimConfig) -> Tuple[torch.Tensor, AdamState]:
    """One bias-corrected Adam update; the returned phase is wrapped to [0, 2*pi)."""
    if phase.shape != gradient.shape or phase.shape != state.first_moment.shape:
        raise InvalidInputError(
            f"Shape mismatch: phase {tuple(phase.shape)}, gradient {tuple(gradient.shape)}, "
            f"state {tuple(state.first_moment.shape)}")
    if not torch.isfinite(gradient).all():
        raise OptimisationDivergedError("Non-finite gradient", state.step_count + 1)

    step = state.step_count + 1
    gradient = gradient.detach().to(torch.float64)
    first = cfg.beta1 * state.first_moment + (1.0 - cfg.beta1) * gradient
    second = cfg.beta2 * state.second_moment + (1.0 - cfg.beta2) * gradient * gradient

    first_hat = first / (1.0 - cfg.beta1 ** step)
    second_hat = second / (1.0 - cfg.beta2 ** step)
    updated = phase.detach() - cfg.learning_rate * first_hat / (torch.sqrt(second_hat) + cfg.eps)

    return wrap_phase(updated), AdamState(first, second, step)


def value_and_gradient(loss_value_fn: Callable[[torch.Tensor], torch.Tensor],
                       phase: torch.Tensor) -> Tuple[float, torch.Tensor]:
    """Loss value and its exact derivative with respect to every phase value."""
    leaf = phase.detach().to(torch.float64).clone().requires_grad_(True)
    loss = loss_value_fn(leaf)
    if not isinstance(loss, torch.Tensor) or loss.dim() != 0:
        raise UnsupportedConfigError("Loss function must return a scalar tensor")
    if not loss.requires_grad:
        raise UnsupportedConfigError("Loss is not differentiable with respect to the phase")
    (grad,) = torch.autograd.grad(loss, leaf)
    return float(loss.detach()), grad


def gradient(loss_value_fn: Callable[[torch.Tensor], torch.Tensor], phase) -> torch.Tensor:
    """Reverse-mode gradient of a scalar loss with respect to a PhaseMap or phase tensor."""
    data = phase.data if isinstance(phase, PhaseMap) else phase
    return value_and_gradient(loss_value_fn, data)[1]


def simulate(phase: torch.Tensor, target: torch.Tensor, distance: float,
             wavelengths: Sequence[float], pitch: float = DEFAULT_PITCH,
             zero_pad: bool = False) -> torch.Tensor:
    """
    Reconstruction scaled per channel by the target's mean brightness.

    A phase-only SLM conserves energy, so the unscaled reconstruction has
    mean 1 per channel.
    """
    brightness = target.detach().to(torch.float64).mean(dim=(1, 2)).view(-1, 1, 1)
    return reconstruct_intensity(phase, distance, wavelengths, pitch, zero_pad) * brightness


def random_phase(shape, seed: int) -> torch.Tensor:
    """Uniform phases in [0, 2*pi) from a seeded generator."""
    generator = torch.Generator().manual_seed(int(seed))
    return wrap_phase(torch.rand(shape, generator=generator, dtype=torch.float64) * PHASE_PERIOD)


class HologramOptimiser:
    """
    Runs the optimisation loop for one target, gaze and focal distance.

    The loss is bound to the target once; every run reuses it.
    """

    def __init__(self, target: torch.Tensor, ctx: GazeContext, distance: float,
                 cfg: OptimConfig, loss_cfg: Optional[LossConfig] = None,
                 wavelengths: Optional[Sequence[float]] = None,
                 pitch: float = DEFAULT_PITCH, zero_pad: bool = False,
                 progress: Optional[ProgressCallback] = None,
                 logger: Optional[Logger] = None):
        check_image(target, "target")
        cfg.validate()
        ctx.validate()
        self.target = target.detach().to(torch.float64)
        self.ctx = ctx
        self.distance = float(distance)
        self.cfg = cfg
        self.loss_cfg = loss_cfg or LossConfig()
        self.wavelengths = tuple(wavelengths) if wavelengths else wavelengths_for(target.shape[0])
        self.pitch = pitch
        self.zero_pad = zero_pad
        self.progress = progress
        self.logger = logger

        if len(self.wavelengths) != target.shape[0]:
            raise InvalidConfigError(
                f"Target has {target.shape[0]} channel(s) but {len(self.wavelengths)} "
                f"wavelength(s) are configured")

        self.loss_fn = build_loss(cfg.loss_kind, self.target, ctx, self.loss_cfg)

    def reconstruct(self, phase: torch.Tensor) -> torch.Tensor:
        return simulate(phase, self.target, self.distance, self.wavelengths,
                        self.pitch, self.zero_pad)

    def objective(self, phase: torch.Tensor) -> torch.Tensor:
        return self.loss_fn(self.reconstruct(phase))

    def evaluate(self, phase) -> float:
        """Loss of a phase without computing gradients."""
        data = phase.data if isinstance(phase, PhaseMap) else phase
        with torch.no_grad():
            return float(self.objective(data.detach().to(torch.float64)))

    def run(self, initial_phase: torch.Tensor, cfg: OptimConfig,
            keep_best: bool = False,
            reference: Optional[torch.Tensor] = None) -> Tuple[PhaseMap, List[float]]:
        """
        Optimise from initial_phase for cfg.steps Adam updates.

        history[i] is the loss before update i+1. With keep_best the lowest
        loss iterate is returned, including the phase after the last update.
        A reference phase joins the candidates, so the result never scores
        worse than it; ties keep the reference.
        """
        cfg.validate()
        expected = (len(self.wavelengths),) + tuple(self.target.shape[1:])
        for name, tensor in (("Initial", initial_phase), ("Reference", reference)):
            if tensor is not None and tuple(tensor.shape) != expected:
                raise InvalidInputError(
                    f"{name} phase is {tuple(tensor.shape)}, target needs {expected}")

        phase = wrap_phase(initial_phase)
        state = AdamState.zeros_like(phase)
        history: List[float] = []
        best_loss, best_phase = math.inf, phase
        if keep_best and reference is not None:
            best_phase = wrap_phase(reference)
            best_loss = self.evaluate(best_phase)

        for iteration in range(1, cfg.steps + 1):
            value, grad = value_and_gradient(self.objective, phase)
            if not math.isfinite(value):
                raise OptimisationDivergedError(f"Loss became {value}", iteration)
            history.append(value)
            if value < best_loss:
                best_loss, best_phase = value, phase

            phase, state = adam_step(phase, grad, state, cfg)

            if self.logger:
                self.logger.debug(f"{cfg.loss_kind} iteration {iteration}/{cfg.steps} loss {value:.6e}")
            if self.progress:
                self.progress(iteration, cfg.steps, value)

        if keep_best:
            final = self.evaluate(phase)
            if not math.isfinite(final):
                raise OptimisationDivergedError(f"Loss became {final}", cfg.steps + 1)
            if final < best_loss:
                best_phase = phase
            phase = best_phase

        return PhaseMap(phase, self.pitch), history


def optimise_hologram(target: torch.Tensor, ctx: GazeContext, distance: float,
                      cfg: OptimConfig, **kwargs) -> Tuple[PhaseMap, List[float]]:
    """
    Optimise a phase-only hologram from a seeded random initialisation.

    Keyword arguments are passed to HologramOptimiser (loss_cfg, wavelengths,
    pitch, zero_pad, progress, logger).

    Returns:
        Final phase map and the per-iteration loss history
    """
    optimiser = HologramOptimiser(target, ctx, distance, cfg, **kwargs)
    initial = random_phase((len(optimiser.wavelengths),) + tuple(target.shape[1:]), cfg.seed)
    return optimiser.run(initial, cfg)


def _warm_config(cfg: OptimConfig, steps: Optional[int]) -> OptimConfig:
    return replace(cfg, steps=cfg.warm_steps if steps is None else steps,
                   learning_rate=cfg.learning_rate * cfg.warm_lr_factor)


def dither_phase(phase: torch.Tensor, dither: float, seed: int) -> torch.Tensor:
    """phase plus seeded uniform noise in [-dither, dither), wrapped."""
    if dither <= 0:
        return phase
    generator = torch.Generator().manual_seed(int(seed))
    noise = torch.rand(phase.shape, generator=generator, dtype=torch.float64) * 2.0 - 1.0
    return wrap_phase(phase.detach().to(torch.float64) + dither * noise)


def warm_start_optimise(prev: PhaseMap, target: torch.Tensor, ctx: GazeContext,
                        distance: float, cfg: OptimConfig, steps: Optional[int] = None,
                        dither: float = 0.0, dither_seed: Optional[int] = None,
                        **kwargs) -> Tuple[PhaseMap, List[float]]:
    """
    Continue from a previous phase map with a short, low-rate run.

    Defaults to cfg.warm_steps updates at cfg.learning_rate * cfg.warm_lr_factor.
    A positive dither perturbs the starting phase (seeded by dither_seed,
    default cfg.seed). Candidates are scored against the undithered prev, so
    the result never scores worse than prev.
    """
    if (prev.height, prev.width) != tuple(target.shape[1:]):
        raise InvalidInputError(
            f"Previous phase is {prev.width}x{prev.height}, target is "
            f"{target.shape[2]}x{target.shape[1]}")
    if dither < 0:
        raise InvalidConfigError(f"dither must be >= 0, got {dither}")
    optimiser = HologramOptimiser(target, ctx, distance, cfg, pitch=prev.pitch, **kwargs)
    seed = cfg.seed if dither_seed is None else dither_seed
    initial = dither_phase(prev.data, dither, seed)
    return optimiser.run(initial, _warm_config(cfg, steps), keep_best=True, reference=prev.data)


def temporal_sequence(target: torch.Tensor, ctx: GazeContext, distance: float,
                      cfg: OptimConfig, count: Optional[int] = None,
                      dither: Optional[float] = None, mode: Optional[str] = None,
                      **kwargs) -> Tuple[List[PhaseMap], torch.Tensor]:
    """
    Optimise count holograms of one target and average their reconstructions.

    The first frame starts from random_phase(cfg.seed). In "independent" mode
    frame k is a full run from random_phase(cfg.seed + k), so every frame is
    converged and carries its own speckle. In "warm" mode frame k continues
    from frame k-1 with a short low-rate run, dithered by +/- dither radians
    (seed cfg.seed + k); those frames stay close to their predecessor and
    their speckle is largely shared.

    Returns:
        All phase maps and the mean of their brightness-matched reconstructions
    """
    count = cfg.temporal_count if count is None else count
    dither = cfg.temporal_dither if dither is None else dither
    mode = cfg.temporal_mode if mode is None else mode
    if count < 1:
        raise InvalidConfigError(f"count must be >= 1, got {count}")
    if dither < 0:
        raise InvalidConfigError(f"dither must be >= 0, got {dither}")
    if mode not in TEMPORAL_MODES:
        raise UnsupportedConfigError(f"Unknown temporal mode '{mode}'; expected one of {TEMPORAL_MODES}")

    optimiser = HologramOptimiser(target, ctx, distance, cfg, **kwargs)
    shape = (len(optimiser.wavelengths),) + tuple(target.shape[1:])
    phase, _ = optimiser.run(random_phase(shape, cfg.seed), cfg)
    phases = [phase]

    warm = _warm_config(cfg, None)
    for k in range(1, count):
        if mode == "independent":
            phase, _ = optimiser.run(random_phase(shape, int(cfg.seed) + k), cfg)
        else:
            previous = phases[-1].data
            initial = dither_phase(previous, dither, int(cfg.seed) + k)
            phase, _ = optimiser.run(initial, warm, keep_best=True, reference=previous)
        phases.append(phase)

    with torch.no_grad():
        frames = torch.stack([optimiser.reconstruct(p.data) for p in phases])
    return phases, frames.mean(dim=0)
