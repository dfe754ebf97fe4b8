"""
Tests for the holographic display model.
"""

import math

import pytest
import torch

from metameric_holography.common.error_handler import InvalidConfigError, InvalidInputError
from metameric_holography.common.propagation import (
    DEFAULT_WAVELENGTHS,
    PHASE_PERIOD,
    WAVELENGTH_GREEN,
    ComplexField,
    PhaseMap,
    PropagationConfig,
    field_from_phase,
    fresnel_transfer,
    intensity,
    propagate,
    reconstruct_intensity,
    wavelengths_for,
    wrap_phase,
)


def _random_phase(shape, seed=0):
    generator = torch.Generator().manual_seed(seed)
    return torch.rand(shape, generator=generator, dtype=torch.float64) * 2 * math.pi


class TestWrapPhase:
    """Test phase canonicalization."""

    def test_range(self):
        phase = torch.tensor([-10.0, -math.pi, 0.0, 2 * math.pi, 7.5, 100.0], dtype=torch.float64)
        wrapped = wrap_phase(phase)
        assert float(wrapped.min()) >= 0.0
        assert float(wrapped.max()) < PHASE_PERIOD

    def test_preserves_value_modulo_period(self):
        phase = torch.tensor([-1.0, 3.0, 8.0], dtype=torch.float64)
        wrapped = wrap_phase(phase)
        assert torch.allclose(torch.exp(1j * wrapped), torch.exp(1j * phase), atol=1e-12)

    def test_idempotent(self):
        wrapped = wrap_phase(_random_phase((4, 4)) * 3 - 5)
        assert torch.equal(wrap_phase(wrapped), wrapped)


class TestPropagation:
    """Test Fresnel propagation."""

    def test_field_from_phase_is_unit_amplitude(self):
        field = field_from_phase(_random_phase((8, 8)))
        assert torch.allclose(field.data.abs(), torch.ones(8, 8, dtype=torch.float64))

    def test_field_from_phase_rejects_non_finite(self):
        phase = _random_phase((4, 4))
        phase[1, 1] = float("inf")
        with pytest.raises(InvalidInputError):
            field_from_phase(phase)

    def test_energy_is_conserved(self):
        field = field_from_phase(_random_phase((32, 48)))
        kernel = fresnel_transfer(48, 32, PropagationConfig(distance=0.1))
        out = propagate(field, kernel)

        assert float(out.energy()) == pytest.approx(float(field.energy()), rel=1e-10)

    def test_zero_distance_is_identity(self):
        field = field_from_phase(_random_phase((16, 16)))
        out = propagate(field, fresnel_transfer(16, 16, PropagationConfig(distance=0.0)))

        assert torch.allclose(out.data, field.data, atol=1e-12)

    def test_back_propagation_inverts(self):
        """Propagating by d and then by -d returns the original field."""
        field = field_from_phase(_random_phase((24, 24), seed=3))
        forward = propagate(field, fresnel_transfer(24, 24, PropagationConfig(distance=0.2)))
        back = propagate(forward, fresnel_transfer(24, 24, PropagationConfig(distance=-0.2)))

        assert torch.allclose(back.data, field.data, atol=1e-10)

    def test_constant_phase_gives_uniform_intensity(self):
        phase = torch.full((1, 16, 16), 1.3, dtype=torch.float64)
        image = reconstruct_intensity(phase, 0.15, [WAVELENGTH_GREEN])

        assert torch.allclose(image, torch.ones_like(image), atol=1e-12)

    def test_mean_intensity_is_one(self):
        image = reconstruct_intensity(_random_phase((3, 32, 32)), 0.15, DEFAULT_WAVELENGTHS)

        assert image.shape == (3, 32, 32)
        assert float(image.min()) >= 0.0
        assert torch.allclose(image.mean(dim=(1, 2)), torch.ones(3, dtype=torch.float64), atol=1e-10)

    def test_wavelengths_differ(self):
        """The same phase focuses differently per wavelength."""
        phase = _random_phase((1, 32, 32), seed=5)
        red = reconstruct_intensity(phase, 0.15, [DEFAULT_WAVELENGTHS[0]])
        blue = reconstruct_intensity(phase, 0.15, [DEFAULT_WAVELENGTHS[2]])

        assert not torch.allclose(red, blue)

    def test_zero_padding(self):
        phase = PhaseMap(_random_phase((1, 16, 20), seed=6))
        padded = reconstruct_intensity(phase, 0.15, [WAVELENGTH_GREEN], zero_pad=True)

        assert padded.shape == (1, 16, 20)
        assert float(padded.min()) >= 0.0
        # energy can only leave the cropped window
        assert float(padded.sum()) <= 16 * 20 * (1 + 1e-10)

    def test_zero_padding_at_zero_distance_is_identity(self):
        phase = _random_phase((1, 8, 8), seed=7)
        image = reconstruct_intensity(phase, 0.0, [WAVELENGTH_GREEN], zero_pad=True)

        assert torch.allclose(image, torch.ones_like(image), atol=1e-12)

    def test_intensity(self):
        field = ComplexField(torch.tensor([[3 + 4j, 1j]], dtype=torch.complex128).repeat(2, 1))
        assert torch.allclose(intensity(field), torch.tensor([[25.0, 1.0], [25.0, 1.0]], dtype=torch.float64))


class TestDifferentiability:
    """Test gradients through propagation."""

    def test_gradcheck(self):
        weights = torch.rand((1, 6, 6), generator=torch.Generator().manual_seed(1), dtype=torch.float64)

        def weighted_intensity(phase):
            return (reconstruct_intensity(phase, 0.05, [WAVELENGTH_GREEN]) * weights).sum()

        phase = _random_phase((1, 6, 6), seed=2).requires_grad_(True)
        assert torch.autograd.gradcheck(weighted_intensity, (phase,), eps=1e-6, atol=1e-6)

    def test_total_energy_has_zero_gradient(self):
        phase = _random_phase((1, 8, 8), seed=4).requires_grad_(True)
        reconstruct_intensity(phase, 0.1, [WAVELENGTH_GREEN]).sum().backward()

        assert torch.allclose(phase.grad, torch.zeros_like(phase), atol=1e-10)


class TestValidation:
    """Test input validation."""

    def test_field_too_small(self):
        with pytest.raises(InvalidInputError):
            fresnel_transfer(1, 4, PropagationConfig())

    @pytest.mark.parametrize("cfg", [
        PropagationConfig(wavelength=0.0),
        PropagationConfig(pitch=-1e-6),
        PropagationConfig(distance=float("inf")),
    ])
    def test_invalid_config(self, cfg):
        with pytest.raises(InvalidConfigError):
            cfg.validate()

    def test_kernel_size_mismatch(self):
        field = field_from_phase(_random_phase((8, 8)))
        with pytest.raises(InvalidInputError):
            propagate(field, fresnel_transfer(8, 10, PropagationConfig()))

    def test_wavelength_count_mismatch(self):
        with pytest.raises(InvalidConfigError):
            reconstruct_intensity(_random_phase((3, 8, 8)), 0.1, [WAVELENGTH_GREEN])

    def test_phase_map_channels(self):
        with pytest.raises(InvalidInputError):
            PhaseMap(torch.zeros((2, 4, 4), dtype=torch.float64))
        assert PhaseMap(torch.zeros((3, 4, 5))).width == 5

    def test_default_wavelengths(self):
        assert wavelengths_for(3) == DEFAULT_WAVELENGTHS
        assert wavelengths_for(1) == (WAVELENGTH_GREEN,)
        with pytest.raises(InvalidInputError):
            wavelengths_for(2)
