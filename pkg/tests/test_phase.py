import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from omnidisplay import (OpticalConfig, PhaseMap, QuantizedPhaseMap, additive_phase, fresnel_phase,
                         superposition_phase, wrap_quantize)
from omnidisplay.phase import slm_coordinates

# pi * (5 mm)^2 / (550 nm * 80.6 m), 30-digit arithmetic
QUADRATIC_AT_5MM = 1.77170801578490483
# sin(x/2) / (x/2) with x = 2 pi / 256: mean overlap after floor quantization of a uniform phase
QUANTIZATION_EFFICIENCY = 0.999974900487050076


@pytest.fixture
def coarse():
    """11x11 SLM with 1 mm pixels so samples fall on round radii."""
    return OpticalConfig.desk(slm_pixels=(11, 11), slm_pitch=1e-3)


def test_flat_lens_without_offset_is_zero(desk):
    phi = fresnel_phase((0.0, 0.0), math.inf, desk)
    assert phi.shape == (512, 512)
    assert not phi.values.any()


def test_linear_ramp_slope(desk):
    d = 2e-4
    phi = fresnel_phase((d, 0.0), math.inf, desk).values
    slope = np.diff(phi[0]) / desk.slm_pitch
    expected = 2 * np.pi / desk.wavelength * math.sin(d / desk.objective_focal)
    assert slope == pytest.approx(np.full(511, expected), rel=1e-9)
    assert np.ptp(phi, axis=0).max() == 0.0


def test_ramp_uses_sine_of_offset_ratio(desk):
    # a short objective makes l / f_o large enough to tell sin(a) from a
    cfg = desk.replace(objective_focal=1e-3)
    d = 0.8e-3
    phi = fresnel_phase((d, 0.0), math.inf, cfg).values
    slope = (phi[0, 1] - phi[0, 0]) / cfg.slm_pitch
    k = 2 * np.pi / cfg.wavelength
    assert slope == pytest.approx(k * math.sin(0.8), rel=1e-12)
    assert abs(slope - k * 0.8) > 0.05 * abs(slope)


def test_quadratic_value_at_five_millimeters(coarse):
    phi = fresnel_phase((0.0, 0.0), 80.6, coarse).values
    assert phi[5, 10] == pytest.approx(QUADRATIC_AT_5MM, rel=1e-12)
    assert phi[5, 5] == 0.0


def test_degenerate_lens(desk):
    with pytest.raises(ValueError, match="degenerate"):
        fresnel_phase((0.0, 0.0), 0.0, desk)
    with pytest.raises(ValueError):
        fresnel_phase((math.nan, 0.0), 10.0, desk)


@settings(max_examples=25)
@given(st.floats(1.0, 1e3), st.sampled_from([(8, 8), (9, 9), (6, 10)]))
def test_centered_lens_is_even(focal, shape):
    cfg = OpticalConfig.desk(slm_pixels=(shape[1], shape[0]), slm_pitch=1e-4)
    v = fresnel_phase((0.0, 0.0), focal, cfg).values
    assert np.array_equal(v, v[::-1, :]) and np.array_equal(v, v[:, ::-1])


def test_pixel_center_coordinates():
    x, y = slm_coordinates((4, 5), 2.0)
    assert x.ravel().tolist() == [-4.0, -2.0, 0.0, 2.0, 4.0]
    assert y.ravel().tolist() == [-3.0, -1.0, 1.0, 3.0]


def test_additive_identities(rng):
    phi = PhaseMap(rng.uniform(-5, 5, (16, 16)), 1e-5)
    zero = PhaseMap(np.zeros((16, 16)), 1e-5)
    assert np.array_equal(additive_phase([phi, zero]).values, phi.values)
    assert not additive_phase([phi, PhaseMap(-phi.values, 1e-5)]).values.any()
    with pytest.raises(ValueError):
        additive_phase([phi, PhaseMap(np.zeros((8, 8)), 1e-5)])


def test_superposition_examples(rng):
    a = PhaseMap(np.zeros((4, 4)), 1.0)
    b = PhaseMap(np.full((4, 4), np.pi / 2), 1.0)
    assert superposition_phase([a, b]).values == pytest.approx(np.full((4, 4), np.pi / 4), abs=1e-15)
    phi = PhaseMap(rng.uniform(-10, 10, (8, 8)), 1.0)
    b8 = PhaseMap(np.full((8, 8), np.pi / 2), 1.0)
    out = superposition_phase([phi, b8], [1.0, 0.0]).values
    assert np.all((out > -np.pi) & (out <= np.pi))
    assert np.exp(1j * out) == pytest.approx(np.exp(1j * phi.values), abs=1e-12)
    assert superposition_phase([phi]).values == pytest.approx(out, abs=1e-12)


def test_superposition_rejects_bad_weights():
    a = PhaseMap(np.zeros((4, 4)), 1.0)
    with pytest.raises(ValueError):
        superposition_phase([a, a], [0.0, 0.0])
    with pytest.raises(ValueError):
        superposition_phase([a, a], [1.0, -1.0])
    with pytest.raises(ValueError):
        superposition_phase([a, a], [1.0])


def test_superposition_result_never_negative_pi():
    a = PhaseMap(np.full((2, 2), np.pi), 1.0)
    assert np.all(superposition_phase([a]).values == np.pi)


def test_quantization_examples(desk):
    shape = (4, 4)
    assert not wrap_quantize(PhaseMap(np.zeros(shape), 1.0), desk).levels.any()
    q = wrap_quantize(PhaseMap(np.full(shape, 2 * np.pi - 1e-9), 1.0), desk)
    assert np.all(q.levels == 255) and q.levels.dtype == np.uint8
    assert np.all(wrap_quantize(PhaseMap(np.full(shape, np.pi), 1.0), desk).levels == 128)
    assert np.all(wrap_quantize(PhaseMap(np.full(shape, -np.pi / 2), 1.0), 4).levels == 3)


@given(arrays(np.float64, (6, 6), elements=st.floats(-100, 100)), st.sampled_from([2, 16, 256, 1024]))
def test_requantizing_is_idempotent(values, n):
    q = wrap_quantize(PhaseMap(values, 1.0), n)
    again = wrap_quantize(q.to_phase(), n)
    assert np.array_equal(q.levels, again.levels)
    assert q.levels.max() < n


def test_quantization_efficiency_on_uniform_phase():
    # dense uniform grid over [0, 2 pi), offset so samples are not aligned with the levels
    phi = (np.arange(256 * 4096) + 0.37) * (2 * np.pi / (256 * 4096))
    q = wrap_quantize(PhaseMap(phi.reshape(1024, -1), 1.0), 256).to_phase().values.ravel()
    eff = abs(np.mean(np.exp(1j * (phi - q))))
    assert eff == pytest.approx(QUANTIZATION_EFFICIENCY, abs=1e-9)
    assert eff >= 0.9999


def test_quantized_map_validation():
    with pytest.raises(ValueError):
        QuantizedPhaseMap(np.array([[256]]), 1.0, 256)
    with pytest.raises(ValueError):
        PhaseMap(np.array([[np.inf]]), 1.0)
