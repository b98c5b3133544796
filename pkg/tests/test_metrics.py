import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omnidisplay import ContrastCurve, EdgeError, MtfCurve, contrast_at, sharpness, slanted_edge_mtf
from omnidisplay.metrics import central_roi
from omnidisplay.scenes import slanted_edge

PITCH_MM = 0.02
SIGMA_MM = 0.1
# exp(-2 pi^2 sigma^2 f^2) at sigma = 0.1 mm and f = 5 lp/mm
GAUSS_AT_5 = 0.00719188335582636561


def gaussian_mtf(f, sigma=SIGMA_MM):
    return np.exp(-2 * np.pi ** 2 * sigma ** 2 * np.asarray(f) ** 2)


@pytest.fixture(scope="module")
def blurred_curve():
    img = slanted_edge((256, 256), 5.0, blur_sigma=SIGMA_MM / PITCH_MM)
    return slanted_edge_mtf(img, PITCH_MM)


@pytest.fixture(scope="module")
def sharp_curve():
    return slanted_edge_mtf(slanted_edge((256, 256), 5.0), PITCH_MM)


def test_gaussian_edge_matches_analytic_mtf(blurred_curve):
    f = blurred_curve.frequencies
    band = f <= 0.25 / PITCH_MM
    err = np.abs(blurred_curve.modulation[band] - gaussian_mtf(f[band]))
    assert err.max() < 0.02
    assert blurred_curve.angle == pytest.approx(5.0, abs=0.05)


def test_gaussian_edge_deep_attenuation(blurred_curve):
    assert blurred_curve.at(5.0) == pytest.approx(GAUSS_AT_5, rel=0.05)


def test_ideal_edge_is_nearly_flat(sharp_curve):
    f = sharp_curve.frequencies
    assert np.all(sharp_curve.modulation[f <= 0.125 / PITCH_MM] >= 0.95)
    assert sharp_curve.at(5.0) >= 0.95
    assert sharp_curve.at(0.0) == pytest.approx(1.0)
    assert f[-1] == pytest.approx(0.5 / PITCH_MM, rel=1e-3)
    assert np.all(np.diff(f) > 0)


def test_blur_never_raises_modulation(sharp_curve, blurred_curve):
    band = sharp_curve.frequencies <= 0.25 / PITCH_MM
    assert np.all(blurred_curve.modulation[band] <= sharp_curve.modulation[band] + 0.01)


@settings(max_examples=10, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_scale_invariance(scale):
    img = slanted_edge((64, 64), 6.0, blur_sigma=1.5)
    a = slanted_edge_mtf(img, PITCH_MM)
    b = slanted_edge_mtf(scale * img, PITCH_MM)
    assert b.modulation == pytest.approx(a.modulation, abs=1e-9)


def test_mirrored_edge_gives_same_curve():
    img = slanted_edge((64, 64), 4.0, blur_sigma=1.0)
    a = slanted_edge_mtf(img, PITCH_MM)
    b = slanted_edge_mtf(img[:, ::-1], PITCH_MM)
    assert b.modulation == pytest.approx(a.modulation, abs=0.02)


@pytest.mark.parametrize("img", [np.full((32, 32), 0.3), slanted_edge((64, 64), 0.0),
                                 slanted_edge((64, 64), 20.0), slanted_edge((64, 64), 90.0)])
def test_unusable_regions(img):
    with pytest.raises(EdgeError):
        slanted_edge_mtf(img, PITCH_MM)


def test_contrast_at_interpolates_and_checks_range():
    curve = MtfCurve(np.array([0.0, 10.0]), np.array([1.0, 0.0]))
    assert contrast_at(curve, 2.5) == pytest.approx(0.75)
    assert curve.at(0.0) == 1.0
    with pytest.raises(ValueError):
        contrast_at(curve, 11.0)


def test_sharpness_prefers_sharp_images():
    img = slanted_edge((64, 64), 5.0)
    blurred = slanted_edge((64, 64), 5.0, blur_sigma=2.0)
    assert sharpness(img) > 5 * sharpness(blurred)
    assert sharpness(img, (0, 10, 0, 10)) == 0.0
    assert central_roi(np.arange(36).reshape(6, 6), 2).tolist() == [[14, 15], [20, 21]]


def test_contrast_curve_helpers(tmp_path):
    c = ContrastCurve(np.array([1.0, 1.5, 2.0]), np.array([0.5, 0.8, 0.4]), "focus_diopter")
    assert c.argmax == 1.5 and c.is_unimodal()
    assert c.relative().tolist() == pytest.approx([0.625, 1.0, 0.5])
    assert not c.is_nonincreasing()
    down = ContrastCurve(np.arange(3.0), np.array([1.0, 1.015, 0.9]))
    assert down.is_nonincreasing(0.02) and not down.is_nonincreasing(0.01)
    text = c.to_csv(tmp_path / "c.csv")
    assert text.splitlines()[0] == "focus_diopter,contrast,relative"
    assert (tmp_path / "c.csv").read_text() == text
    assert not ContrastCurve(np.arange(3.0), np.array([0.5, 0.4, 0.6])).is_unimodal()
