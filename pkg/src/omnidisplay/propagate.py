"""Scalar wave-optics model of the relay, the intermediate depth images and the viewing camera.

The relay is a unit-magnification 4f system with the SLM in its Fourier plane.
A field spatial frequency ``nu`` reaches the SLM at ``x_f = lambda * f_r * nu``
where ``f_r = sqrt(relay_constant)``. Every stage is a multiplication in the
frequency domain, so the panel-to-camera path is one linear shift-invariant
system:

    H(nu) = SLM(lambda f_r nu) * AS(nu; distance) * pupil(nu)

Two imaging models are provided. ``"coherent"`` propagates the amplitude
sqrt(panel) and returns |field|^2. ``"incoherent"`` convolves the panel
intensity with the intensity PSF |IFFT(H)|^2, which is how a self-luminous
panel actually images.

All FFTs go through :mod:`scipy.fft`; wrap calls in ``scipy.fft.set_workers``
to use several threads. Results do not depend on the worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .optics import OpticalConfig, axial_offset
from .phase import PhaseMap, QuantizedPhaseMap

COHERENCE_MODES = ("coherent", "incoherent")


class BandLimitError(ValueError):
    """Propagation distance too large for the sampling of the transfer function."""


@dataclass(frozen=True)
class ComplexField:
    samples: np.ndarray
    pitch: float
    wavelength: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 2:
            raise ValueError("field must be 2-D")
        if not np.all(np.isfinite(samples)):
            raise ValueError("field contains non-finite samples")
        if not self.pitch > 0:
            raise ValueError("pitch must be > 0")
        object.__setattr__(self, "samples", samples)

    @property
    def shape(self):
        return self.samples.shape

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))

    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2


@dataclass(frozen=True)
class CameraModel:
    """Eyepiece plus camera as one ideal lens focused at ``focus`` diopters.

    ``aperture_diameter`` is the entrance pupil behind the eyepiece; it sets the
    numerical aperture (aperture / 2) / f_e at the intermediate images.
    ``sensor_pixels`` (rows, cols) crops the center of the panel grid.
    """

    focus: float
    aperture_diameter: float
    sensor_pixels: tuple[int, int] | None = None

    def __post_init__(self):
        if not self.aperture_diameter > 0:
            raise ValueError("aperture_diameter must be > 0")

    def cutoff(self, cfg: OpticalConfig) -> float:
        """Coherent cutoff frequency (cycles/m) at the intermediate image plane."""
        if math.isinf(self.aperture_diameter):
            return math.inf
        return self.aperture_diameter / (2 * cfg.eyepiece_focal * cfg.wavelength)


def panel_to_field(panel: np.ndarray, cfg: OpticalConfig) -> ComplexField:
    """Amplitude sqrt(intensity) with flat phase at the panel pitch."""
    panel = np.asarray(panel, dtype=np.float64)
    return ComplexField(np.sqrt(np.clip(panel, 0, None)), cfg.panel_pitch, cfg.wavelength)


# sampling helpers ------------------------------------------------------------------------

def _pad(a: np.ndarray, factor: int):
    if factor == 1:
        return a, (slice(None), slice(None))
    rows, cols = a.shape
    R, C = rows * factor, cols * factor
    r0, c0 = (R - rows) // 2, (C - cols) // 2
    out = np.zeros((R, C), dtype=a.dtype)
    sl = (slice(r0, r0 + rows), slice(c0, c0 + cols))
    out[sl] = a
    return out, sl


def _frequencies(shape, pitch):
    fy = sfft.fftfreq(shape[0], pitch)[:, np.newaxis]
    fx = sfft.fftfreq(shape[1], pitch)[np.newaxis, :]
    return fx, fy


def _slm_phase(slm) -> PhaseMap:
    if isinstance(slm, QuantizedPhaseMap):
        return slm.to_phase()
    if isinstance(slm, PhaseMap):
        return slm
    raise TypeError(f"expected a phase map, got {type(slm).__name__}")


def slm_transfer(slm, shape, pitch: float, cfg: OpticalConfig) -> np.ndarray:
    """SLM transmission sampled on the FFT frequency grid of a ``shape`` field.

    Each frequency sample takes the phase of the SLM pixel that contains its
    Fourier-plane position (nearest neighbour). Frequencies that fall outside
    the SLM are blocked.
    """
    phase = _slm_phase(slm)
    rows, cols = phase.shape
    s = phase.pitch
    scale = cfg.wavelength * cfg.relay_focal
    fx, fy = _frequencies(shape, pitch)
    ix = np.floor(fx[0] * scale / s + cols / 2).astype(np.int64)
    iy = np.floor(fy[:, 0] * scale / s + rows / 2).astype(np.int64)
    okx = (ix >= 0) & (ix < cols)
    oky = (iy >= 0) & (iy < rows)
    t = np.exp(1j * phase.values[np.clip(iy, 0, rows - 1)][:, np.clip(ix, 0, cols - 1)])
    if not (okx.all() and oky.all()):
        t *= oky[:, np.newaxis] & okx[np.newaxis, :]
    return t


def band_limit_distance(shape, pitch: float, wavelength: float) -> float:
    """Largest |distance| whose angular-spectrum kernel is Nyquist sampled on this grid."""
    if pitch <= wavelength / 2:
        raise BandLimitError("grid pitch must exceed half a wavelength")
    d = math.inf
    for n in shape:
        nu = 1 / (2 * pitch)
        slope = nu / math.sqrt(1 / wavelength ** 2 - nu ** 2)
        d = min(d, n * pitch / (2 * slope))
    return d


def angular_spectrum_transfer(shape, pitch: float, wavelength: float, distance: float) -> np.ndarray:
    """exp(j 2 pi d sqrt(1/lambda^2 - nu^2)); evanescent terms decay."""
    if not math.isfinite(distance):
        raise ValueError("distance must be finite")
    d_max = band_limit_distance(shape, pitch, wavelength)
    if abs(distance) > d_max:
        raise BandLimitError(
            f"|distance| {abs(distance):.4g} m exceeds the {d_max:.4g} m band limit of a "
            f"{shape[0]}x{shape[1]} grid; pad by at least {math.ceil(abs(distance) / d_max)}x more")
    fx, fy = _frequencies(shape, pitch)
    arg = 1 / wavelength ** 2 - fx ** 2 - fy ** 2
    root = np.sqrt(np.abs(arg))
    return np.where(arg > 0, np.exp(2j * np.pi * distance * root), np.exp(-2 * np.pi * abs(distance) * root))


# field operations ------------------------------------------------------------------------

def relay_4f(field: ComplexField, slm, cfg: OpticalConfig, pad: int = 2) -> ComplexField:
    """Field at the native output plane of the relay: IFFT[FFT[u] * SLM]."""
    a, sl = _pad(field.samples, pad)
    H = slm_transfer(slm, a.shape, field.pitch, cfg)
    out = sfft.ifft2(sfft.fft2(a) * H)[sl]
    return ComplexField(out, field.pitch, field.wavelength)


def propagate_angular_spectrum(field: ComplexField, distance: float, pad: int = 2) -> ComplexField:
    """Free-space propagation by ``distance`` meters on a ``pad``-times zero-padded grid."""
    if distance == 0:
        return ComplexField(field.samples.copy(), field.pitch, field.wavelength)
    a, sl = _pad(field.samples, pad)
    H = angular_spectrum_transfer(a.shape, field.pitch, field.wavelength, distance)
    out = sfft.ifft2(sfft.fft2(a) * H)[sl]
    return ComplexField(out, field.pitch, field.wavelength)


def system_transfer(shape, pitch: float, slm, cfg: OpticalConfig, distance: float,
                    cutoff: float | None = None) -> np.ndarray:
    """Panel-to-observation transfer: SLM, free space by ``distance``, circular pupil."""
    H = slm_transfer(slm, shape, pitch, cfg)
    if distance:
        H = H * angular_spectrum_transfer(shape, pitch, cfg.wavelength, distance)
    if cutoff is not None and math.isfinite(cutoff):
        fx, fy = _frequencies(shape, pitch)
        H = H * (fx ** 2 + fy ** 2 <= cutoff ** 2)
    return H


def image_panel(panel: np.ndarray, slm, cfg: OpticalConfig, distance: float,
                coherence: str = "incoherent", cutoff: float | None = None, pad: int = 2) -> np.ndarray:
    """Intensity observed ``distance`` past the native image plane."""
    if coherence not in COHERENCE_MODES:
        raise ValueError(f"coherence must be one of {COHERENCE_MODES}")
    panel = np.asarray(panel, dtype=np.float64)
    a, sl = _pad(np.clip(panel, 0, None), pad)
    H = system_transfer(a.shape, cfg.panel_pitch, slm, cfg, distance, cutoff)
    if coherence == "coherent":
        out = np.abs(sfft.ifft2(sfft.fft2(np.sqrt(a)) * H)) ** 2
    else:
        psf = np.abs(sfft.ifft2(H)) ** 2
        out = np.clip(sfft.irfft2(sfft.rfft2(a) * sfft.rfft2(psf), s=a.shape), 0, None)
    return out[sl]


def _check_depths(depths, cfg):
    for d in depths:
        if not 0 <= d <= cfg.native_diopter:
            raise ValueError(f"probe depth {d} D outside [0, {cfg.native_diopter}] D")


def simulate_depth_stack(panel: np.ndarray, slm, cfg: OpticalConfig, probe_depths: Sequence[float],
                         coherence: str = "incoherent", aperture: float | None = None) -> list[np.ndarray]:
    """Intermediate images at each probe depth.

    A probe at D diopters observes the plane (D_native - D) f_e^2 past the
    native output plane of the relay. ``aperture`` optionally limits the
    numerical aperture as in :class:`CameraModel`.
    """
    _check_depths(probe_depths, cfg)
    cutoff = CameraModel(0.0, aperture).cutoff(cfg) if aperture else None
    return [image_panel(panel, slm, cfg, axial_offset(d, cfg), coherence, cutoff) for d in probe_depths]


def camera_capture(panel: np.ndarray, slm, cfg: OpticalConfig, cam: CameraModel,
                   coherence: str = "incoherent") -> np.ndarray:
    """Image recorded by a camera focused at ``cam.focus`` diopters."""
    _check_depths([cam.focus], cfg)
    img = image_panel(panel, slm, cfg, axial_offset(cam.focus, cfg), coherence, cam.cutoff(cfg))
    if cam.sensor_pixels is not None:
        rows, cols = cam.sensor_pixels
        r0 = (img.shape[0] - rows) // 2
        c0 = (img.shape[1] - cols) // 2
        img = img[r0:r0 + rows, c0:c0 + cols]
    return img
