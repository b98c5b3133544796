"""Slanted-edge MTF, image sharpness and the two depth-fusion contrast experiments."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .optics import OpticalConfig, DepthPlan, mode_for_depths, subpanel_layout
from .phase import sub_panel_targets, wrap_quantize
from .propagate import CameraModel, camera_capture
from .scenes import edge_panel
from .wgs import WgsParams, wgs_optimize

DEFAULT_FREQUENCY = 5.0        # lp/mm
DEFAULT_APERTURE = 3.0e-3      # m, camera entrance pupil behind the eyepiece
DEFAULT_EDGE_ANGLE = 5.0       # degrees from vertical
MIN_TILT, MAX_TILT = 2.0, 10.0


class EdgeError(ValueError):
    """No usable slanted edge in the region."""


@dataclass(frozen=True)
class MtfCurve:
    frequencies: np.ndarray   # cycles/mm, ascending
    modulation: np.ndarray
    angle: float = float("nan")

    def at(self, f: float) -> float:
        return contrast_at(self, f)


@dataclass(frozen=True)
class ContrastCurve:
    abscissa: np.ndarray      # diopters, ascending
    contrast: np.ndarray
    label: str = "diopter"

    def relative(self) -> np.ndarray:
        return self.contrast / self.contrast.max()

    @property
    def argmax(self) -> float:
        return float(self.abscissa[int(np.argmax(self.contrast))])

    def is_nonincreasing(self, slack: float = 0.0) -> bool:
        """Each point at most (1 + slack) times its predecessor."""
        c = self.contrast
        return bool(np.all(c[1:] <= c[:-1] * (1 + slack)))

    def is_unimodal(self) -> bool:
        """Non-decreasing up to the maximum and non-increasing after it."""
        k = int(np.argmax(self.contrast))
        c = self.contrast
        return bool(np.all(np.diff(c[:k + 1]) >= 0) and np.all(np.diff(c[k:]) <= 0))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.label, "contrast", "relative"])
        for a, c, r in zip(self.abscissa, self.contrast, self.relative()):
            w.writerow([repr(float(a)), repr(float(c)), repr(float(r))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


# slanted edge ----------------------------------------------------------------------------

def _row_centroids(img: np.ndarray) -> np.ndarray:
    d = np.diff(img, axis=1)
    x = np.arange(d.shape[1]) + 0.5
    total = d.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (d * x).sum(axis=1) / total


def slanted_edge_mtf(region: np.ndarray, pitch_mm: float, oversample: int = 4) -> MtfCurve:
    """MTF of a near-vertical slanted edge.

    The edge line is fitted to the per-row centroids of the horizontal
    derivative; pixels are projected onto the edge normal and binned at
    ``oversample`` bins per pixel into an edge-spread function. Its central
    difference is Hann-windowed about its centroid and Fourier transformed.
    The response of the central difference and of the bin width is divided
    out. Frequencies run from 0 to the pixel Nyquist frequency in cycles/mm.

    Raises
    ------
    EdgeError
        Flat region, or edge tilt outside 2-10 degrees from vertical.
    """
    img = np.asarray(region, dtype=np.float64)
    if img.ndim != 2 or min(img.shape) < 8:
        raise EdgeError("region must be 2-D and at least 8x8")
    lo, hi = img.min(), img.max()
    if not hi - lo > 1e-9 * max(abs(hi), abs(lo), 1e-300):
        raise EdgeError("no edge detected: region is uniform")
    img = (img - lo) / (hi - lo)
    rows, cols = img.shape
    if abs(np.diff(img, axis=0)).sum() > abs(np.diff(img, axis=1)).sum():
        raise EdgeError("edge is not near-vertical")
    if img[:, -cols // 4:].mean() < img[:, :cols // 4].mean():
        img = img[:, ::-1]

    cent = _row_centroids(img)
    yy = np.arange(rows)
    ok = np.isfinite(cent)
    if ok.sum() < 4:
        raise EdgeError("no edge detected")
    slope, offset = np.polyfit(yy[ok], cent[ok], 1)
    angle = math.degrees(math.atan(slope))
    if not MIN_TILT <= abs(angle) <= MAX_TILT:
        raise EdgeError(f"edge tilt {angle:.2f} deg outside [{MIN_TILT}, {MAX_TILT}]")

    y, x = np.mgrid[0:rows, 0:cols]
    dist = (x - (slope * y + offset)) * math.cos(math.atan(slope))
    reach = min(-dist.min(), dist.max())
    nb = int(math.floor(reach * oversample))
    idx = np.floor(dist * oversample).astype(np.int64) + nb
    keep = (idx >= 0) & (idx < 2 * nb)
    counts = np.bincount(idx[keep], minlength=2 * nb)
    sums = np.bincount(idx[keep], weights=img[keep], minlength=2 * nb)
    filled = counts > 0
    centers = np.arange(2 * nb)
    esf = np.interp(centers, centers[filled], sums[filled] / counts[filled])

    lsf = np.gradient(esf)
    n = len(lsf)
    c = float(np.sum(centers * lsf) / np.sum(lsf))
    half = max(min(c, n - 1 - c), 1.0)
    u = (centers - c) / half
    lsf = lsf * np.where(np.abs(u) <= 1, 0.5 * (1 + np.cos(np.pi * u)), 0.0)

    step = pitch_mm / oversample
    nfft = max(16384, 1 << (n - 1).bit_length())
    spec = np.abs(np.fft.rfft(lsf, nfft))
    freqs = np.fft.rfftfreq(nfft, step)
    mtf = spec / spec[0]
    mtf = mtf / (np.sinc(2 * freqs * step) * np.sinc(freqs * step))
    keep = freqs <= 0.5 / pitch_mm + 1e-12
    return MtfCurve(freqs[keep], mtf[keep], angle)


def contrast_at(curve: MtfCurve, f: float) -> float:
    """Linearly interpolated modulation at ``f`` cycles/mm."""
    fr = curve.frequencies
    if not fr[0] <= f <= fr[-1]:
        raise ValueError(f"{f} cycles/mm outside [{fr[0]}, {fr[-1]}]")
    return float(np.interp(f, fr, curve.modulation))


# sharpness -------------------------------------------------------------------------------

def sharpness(image: np.ndarray, box=None) -> float:
    """Mean squared Laplacian over ``box`` = (r0, r1, c0, c1)."""
    lap = ndimage.laplace(np.asarray(image, dtype=np.float64), mode="nearest")
    if box is not None:
        r0, r1, c0, c1 = box
        lap = lap[r0:r1, c0:c1]
    return float(np.mean(lap ** 2))


def central_roi(image: np.ndarray, size: int) -> np.ndarray:
    rows, cols = image.shape
    r0, c0 = (rows - size) // 2, (cols - size) // 2
    return image[r0:r0 + size, c0:c0 + size]


# depth-fusion experiments ----------------------------------------------------------------

def synthesize_pattern(cfg: OpticalConfig, depths: Sequence[float], params: WgsParams = WgsParams()):
    """Layout and quantized WGS pattern that maps one sub-panel to each depth."""
    plan = DepthPlan.from_depths(sorted(depths), cfg)
    layout = subpanel_layout(cfg, mode_for_depths(cfg, plan.depths))
    targets = sub_panel_targets(layout, plan, cfg)
    est, trace = wgs_optimize(targets, params)
    return layout, wrap_quantize(est, cfg), trace


def _roi_size(layout) -> int:
    th, tw = layout.occupied[0].rect[2:]
    return min(th, tw) // 2


def fused_edge_mtfs(cfg: OpticalConfig, planes: Sequence[float], foci: Sequence[float],
                    aperture: float = DEFAULT_APERTURE, params: WgsParams = WgsParams(),
                    coherence: str = "incoherent", roi: int | None = None) -> list[MtfCurve]:
    """Edge MTF seen at each camera focus for identical edges shown on ``planes``."""
    layout, slm, _ = synthesize_pattern(cfg, planes, params)
    panel = edge_panel(layout, DEFAULT_EDGE_ANGLE, 1.0 / len(planes))
    roi = roi or _roi_size(layout)
    pitch_mm = cfg.panel_pitch * 1e3
    curves = []
    for z in foci:
        img = camera_capture(panel, slm, cfg, CameraModel(z, aperture), coherence)
        curves.append(slanted_edge_mtf(central_roi(img, roi), pitch_mm))
    return curves


def contrast_vs_accommodation(cfg: OpticalConfig, foci: Sequence[float], planes=(1.0, 2.0),
                              frequency: float = DEFAULT_FREQUENCY, **kwargs) -> ContrastCurve:
    """Contrast of a two-plane fused edge as the camera focus sweeps ``foci``."""
    foci = np.sort(np.asarray(foci, dtype=float))
    curves = fused_edge_mtfs(cfg, planes, foci, **kwargs)
    return ContrastCurve(foci, np.array([c.at(frequency) for c in curves]), "focus_diopter")


def contrast_vs_spacing(cfg: OpticalConfig, spacings: Sequence[float], focus: float = 1.5,
                        frequency: float = DEFAULT_FREQUENCY, **kwargs) -> ContrastCurve:
    """Contrast at ``focus`` for two planes at focus +- spacing / 2."""
    spacings = np.sort(np.asarray(spacings, dtype=float))
    if np.any(spacings <= 0):
        raise ValueError("spacings must be positive")
    values = []
    for dz in spacings:
        planes = (focus - dz / 2, focus + dz / 2)
        if planes[0] < 0 or planes[1] > cfg.native_diopter:
            raise ValueError(f"planes {planes} outside [0, {cfg.native_diopter}] D")
        (curve,) = fused_edge_mtfs(cfg, planes, [focus], **kwargs)
        values.append(curve.at(frequency))
    return ContrastCurve(spacings, np.array(values), "spacing_diopter")
