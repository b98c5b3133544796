"""SLM phase profiles: multifocal off-axis Fresnel terms, baselines and 8-bit quantization."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .optics import OpticalConfig

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class PhaseMap:
    """Continuous phase in radians sampled on the SLM grid (rows, cols)."""

    values: np.ndarray
    pitch: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("phase map must be 2-D")
        if not np.all(np.isfinite(values)):
            raise ValueError("phase map contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    def wrapped(self) -> np.ndarray:
        """Values reduced to [0, 2*pi)."""
        return np.mod(self.values, TWO_PI)


@dataclass(frozen=True)
class QuantizedPhaseMap:
    """Integer SLM levels; level k encodes phase 2*pi*k/levels_count."""

    levels: np.ndarray
    pitch: float
    levels_count: int = 256

    def __post_init__(self):
        levels = np.asarray(self.levels)
        if levels.ndim != 2:
            raise ValueError("level map must be 2-D")
        if levels.size and (levels.min() < 0 or levels.max() >= self.levels_count):
            raise ValueError(f"levels must lie in [0, {self.levels_count})")

    @property
    def shape(self):
        return self.levels.shape

    def to_phase(self) -> PhaseMap:
        return PhaseMap(self.levels.astype(np.float64) * (TWO_PI / self.levels_count), self.pitch)


def slm_coordinates(shape: tuple[int, int], pitch: float) -> tuple[np.ndarray, np.ndarray]:
    """Pixel-center coordinates (x row vector, y column vector) about the grid center.

    x = (col - (W - 1) / 2) * pitch. Even grids have no center pixel, so the
    origin sits between the two middle samples.
    """
    rows, cols = shape
    x = (np.arange(cols) - (cols - 1) / 2) * pitch
    y = (np.arange(rows) - (rows - 1) / 2) * pitch
    return x[np.newaxis, :], y[:, np.newaxis]


def fresnel_phase(tile, focal: float, cfg: OpticalConfig) -> PhaseMap:
    """Multifocal off-axis Fresnel term for one sub-panel.

    phi(x, y) = pi (x^2 + y^2) / (lambda f) + (2 pi / lambda) [sin(l_x / f_o) x + sin(l_y / f_o) y]

    Parameters
    ----------
    tile : Tile or (float, float)
        Sub-panel, or its center offset (l_x, l_y) on the panel in meters.
    focal : float
        SLM focal length for the sub-panel's depth; ``inf`` drops the quadratic term.
    cfg : OpticalConfig
    """
    lx, ly = getattr(tile, "offset", tile)
    if focal == 0:
        raise ValueError("degenerate lens: focal length is zero")
    if not (math.isfinite(lx) and math.isfinite(ly)):
        raise ValueError("tile offsets must be finite")
    rows_cols = (cfg.slm_pixels[1], cfg.slm_pixels[0])
    x, y = slm_coordinates(rows_cols, cfg.slm_pitch)
    k = TWO_PI / cfg.wavelength
    tilt = k * math.sin(lx / cfg.objective_focal) * x + k * math.sin(ly / cfg.objective_focal) * y
    if math.isinf(focal):
        phi = np.broadcast_to(tilt, rows_cols).copy()
    else:
        phi = np.pi * (x ** 2 + y ** 2) / (cfg.wavelength * focal) + tilt
    return PhaseMap(phi, cfg.slm_pitch)


def _check_compatible(maps: Sequence[PhaseMap]):
    if not maps:
        raise ValueError("need at least one phase map")
    shape, pitch = maps[0].shape, maps[0].pitch
    for m in maps[1:]:
        if m.shape != shape or not math.isclose(m.pitch, pitch, rel_tol=1e-12):
            raise ValueError(f"phase map mismatch: {m.shape}@{m.pitch} vs {shape}@{pitch}")


def additive_phase(maps: Sequence[PhaseMap]) -> PhaseMap:
    """Element-wise sum of the sub-panel phases (the unoptimized baseline)."""
    _check_compatible(maps)
    return PhaseMap(np.sum([m.values for m in maps], axis=0), maps[0].pitch)


def superposition_phase(maps: Sequence[PhaseMap], weights: Sequence[float] | None = None) -> PhaseMap:
    """Phase of the weighted sum of unit phasors, in (-pi, pi]."""
    _check_compatible(maps)
    if weights is None:
        weights = np.ones(len(maps))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(maps),):
        raise ValueError("one weight per map is required")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(weights > 0):
        raise ValueError("all weights are zero")
    field = np.zeros(maps[0].shape, dtype=np.complex128)
    for w, m in zip(weights, maps):
        if w:
            field += w * np.exp(1j * m.values)
    return PhaseMap(principal_angle(field), maps[0].pitch)


def principal_angle(z: np.ndarray) -> np.ndarray:
    """np.angle folded into (-pi, pi]."""
    a = np.angle(z)
    return np.where(a <= -np.pi, a + TWO_PI, a)


def wrap_quantize(phase: PhaseMap, cfg: OpticalConfig | int = 256) -> QuantizedPhaseMap:
    """Wrap to [0, 2*pi) and floor to ``phase_levels`` integer levels."""
    n = cfg.phase_levels if isinstance(cfg, OpticalConfig) else int(cfg)
    step = TWO_PI / n
    # the small guard keeps reconstructed levels k * step from rounding down to k - 1
    levels = np.floor(np.mod(phase.values, TWO_PI) / step + 1e-9)
    levels = np.clip(levels, 0, n - 1)
    dtype = np.uint8 if n <= 256 else np.uint16 if n <= 65536 else np.int64
    return QuantizedPhaseMap(levels.astype(dtype), phase.pitch, n)


def sub_panel_targets(layout, plan, cfg: OpticalConfig) -> list[PhaseMap]:
    """Fresnel target for every occupied tile of ``layout`` with focals from ``plan``."""
    tiles = layout.occupied
    if len(tiles) != len(plan.slm_focals):
        raise ValueError(f"{len(tiles)} tiles for {len(plan.slm_focals)} depths")
    return [fresnel_phase(t, f, cfg) for t, f in zip(tiles, plan.slm_focals)]
