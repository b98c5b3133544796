"""Optical configuration, depth-to-focal mapping, display modes and sub-panel tiling.

All lengths are in meters and all depths in diopters. Coordinates on the panel
and on the SLM are measured from the geometric center of the device, with x
increasing along columns and y increasing along rows (array order).
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# design focal lengths of the built prototype: (diopter, SLM focal length in m)
PROTOTYPE_FOCALS = ((0.0, 53.3), (1.0, 80.6), (2.0, 162.5), (3.0, math.inf))


def fit_relay_constant(table: Iterable[tuple[float, float]], eyepiece_focal: float,
                       native_diopter: float) -> float:
    """Least-squares relay constant K from (diopter, focal) pairs.

    Minimizes sum (f_i - K * a_i)**2 with a_i = 1 / ((D_native - D_i) f_e**2),
    using only finite focal lengths at depths short of the native plane.
    """
    a, f = [], []
    for depth, focal in table:
        if math.isfinite(focal) and depth < native_diopter:
            a.append(1.0 / ((native_diopter - depth) * eyepiece_focal ** 2))
            f.append(focal)
    if not a:
        raise ValueError("no finite (depth, focal) pairs to fit")
    a = np.asarray(a)
    f = np.asarray(f)
    return float(a @ f / (a @ a))


def matched_slm_pitch(wavelength: float, relay_focal: float, pixels: int, panel_pitch: float) -> float:
    """SLM pitch whose ``pixels`` samples tile the full Fourier plane of the panel grid."""
    return wavelength * relay_focal / (pixels * panel_pitch)


_K = fit_relay_constant(PROTOTYPE_FOCALS, 0.025, 3.0)
_F_RELAY = math.sqrt(_K)


@dataclass(frozen=True)
class OpticalConfig:
    """Physical parameters shared by every stage of the pipeline.

    ``relay_constant`` is the squared effective focal length of the 4f relay
    (m^2). A lens of focal ``f`` on the SLM moves the intermediate image by
    ``relay_constant / f`` along the axis. ``frame_rate`` is informational.
    """

    wavelength: float = 550e-9
    objective_focal: float = _F_RELAY
    eyepiece_focal: float = 0.025
    relay_constant: float = _K
    native_diopter: float = 3.0
    panel_pixels: tuple[int, int] = (512, 512)
    panel_pitch: float = 4e-6
    slm_pixels: tuple[int, int] = (512, 512)
    slm_pitch: float = matched_slm_pitch(550e-9, _F_RELAY, 512, 4e-6)
    phase_levels: int = 256
    frame_rate: float = 60.0

    def __post_init__(self):
        object.__setattr__(self, "panel_pixels", tuple(int(v) for v in self.panel_pixels))
        object.__setattr__(self, "slm_pixels", tuple(int(v) for v in self.slm_pixels))
        for name in ("objective_focal", "eyepiece_focal", "relay_constant",
                     "panel_pitch", "slm_pitch"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not 100e-9 < self.wavelength < 10e-6:
            raise ValueError(f"wavelength {self.wavelength!r} m outside (100 nm, 10 um)")
        if self.phase_levels < 2:
            raise ValueError("phase_levels must be >= 2")
        if not (np.isfinite(self.native_diopter) and self.native_diopter >= 0):
            raise ValueError("native_diopter must be finite and >= 0")
        for name in ("panel_pixels", "slm_pixels"):
            dims = getattr(self, name)
            if len(dims) != 2 or min(dims) < 1:
                raise ValueError(f"{name} must be two positive counts, got {dims!r}")

    @property
    def panel_size(self) -> int:
        """Total panel pixel count P."""
        return self.panel_pixels[0] * self.panel_pixels[1]

    @property
    def relay_focal(self) -> float:
        """Effective relay focal length, sqrt(relay_constant)."""
        return math.sqrt(self.relay_constant)

    def replace(self, **changes) -> "OpticalConfig":
        return dataclasses.replace(self, **changes)

    # serialization -----------------------------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["panel_pixels"] = list(self.panel_pixels)
        d["slm_pixels"] = list(self.slm_pixels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OpticalConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_json(cls, source) -> "OpticalConfig":
        """Load from a JSON string or a path to a JSON file."""
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            source = Path(source).read_text()
        return cls.from_dict(json.loads(source))

    # presets -----------------------------------------------------------------------

    @classmethod
    def desk(cls, pixels: int = 512, panel_pitch: float = 4e-6, **overrides) -> "OpticalConfig":
        """Desk-scale configuration on a square ``pixels`` grid.

        The relay constant is fitted to the prototype focal lengths, the objective focal length is
        set equal to the relay focal length (so the linear phase term recenters a
        sub-panel exactly), and the SLM pitch is chosen so the SLM spans the whole
        Fourier plane of the panel grid.
        """
        wavelength = overrides.pop("wavelength", 550e-9)
        K = overrides.pop("relay_constant", _K)
        f_r = math.sqrt(K)
        params = dict(
            wavelength=wavelength,
            objective_focal=f_r,
            eyepiece_focal=0.025,
            relay_constant=K,
            native_diopter=3.0,
            panel_pixels=(pixels, pixels),
            panel_pitch=panel_pitch,
            slm_pixels=(pixels, pixels),
            slm_pitch=matched_slm_pitch(wavelength, f_r, pixels, panel_pitch),
        )
        params.update(overrides)
        return cls(**params)

    @classmethod
    def full(cls, **overrides) -> "OpticalConfig":
        """Full-scale 2000x2000 configuration of the prototype.

        Panel and SLM pitches are not reported for the prototype; the desk-scale
        pitch is reused and the SLM is matched to the Fourier plane.
        """
        return cls.desk(pixels=2000, **overrides)


# diopter <-> focal length ------------------------------------------------------------

def diopter_to_slm_focal(depth: float, cfg: OpticalConfig) -> float:
    """SLM focal length that maps a sub-panel to dioptric depth ``depth``.

    f = K / ((D_native - D) * f_e**2); infinite at the native plane.

    Raises
    ------
    ValueError
        If ``depth`` is negative or beyond the native plane.
    """
    if not np.isfinite(depth) or depth < 0:
        raise ValueError(f"depth must be >= 0 diopters, got {depth!r}")
    if depth > cfg.native_diopter:
        raise ValueError(f"depth beyond native plane: {depth} D > {cfg.native_diopter} D")
    gap = cfg.native_diopter - depth
    if gap == 0:
        return math.inf
    return cfg.relay_constant / (gap * cfg.eyepiece_focal ** 2)


def slm_focal_to_diopter(focal: float, cfg: OpticalConfig) -> float:
    """Inverse of :func:`diopter_to_slm_focal`."""
    if focal == 0:
        raise ValueError("focal length must be nonzero")
    if math.isinf(focal):
        return cfg.native_diopter
    return cfg.native_diopter - cfg.relay_constant / (focal * cfg.eyepiece_focal ** 2)


def axial_offset(depth: float, cfg: OpticalConfig) -> float:
    """Distance past the native intermediate image plane that is conjugate to ``depth``.

    Newtonian relation through the eyepiece: (D_native - D) * f_e**2.
    """
    return (cfg.native_diopter - depth) * cfg.eyepiece_focal ** 2


@dataclass(frozen=True)
class DepthPlan:
    depths: tuple[float, ...]
    slm_focals: tuple[float, ...]

    @classmethod
    def from_depths(cls, depths: Sequence[float], cfg: OpticalConfig) -> "DepthPlan":
        depths = tuple(float(d) for d in depths)
        if not depths:
            raise ValueError("at least one depth is required")
        if any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValueError("depths must be strictly increasing")
        return cls(depths, tuple(diopter_to_slm_focal(d, cfg) for d in depths))

    def __len__(self):
        return len(self.depths)


# display modes and tiling -------------------------------------------------------------

@dataclass(frozen=True)
class DisplayMode:
    lateral_resolution: tuple[int, int]
    plane_count: int
    plane_spacing: float
    frame_rate: float = 60.0

    def __post_init__(self):
        L, M = self.lateral_resolution
        if self.plane_count < 1 or L < 1 or M < 1:
            raise ValueError("plane count and resolution must be >= 1")
        if self.plane_count > 1 and not self.plane_spacing > 0:
            raise ValueError("plane spacing must be > 0 with more than one plane")

    @property
    def pixels_used(self) -> int:
        L, M = self.lateral_resolution
        return L * M * self.plane_count

    def fits(self, cfg: OpticalConfig) -> bool:
        """The L x M x N <= P constraint."""
        return self.pixels_used <= cfg.panel_size


def tile_grid(n: int) -> tuple[int, int]:
    """Most-square (rows, cols) grid with rows * cols >= n; cols >= rows."""
    cols = math.isqrt(n - 1) + 1 if n > 1 else 1
    rows = -(-n // cols)
    return rows, cols


def plan_modes(cfg: OpticalConfig, depth_range: tuple[float, float],
               candidates: Iterable[int], min_resolution: int = 1) -> list[DisplayMode]:
    """Largest square sub-panel resolution for each candidate plane count.

    For N planes the resolution L satisfies L*L*N <= P and also fits the
    most-square tiling grid of the panel. Candidates that cannot reach
    ``min_resolution`` are dropped.
    """
    d_min, d_max = depth_range
    if d_max > cfg.native_diopter:
        raise ValueError(f"depth beyond native plane: {d_max} D")
    if d_min < 0 or d_max < d_min:
        raise ValueError(f"invalid depth range {depth_range!r}")
    W, H = cfg.panel_pixels
    modes = []
    for n in candidates:
        n = int(n)
        if n < 1:
            continue
        rows, cols = tile_grid(n)
        side = min(math.isqrt(cfg.panel_size // n), W // cols, H // rows)
        if side < max(min_resolution, 1):
            continue
        spacing = (d_max - d_min) / (n - 1) if n > 1 else 0.0
        mode = DisplayMode((side, side), n, spacing, cfg.frame_rate)
        assert mode.fits(cfg)
        modes.append(mode)
    return modes


@dataclass(frozen=True)
class Tile:
    """One cell of the tiling grid.

    ``rect`` is (row0, col0, height, width) in panel pixels, ``offset`` the
    (l_x, l_y) position of the tile center relative to the panel center in
    meters. ``index`` is the plane index, or None for an unused cell.
    """

    index: int | None
    rect: tuple[int, int, int, int]
    offset: tuple[float, float]

    @property
    def slices(self) -> tuple[slice, slice]:
        r, c, h, w = self.rect
        return slice(r, r + h), slice(c, c + w)

    @property
    def center_px(self) -> tuple[float, float]:
        """Tile center (row, col) in panel pixel coordinates."""
        r, c, h, w = self.rect
        return r + (h - 1) / 2, c + (w - 1) / 2


@dataclass(frozen=True)
class SubPanelLayout:
    tiles: tuple[Tile, ...]
    grid: tuple[int, int]
    panel_pixels: tuple[int, int]

    def tile(self, index: int) -> Tile:
        for t in self.tiles:
            if t.index == index:
                return t
        raise KeyError(index)

    @property
    def occupied(self) -> list[Tile]:
        return sorted((t for t in self.tiles if t.index is not None), key=lambda t: t.index)

    def __len__(self):
        return len(self.occupied)


def subpanel_layout(cfg: OpticalConfig, mode: DisplayMode) -> SubPanelLayout:
    """Tile the panel into a centered most-square grid of ``mode`` sub-panels.

    Plane indices are assigned row-major from the top-left; surplus cells are
    left empty.
    """
    W, H = cfg.panel_pixels
    L, M = mode.lateral_resolution
    rows, cols = tile_grid(mode.plane_count)
    if cols * L > W or rows * M > H:
        raise ValueError(f"{rows}x{cols} grid of {L}x{M} tiles exceeds the {W}x{H} panel")
    row0 = (H - rows * M) // 2
    col0 = (W - cols * L) // 2
    tiles = []
    for k in range(rows * cols):
        r, c = divmod(k, cols)
        rect = (row0 + r * M, col0 + c * L, M, L)
        cy = rect[0] + (M - 1) / 2
        cx = rect[1] + (L - 1) / 2
        offset = ((cx - (W - 1) / 2) * cfg.panel_pitch, (cy - (H - 1) / 2) * cfg.panel_pitch)
        tiles.append(Tile(k if k < mode.plane_count else None, rect, offset))
    return SubPanelLayout(tuple(tiles), (rows, cols), (W, H))


def mode_for_depths(cfg: OpticalConfig, depths: Sequence[float]) -> DisplayMode:
    """Largest mode that shows exactly the given planes."""
    depths = sorted(depths)
    modes = plan_modes(cfg, (depths[0], depths[-1]), [len(depths)])
    if not modes:
        raise ValueError(f"{len(depths)} planes do not fit on the panel")
    m = modes[0]
    spacing = m.plane_spacing if len(depths) > 1 else 0.0
    return DisplayMode(m.lateral_resolution, m.plane_count, spacing, m.frame_rate)
