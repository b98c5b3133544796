"""Linear depth-weighted blending of an all-in-focus image onto a few depth planes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .optics import SubPanelLayout


@dataclass(frozen=True)
class SceneInput:
    """All-in-focus intensity image in [0, 1] and a per-pixel depth map in diopters."""

    image: np.ndarray
    depth_map: np.ndarray

    def __post_init__(self):
        image = np.asarray(self.image, dtype=np.float64)
        depth = np.asarray(self.depth_map, dtype=np.float64)
        if image.ndim != 2:
            raise ValueError("image must be 2-D")
        if image.shape != depth.shape:
            raise ValueError(f"image {image.shape} and depth map {depth.shape} differ in size")
        if not (np.all(np.isfinite(image)) and np.all(np.isfinite(depth))):
            raise ValueError("scene contains non-finite values")
        object.__setattr__(self, "image", image)
        object.__setattr__(self, "depth_map", depth)

    @property
    def shape(self):
        return self.image.shape


@dataclass(frozen=True)
class PlaneStack:
    depths: tuple
    planes: np.ndarray        # (N, rows, cols)
    clamped: int = 0          # pixels whose depth fell outside the plane range

    def __len__(self):
        return len(self.depths)

    def __iter__(self):
        return iter(zip(self.depths, self.planes))

    def total(self) -> np.ndarray:
        return self.planes.sum(axis=0)


def _check_depths(depths) -> np.ndarray:
    d = np.asarray(depths, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("need at least one plane depth")
    if np.any(np.diff(d) <= 0):
        raise ValueError("plane depths must be strictly increasing")
    return d


def _weights(d: np.ndarray, planes: np.ndarray) -> np.ndarray:
    """Weights of shape (N,) + d.shape."""
    n = planes.size
    w = np.zeros((n,) + d.shape)
    if n == 1:
        w[0] = 1.0
        return w
    dc = np.clip(d, planes[0], planes[-1])
    k = np.clip(np.searchsorted(planes, dc, side="right") - 1, 0, n - 2)
    upper = (dc - planes[k]) / (planes[k + 1] - planes[k])
    # the lower weight is 1 - upper so the pair sums to 1 exactly
    np.put_along_axis(w, k[np.newaxis], (1.0 - upper)[np.newaxis], axis=0)
    np.put_along_axis(w, (k + 1)[np.newaxis], upper[np.newaxis], axis=0)
    return w


def blend_weights(d: float, depths: Sequence[float]) -> list[float]:
    """Split a unit intensity at ``d`` diopters between the two bracketing planes.

    Depths outside the plane range put all weight on the nearest end plane.

    Examples
    --------
    >>> blend_weights(0.25, [0, 1, 2, 3])
    [0.75, 0.25, 0.0, 0.0]
    """
    planes = _check_depths(depths)
    return [float(v) for v in _weights(np.asarray(float(d)), planes)]


def render_planes(scene: SceneInput, depths: Sequence[float]) -> PlaneStack:
    """Per-plane images whose per-pixel sum equals the scene image."""
    planes = _check_depths(depths)
    d = scene.depth_map
    clamped = int(np.count_nonzero((d < planes[0]) | (d > planes[-1])))
    w = _weights(d, planes)
    return PlaneStack(tuple(float(p) for p in planes), w * scene.image[np.newaxis], clamped)


def compose_panel(stack, layout: SubPanelLayout) -> np.ndarray:
    """Write plane k into tile k of the panel; empty tiles stay dark.

    Planes whose size differs from the tile are resampled with linear
    interpolation.
    """
    planes = stack.planes if isinstance(stack, PlaneStack) else np.asarray(stack, dtype=np.float64)
    tiles = layout.occupied
    if len(planes) > len(tiles):
        raise ValueError(f"{len(planes)} planes exceed the {len(tiles)} sub-panels")
    W, H = layout.panel_pixels
    panel = np.zeros((H, W))
    for img, tile in zip(planes, tiles):
        r, c, h, w = tile.rect
        if img.shape != (h, w):
            img = ndimage.zoom(img, (h / img.shape[0], w / img.shape[1]), order=1, grid_mode=True,
                               mode="nearest")
        panel[r:r + h, c:c + w] = img
    return panel
