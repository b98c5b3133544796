"""Synthetic stimuli: block letters, slanted edges and a layered depth scene."""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

from .optics import SubPanelLayout

_GLYPHS = {
    "U": ["X...X", "X...X", "X...X", "X...X", "X...X", "X...X", ".XXX."],
    "I": [".XXX.", "..X..", "..X..", "..X..", "..X..", "..X..", ".XXX."],
    "C": [".XXXX", "X....", "X....", "X....", "X....", "X....", ".XXXX"],
    "O": [".XXX.", "X...X", "X...X", "X...X", "X...X", "X...X", ".XXX."],
    "M": ["X...X", "XX.XX", "X.X.X", "X...X", "X...X", "X...X", "X...X"],
    "N": ["X...X", "XX..X", "X.X.X", "X..XX", "X...X", "X...X", "X...X"],
}


def glyph(ch: str, scale: int = 8) -> np.ndarray:
    """5x7 block letter upscaled by ``scale``."""
    rows = _GLYPHS[ch.upper()]
    bitmap = np.array([[c == "X" for c in r] for r in rows], dtype=np.float64)
    return np.kron(bitmap, np.ones((scale, scale)))


def letter_panel(layout: SubPanelLayout, text: str = "OMNI", scale: int | None = None,
                 margin: int = 4) -> tuple[np.ndarray, list[tuple[int, int, int, int]]]:
    """Panel with letter k in sub-panel k, placed so the mapped letters form a row.

    Every sub-panel is recentered on the panel center by its phase term, so
    the letter is offset within its tile by its slot in the row. Returns the
    panel and, for each letter, its box (r0, r1, c0, c1) in the recentered
    image, widened by ``margin`` pixels.
    """
    W, H = layout.panel_pixels
    tiles = layout.occupied
    if len(text) != len(tiles):
        raise ValueError(f"{len(text)} letters for {len(tiles)} sub-panels")
    th, tw = tiles[0].rect[2], tiles[0].rect[3]
    slot = tw // len(text)
    if scale is None:
        scale = max(1, min(int(0.7 * slot) // 5, int(0.4 * th) // 7))
    panel = np.zeros((H, W))
    boxes = []
    for k, (ch, tile) in enumerate(zip(text, tiles)):
        g = glyph(ch, scale)
        gh, gw = g.shape
        dx = int(round((k - (len(text) - 1) / 2) * slot))
        r, c, h, w = tile.rect
        r0 = r + (h - gh) // 2
        c0 = c + (w - gw) // 2 + dx
        panel[r0:r0 + gh, c0:c0 + gw] = g
        # where the phase term moves this tile's center: the panel center
        sr = int(round((H - 1) / 2 - tile.center_px[0]))
        sc = int(round((W - 1) / 2 - tile.center_px[1]))
        boxes.append((max(r0 + sr - margin, 0), min(r0 + sr + gh + margin, H),
                      max(c0 + sc - margin, 0), min(c0 + sc + gw + margin, W)))
    return panel, boxes


def slanted_edge(shape, angle_deg: float = 5.0, center=None, low: float = 0.0, high: float = 1.0,
                 blur_sigma: float | None = None) -> np.ndarray:
    """Near-vertical edge, dark on the left, tilted ``angle_deg`` from vertical.

    Without ``blur_sigma`` the edge is a point-sampled step. With it, the edge
    spread is the analytic Gaussian-blurred step (sigma in pixels).
    """
    rows, cols = shape
    if center is None:
        center = ((rows - 1) / 2, (cols - 1) / 2)
    y, x = np.mgrid[0:rows, 0:cols].astype(np.float64)
    t = math.radians(angle_deg)
    dist = (x - center[1]) * math.cos(t) - (y - center[0]) * math.sin(t)
    if blur_sigma:
        step = 0.5 * (1 + erf(dist / (math.sqrt(2) * blur_sigma)))
    else:
        step = (dist > 0).astype(np.float64)
    return low + (high - low) * step


def edge_panel(layout: SubPanelLayout, angle_deg: float = 5.0, level: float = 0.5) -> np.ndarray:
    """Identical slanted edges of peak ``level`` in every occupied sub-panel."""
    W, H = layout.panel_pixels
    panel = np.zeros((H, W))
    for tile in layout.occupied:
        r, c, h, w = tile.rect
        panel[r:r + h, c:c + w] = slanted_edge((h, w), angle_deg, high=level)
    return panel


def layered_scene(shape=(256, 256), depth_range=(0.0, 3.0), seed: int = 0):
    """All-in-focus image and depth map of a textured layered scene.

    A far textured wall, a floor receding across the depth range and three
    discs in front. Depths are in diopters inside ``depth_range``.
    """
    rows, cols = shape
    rng = np.random.default_rng(seed)
    d_min, d_max = depth_range
    y, x = np.mgrid[0:rows, 0:cols] / np.array([rows, cols])[:, None, None]
    checker = ((np.floor(x * 16) + np.floor(y * 16)) % 2) * 0.5 + 0.25
    image = checker + 0.1 * rng.standard_normal(shape)
    depth = np.full(shape, d_min, dtype=np.float64)
    floor = y > 0.6
    depth[floor] = d_min + (d_max - d_min) * (y[floor] - 0.6) / 0.4
    for (cy, cx, rad, frac, val) in ((0.3, 0.25, 0.12, 0.33, 0.9), (0.45, 0.6, 0.14, 0.67, 0.6),
                                     (0.7, 0.8, 0.1, 1.0, 0.8)):
        disc = (y - cy) ** 2 + (x - cx) ** 2 < rad ** 2
        depth[disc] = d_min + frac * (d_max - d_min)
        image[disc] = val * (0.8 + 0.2 * np.cos(40 * x[disc]))
    return np.clip(image, 0, 1), depth
