import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omnidisplay import (DepthPlan, DisplayMode, OpticalConfig, diopter_to_slm_focal, plan_modes,
                         slm_focal_to_diopter, subpanel_layout)
from omnidisplay.optics import PROTOTYPE_FOCALS, fit_relay_constant, mode_for_depths, tile_grid

# closed-form least squares over the three finite prototype rows, evaluated in 30-digit arithmetic
K_FIT = 0.101280612244897959
FOCALS_FIT = (54.0163265306122449, 81.0244897959183673, 162.048979591836735)


def test_relay_constant_fit_matches_closed_form():
    K = fit_relay_constant(PROTOTYPE_FOCALS, 0.025, 3.0)
    assert K == pytest.approx(K_FIT, rel=1e-12)
    assert K == pytest.approx(0.1007, rel=0.01)


def test_relay_constant_single_point_is_exact():
    assert fit_relay_constant([(1.0, 80.6)], 0.025, 3.0) == pytest.approx(0.10075, rel=1e-14)


def test_relay_constant_needs_finite_rows():
    with pytest.raises(ValueError):
        fit_relay_constant([(3.0, math.inf)], 0.025, 3.0)


def test_default_config_is_the_desk_preset(desk):
    assert OpticalConfig() == desk
    assert desk.relay_constant == pytest.approx(K_FIT, rel=1e-12)


@pytest.mark.parametrize("depth, expected", list(zip((0.0, 1.0, 2.0), FOCALS_FIT)))
def test_fitted_mapping_values(desk, depth, expected):
    assert diopter_to_slm_focal(depth, desk) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("depth, published", [(0.0, 53.3), (1.0, 80.6), (2.0, 162.5)])
def test_mapping_within_three_percent_of_prototype(desk, depth, published):
    assert diopter_to_slm_focal(depth, desk) == pytest.approx(published, rel=0.03)


def test_native_plane_maps_to_flat_lens(desk):
    assert math.isinf(diopter_to_slm_focal(3.0, desk))
    assert slm_focal_to_diopter(math.inf, desk) == 3.0


def test_mapping_with_rounded_constant(desk):
    cfg = desk.replace(relay_constant=0.1008)
    assert diopter_to_slm_focal(1.0, cfg) == pytest.approx(80.6, rel=0.02)
    assert diopter_to_slm_focal(0.0, cfg) == pytest.approx(53.76, rel=1e-12)


def test_depth_beyond_native_plane(desk):
    with pytest.raises(ValueError, match="depth beyond native plane"):
        diopter_to_slm_focal(4.0, desk)
    with pytest.raises(ValueError):
        diopter_to_slm_focal(-0.1, desk)


@given(st.floats(0.0, 2.999))
def test_mapping_round_trip(depth):
    cfg = OpticalConfig.desk()
    back = slm_focal_to_diopter(diopter_to_slm_focal(depth, cfg), cfg)
    assert back == pytest.approx(depth, rel=1e-9, abs=1e-12)


@given(st.floats(0.0, 2.99), st.floats(1e-4, 0.5))
def test_mapping_strictly_increasing(depth, step):
    cfg = OpticalConfig.desk()
    hi = min(depth + step, 3.0)
    assert diopter_to_slm_focal(hi, cfg) > diopter_to_slm_focal(depth, cfg)


def test_depth_plan_rules(desk):
    plan = DepthPlan.from_depths([0, 1, 2, 3], desk)
    assert list(plan.slm_focals[:3]) == sorted(plan.slm_focals[:3])
    assert math.isinf(plan.slm_focals[3])
    with pytest.raises(ValueError):
        DepthPlan.from_depths([1, 1], desk)
    with pytest.raises(ValueError):
        DepthPlan.from_depths([], desk)


# config ----------------------------------------------------------------------------------

@pytest.mark.parametrize("change", [dict(wavelength=50e-9), dict(wavelength=20e-6), dict(panel_pitch=0.0),
                                    dict(eyepiece_focal=-0.025), dict(phase_levels=1),
                                    dict(native_diopter=-1.0), dict(slm_pixels=(0, 512))])
def test_config_validation(desk, change):
    with pytest.raises(ValueError):
        desk.replace(**change)


def test_config_json_round_trip(desk, tmp_path):
    path = tmp_path / "cfg.json"
    desk.to_json(path)
    assert OpticalConfig.from_json(path) == desk
    assert OpticalConfig.from_json(desk.to_json()) == desk
    d = json.loads(desk.to_json())
    assert d["panel_pixels"] == [512, 512]
    d["bogus"] = 1
    with pytest.raises(ValueError, match="unknown"):
        OpticalConfig.from_dict(d)


def test_full_preset(full):
    assert full.panel_pixels == (2000, 2000)
    assert full.panel_size == 4_000_000


# modes -----------------------------------------------------------------------------------

def _summary(modes):
    return [(m.lateral_resolution, m.plane_count, round(m.plane_spacing, 12)) for m in modes]


def test_plan_modes_prototype_table(full):
    modes = plan_modes(full, (0.0, 3.0), [4, 16])
    assert _summary(modes) == [((1000, 1000), 4, 1.0), ((500, 500), 16, 0.2)]


def test_plan_modes_single_plane(full):
    (m,) = plan_modes(full, (0.0, 3.0), [1])
    assert m.lateral_resolution == (2000, 2000) and m.plane_spacing == 0.0


def test_plan_modes_drops_modes_below_resolution(full):
    assert plan_modes(full, (0, 3), [5000], min_resolution=1000) == []
    assert plan_modes(full, (0, 3), [5000])[0].lateral_resolution == (28, 28)


def test_plan_modes_rejects_range_past_native(full):
    with pytest.raises(ValueError, match="depth beyond native plane"):
        plan_modes(full, (0, 3.5), [4])


@settings(max_examples=40)
@given(st.integers(1, 400), st.sampled_from([64, 100, 512, 2000]))
def test_every_mode_fits_the_panel(n, pixels):
    cfg = OpticalConfig.desk(pixels=pixels)
    for m in plan_modes(cfg, (0, 3), [n]):
        assert m.pixels_used <= cfg.panel_size
        layout = subpanel_layout(cfg, m)
        assert len(layout) == n


def test_display_mode_invariants():
    with pytest.raises(ValueError):
        DisplayMode((10, 10), 0, 1.0)
    with pytest.raises(ValueError):
        DisplayMode((10, 10), 2, 0.0)
    assert DisplayMode((10, 10), 4, 1.0).pixels_used == 400


# tiling ----------------------------------------------------------------------------------

def test_four_quadrants(full):
    layout = subpanel_layout(full, DisplayMode((1000, 1000), 4, 1.0))
    assert layout.grid == (2, 2)
    p = full.panel_pitch
    offsets = [t.offset for t in layout.occupied]
    assert offsets == pytest.approx([(-500 * p, -500 * p), (500 * p, -500 * p),
                                     (-500 * p, 500 * p), (500 * p, 500 * p)], rel=1e-12)
    assert [t.rect for t in layout.occupied] == [(0, 0, 1000, 1000), (0, 1000, 1000, 1000),
                                                 (1000, 0, 1000, 1000), (1000, 1000, 1000, 1000)]


def test_single_tile_is_centered(full):
    layout = subpanel_layout(full, DisplayMode((2000, 2000), 1, 0.0))
    assert layout.occupied[0].offset == (0.0, 0.0)


def test_three_planes_leave_one_cell_empty(desk):
    layout = subpanel_layout(desk, mode_for_depths(desk, [0, 1.5, 3]))
    assert layout.grid == (2, 2)
    assert [t.index for t in layout.tiles] == [0, 1, 2, None]
    # centered 2x2 grid of 256 px tiles on 512 px: centers at 127.5 and 383.5
    p = desk.panel_pitch
    assert layout.tile(2).offset == pytest.approx((-128 * p, 128 * p), rel=1e-12)
    assert layout.tile(2).rect == (256, 0, 256, 256)


def test_tiles_too_large_for_panel(desk):
    with pytest.raises(ValueError):
        subpanel_layout(desk, DisplayMode((300, 300), 4, 1.0))


@given(st.integers(1, 60))
def test_tiles_disjoint_and_inside(n):
    cfg = OpticalConfig.desk(pixels=256)
    layout = subpanel_layout(cfg, plan_modes(cfg, (0, 3), [n])[0])
    cover = np.zeros((256, 256), dtype=int)
    for t in layout.tiles:
        r, c, h, w = t.rect
        assert r >= 0 and c >= 0 and r + h <= 256 and c + w <= 256
        cover[t.slices] += 1
    assert cover.max() == 1


@given(st.sampled_from([1, 4, 9, 16, 25]))
def test_square_grids_have_symmetric_centers(n):
    cfg = OpticalConfig.desk(pixels=300)
    layout = subpanel_layout(cfg, plan_modes(cfg, (0, 3), [n])[0])
    pts = {(round(x / cfg.panel_pitch, 6), round(y / cfg.panel_pitch, 6)) for x, y in
           (t.offset for t in layout.occupied)}
    assert pts == {(-x, y) for x, y in pts} == {(x, -y) for x, y in pts} == {(y, x) for x, y in pts}


def test_tile_grid_is_most_square():
    assert [tile_grid(n) for n in (1, 2, 3, 4, 5, 16, 17)] == [(1, 1), (1, 2), (2, 2), (2, 2), (2, 3),
                                                               (4, 4), (4, 5)]
