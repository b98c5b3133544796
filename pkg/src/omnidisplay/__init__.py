"""Multifocal spatial multiplexing display: phase synthesis, blending, wave-optics imaging and metrics."""
from .optics import (DepthPlan, DisplayMode, OpticalConfig, SubPanelLayout, Tile, axial_offset,
                     diopter_to_slm_focal, mode_for_depths, plan_modes, slm_focal_to_diopter,
                     subpanel_layout)
from .phase import (PhaseMap, QuantizedPhaseMap, additive_phase, fresnel_phase, sub_panel_targets,
                    superposition_phase, wrap_quantize)
from .wgs import WgsParams, WgsTrace, merit, overlap, overlaps, uniformity, wgs_optimize
from .blend import PlaneStack, SceneInput, blend_weights, compose_panel, render_planes
from .propagate import (BandLimitError, CameraModel, ComplexField, angular_spectrum_transfer,
                        camera_capture, image_panel, propagate_angular_spectrum, relay_4f,
                        simulate_depth_stack)
from .metrics import (ContrastCurve, EdgeError, MtfCurve, contrast_at, contrast_vs_accommodation,
                      contrast_vs_spacing, sharpness, slanted_edge_mtf)

__version__ = "0.1.0"
