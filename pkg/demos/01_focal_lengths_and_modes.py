"""
Depth planes, SLM focal lengths and display modes
=================================================

Each sub-panel of the display is pushed to its own depth by a lens term on
the SLM. Here we recover the relay constant from the prototype's focal
lengths, look at the diopter to focal-length curve, and list the display
modes a 2000x2000 panel supports.
"""

import numpy as np

from omnidisplay import OpticalConfig, diopter_to_slm_focal, plan_modes
from omnidisplay.optics import PROTOTYPE_FOCALS, fit_relay_constant

# %%
# One constant K ties the SLM focal length to the perceived depth:
# f = K / ((D_native - D) f_e^2).
K = fit_relay_constant(PROTOTYPE_FOCALS, eyepiece_focal=0.025, native_diopter=3.0)
print(f"fitted relay constant K = {K:.5f} m^2")

cfg = OpticalConfig.full()
for depth, measured in PROTOTYPE_FOCALS:
    f = diopter_to_slm_focal(depth, cfg)
    print(f"{depth:3.1f} D   model {f:8.2f} m   prototype {measured:8.2f} m")

# %%
# The focal length diverges as the depth approaches the native plane.
depths = np.linspace(0, 2.9, 30)
focals = [diopter_to_slm_focal(d, cfg) for d in depths]
print("f at 2.9 D:", round(focals[-1], 1), "m")

# %%
# Trading lateral resolution for planes: L * M * N never exceeds the pixel count.
for mode in plan_modes(cfg, (0.0, 3.0), [1, 2, 4, 9, 16, 25]):
    L, M = mode.lateral_resolution
    print(f"{mode.plane_count:3d} planes  {L}x{M}  spacing {mode.plane_spacing:.3g} D"
          f"  uses {mode.pixels_used / cfg.panel_size:.0%} of the panel")
