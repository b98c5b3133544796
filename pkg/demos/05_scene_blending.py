"""
From an all-in-focus image to four planes
=========================================

A depth map says where every pixel should appear. Linear depth-weighted
blending splits each pixel between the two planes that bracket its depth,
so the planes add back up to the original image. The four plane images
are then packed into the sub-panels of one display frame.
"""

from pathlib import Path

import numpy as np

from omnidisplay import OpticalConfig, SceneInput, blend_weights, compose_panel, render_planes, subpanel_layout
from omnidisplay import io
from omnidisplay.optics import mode_for_depths
from omnidisplay.scenes import layered_scene

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

depths = [0.0, 1.0, 2.0, 3.0]
print("weights at 0.25 D:", blend_weights(0.25, depths))
print("weights at 1.5 D: ", blend_weights(1.5, depths))

# %%
# A synthetic scene: textured wall at 0 D, a receding floor and three discs.
image, depth = layered_scene((256, 256), (0.0, 3.0), seed=0)
stack = render_planes(SceneInput(image, depth), depths)
print("largest reconstruction error:", np.abs(stack.total() - image).max())
for d, plane in stack:
    print(f"plane {d:.0f} D carries {plane.sum() / image.sum():.1%} of the light")

# %%
# Pack the planes into a 2x2 frame for a 512x512 panel.
cfg = OpticalConfig.desk()
panel = compose_panel(stack, subpanel_layout(cfg, mode_for_depths(cfg, depths)))
io.write_intensity(out / "blended_panel.pgm", panel, 16, peak=1.0)
io.write_depth_map(out / "scene_depth.pgm", depth, (0.0, 3.0))
print("wrote", out / "blended_panel.pgm")
