"""
Focus cues between two planes
=============================

Two identical slanted edges are shown on planes at 1 D and 2 D with half
the intensity each. A camera sweeping its focus sees the highest contrast
at the dioptric midpoint, so the fused edge reads as a single surface at
1.5 D. Spreading the planes apart weakens that cue.
"""

from pathlib import Path

import numpy as np

from omnidisplay import OpticalConfig, contrast_vs_accommodation, contrast_vs_spacing

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)
cfg = OpticalConfig.desk()

# %%
# Contrast at 5 lp/mm while the camera focus runs from 1 D to 2 D.
foci = np.linspace(1.0, 2.0, 11)
for f in (2.5, 5.0, 10.0):
    curve = contrast_vs_accommodation(cfg, foci, planes=(1.0, 2.0), frequency=f)
    print(f"{f:4.1f} lp/mm  peak at {curve.argmax:.1f} D   relative {np.round(curve.relative(), 3)}")
curve.to_csv(out / "accommodation.csv")

# %%
# Planes at 0 D and 1 D move the peak to 0.5 D.
shifted = contrast_vs_accommodation(cfg, np.linspace(0, 1, 11), planes=(0.0, 1.0))
print("planes 0 D and 1 D: peak at", shifted.argmax, "D")

# %%
# Camera fixed at 1.5 D, planes at 1.5 -/+ dz/2.
spacing = contrast_vs_spacing(cfg, [0.2, 0.4, 0.6, 0.8, 1.0, 1.2])
for dz, c in zip(spacing.abscissa, spacing.relative()):
    print(f"dz = {dz:.1f} D   relative contrast {c:.3f}")
spacing.to_csv(out / "spacing.csv")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(1, 2, figsize=(8, 3))
    ax[0].plot(spacing.abscissa, spacing.relative(), "o-")
    ax[0].set_xlabel("plane spacing (D)")
    ax[0].set_ylabel("relative contrast")
    ax[1].plot(curve.abscissa, curve.relative(), "o-")
    ax[1].set_xlabel("camera focus (D)")
    fig.tight_layout()
    fig.savefig(out / "contrast_curves.png", dpi=120)
