"""
One phase pattern for four depths
=================================

Adding the four Fresnel phases gives a pattern that serves none of them.
Weighted Gerchberg-Saxton finds a single phase whose overlap with every
target is large and equal. We compare the two, quantize to 8 bits and
save the pattern.
"""

from pathlib import Path

import numpy as np

from omnidisplay import (DepthPlan, OpticalConfig, WgsParams, additive_phase, merit, overlaps,
                         sub_panel_targets, subpanel_layout, superposition_phase, uniformity,
                         wgs_optimize, wrap_quantize)
from omnidisplay import io
from omnidisplay.optics import mode_for_depths

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

cfg = OpticalConfig.desk()
depths = [0.0, 1.0, 2.0, 3.0]
plan = DepthPlan.from_depths(depths, cfg)
layout = subpanel_layout(cfg, mode_for_depths(cfg, depths))
targets = sub_panel_targets(layout, plan, cfg)

# %%
# Baselines: the plain sum of phases, and the phase of the summed phasors.
for name, est in (("additive", additive_phase(targets)), ("superposition", superposition_phase(targets))):
    amps = np.abs(overlaps(est, targets))
    print(f"{name:14s} T = {amps.sum():.4f}   |V| = {np.round(amps, 4)}")

# %%
# WGS re-weights the targets every iteration until the overlaps even out.
est, trace = wgs_optimize(targets, WgsParams(max_iters=30))
amps = np.abs(overlaps(est, targets))
print(f"{'WGS':14s} T = {amps.sum():.4f}   |V| = {np.round(amps, 4)}   std/mean {uniformity(amps):.1e}")
print("merit over iterations:", np.round(trace.merits[:6], 4), "...")

# %%
# 8-bit quantization barely moves the merit.
q = wrap_quantize(est, cfg)
print(f"quantized T = {merit(q.to_phase(), targets):.4f}")
io.write_phase(out / "wgs_phase.pgm", q, cfg.wavelength, depths=depths)
trace.to_csv(out / "wgs_trace.csv")
print("wrote", out / "wgs_phase.pgm")
