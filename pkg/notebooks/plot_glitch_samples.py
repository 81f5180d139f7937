"""
Synthetic warping glitches
==========================

Jitter a garment's landmarks, warp the garment along the jitter and build
the two kinds of self-supervised samples from the result.
"""

import os

import numpy as np

from garmentwarp import compositor
from garmentwarp.fixtures import load_fixture
from garmentwarp.glitch import PerturbConfig, generate_samples, synthesize_glitch
from garmentwarp.landmarks import landmarks_to_array, normalize_landmarks

fx = load_fixture("stripes_standing")
mask = compositor.garment_mask(fx.labels)
flm = normalize_landmarks(fx.annotation).fashion_landmarks
segment = compositor.extract_segment(fx.image, mask)

# Landmark noise has a standard deviation of about 0.03 in normalized units
cfg = PerturbConfig(variance=0.001, seed=3)
glitched, moved = synthesize_glitch(segment, flm, cfg)
print("landmark shift (px):", np.abs(landmarks_to_array(moved) - landmarks_to_array(flm)).max() * fx.image.width)
print("garment area", segment.opaque_area(), "->", glitched.opaque_area())

# Four samples of each mode; the per-sample seeds make them reproducible in any order
out = os.environ.get("GARMENTWARP_OUT", "glitch_demo")
items = [(fx.image, mask, flm)] * 4
for mode in ("mask_gen", "synth"):
    manifests = generate_samples(items, cfg, mode, os.path.join(out, mode), workers=2)
    print(mode, [m["seed"] for m in manifests])
