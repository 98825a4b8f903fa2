#!/usr/bin/env python3
"""Regenerates the small PNG fixtures under tests/data from scikit-image's
public-domain / CC0 sample photographs (astronaut, coffee, chelsea)."""
import os
import sys

import numpy as np
from PIL import Image
from skimage import data

out_root = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "tests", "data")
natural_dir = os.path.join(out_root, "natural")
clip_dir = os.path.join(out_root, "clip7")
os.makedirs(natural_dir, exist_ok=True)
os.makedirs(clip_dir, exist_ok=True)

sources = [data.astronaut(), data.coffee(), data.chelsea()]
crops = [
    (0, 60, 200), (0, 250, 180), (0, 120, 330), (0, 380, 40),
    (1, 40, 120), (1, 200, 300), (1, 150, 420),
    (2, 30, 120), (2, 90, 220), (2, 150, 300),
]
for i, (src, y, x) in enumerate(crops):
    patch = sources[src][y:y + 128, x:x + 128]
    Image.fromarray(patch).save(os.path.join(natural_dir, f"{i:04d}.png"))

# 7-frame 64x64 clip: the camera pans over the cat photo while a patch cut
# from the astronaut photo slides across it in the opposite direction.
background = data.chelsea()
sprite = data.astronaut()[70:94, 200:224]
for t in range(7):
    by, bx = 60 + t, 170 + 2 * t
    frame = background[by:by + 64, bx:bx + 64].copy()
    oy, ox = 20, 36 - 3 * t
    frame[oy:oy + 24, ox:ox + 24] = sprite
    Image.fromarray(frame).save(os.path.join(clip_dir, f"{t:04d}.png"))
