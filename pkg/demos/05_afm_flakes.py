"""
Flake heights from an AFM map
=============================

A tilted height map with a few flakes is levelled, thresholded at 2 nm,
and each flake's mean height is turned into a layer count.
"""
import numpy as np

from hbnple.afm import (HeightMap, aggregate_stats, correct_tilt, flake_stats, layer_count,
                        segment_flakes)

rng = np.random.default_rng(5)
rows, cols = np.indices((128, 128))
z = 0.02 * cols + 0.01 * rows + rng.normal(0, 0.1, (128, 128))
for r, c, rad, h in [(30, 30, 9, 2.5), (80, 90, 14, 12.0), (100, 25, 6, 30.0)]:
    z += np.where((rows - r) ** 2 + (cols - c) ** 2 <= rad ** 2, h, 0.0)

# levelling uses row/column means, so large tall flakes pull the plane and
# the reported heights carry that offset
hmap = correct_tilt(HeightMap(z, pixel_size=7.8))
flakes = [flake_stats(hmap, f) for f in segment_flakes(hmap)]
for i, f in enumerate(flakes, start=1):
    print(f"flake {i}: {f.pixel_count} px, mean height {f.mean_height:.2f} nm, "
          f"diameter {f.equiv_diameter:.0f} nm, {f.layers:.1f} layers")
print({k: round(v, 2) for k, v in aggregate_stats(flakes).items()})
print("2.03 nm ->", round(layer_count(2.03), 2), "layers")
