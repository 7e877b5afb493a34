"""
Toy transition ladders and their spacing statistics
===================================================

Transitions are stacked above each ZPL by drawing phonon modes, with a
placement probability that thins out long ladders. The pooled density of
pairwise spacings shows a peak at the dominant mode and one at twice it,
and the conditional heatmap links the two.
"""
import numpy as np

from hbnple.correlation import build_heatmap, fit_density_peaks, spacing_density
from hbnple.fitting import TransitionSet
from hbnple.simulate import SimConfig, generate_dataset, placement_probability, synthetic_zpls

print("placement probability, m = 1..4, n = 0:",
      [round(placement_probability(m, 0), 3) for m in range(1, 5)])

cfg = SimConfig(seed=42)
zpls = synthetic_zpls(152, seed=42)
emitters = generate_dataset(zpls, cfg)
sets = [TransitionSet(i, e.zpl, e.transitions) for i, e in enumerate(emitters, start=1)]
print(f"{len(sets)} emitters, {sum(len(s.transitions) for s in sets)} transitions")

density = spacing_density(sets)
top = density.centers[np.argmax(density.values)]
print(f"density maximum at {top * 1e3:.0f} meV")
for comp in fit_density_peaks(density, expected_count=2):
    print(f"  density peak {comp.center * 1e3:.1f} meV, sigma {comp.sigma * 1e3:.1f} meV")

hm = build_heatmap(sets)
row = hm.matrix[np.argmin(np.abs(hm.slice_centers - top))]
second = hm.density_centers[hm.density_centers > 0.25][np.argmax(row[hm.density_centers > 0.25])]
print(f"given a {top * 1e3:.0f} meV spacing, the most likely further spacing "
      f"above 250 meV is {second * 1e3:.0f} meV")
