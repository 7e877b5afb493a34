"""
Finding and selecting emitters
==============================

Bright spots are found in a confocal scan, then each measured emitter goes
through the selection chain: bleaching, count-rate stability, g2(0) and
PLE fit quality. The chain stops at the first failing stage.
"""
import numpy as np

from hbnple import CountTrace, EmitterRecord, G2Histogram, Spectrum, wavelength_to_energy
from hbnple.qc import ScanImage, detect_emitters, select_emitters

rng = np.random.default_rng(11)

# scan: 80x80 pixels of 0.1 um, three emitters on a dim background
rows, cols = np.indices((80, 80))
scan = rng.poisson(20, (80, 80)).astype(float)
for r, c, b in [(15, 20, 900), (40, 60, 400), (65, 30, 1500)]:
    scan += b * np.exp(-((rows - r) ** 2 + (cols - c) ** 2) / (2 * 1.2 ** 2))
for spot in detect_emitters(ScanImage(scan, step=0.1)):
    x, y = spot.centroid
    print(f"spot at ({x:.1f}, {y:.1f}) um, {len(spot.pixel_indices)} px, "
          f"peak {spot.peak_brightness:.0f}")


def g2(central, side=100.0, T=12.5e-9, dt=0.2e-9):
    delays = np.arange(-250, 251) * dt
    c = np.zeros(delays.size)
    c[250] = central
    for k in (-3, -2, -1, 1, 2, 3):
        c[np.argmin(np.abs(delays - k * T))] = side
    return G2Histogram(dt, delays, c)


nm = np.arange(430.0, 531.0)
e = wavelength_to_energy(nm)
ple = Spectrum.from_wavelength(nm, np.exp(-0.5 * ((e - 2.5) / 0.015) ** 2)
                               + 0.5 * np.exp(-0.5 * ((e - 2.66) / 0.015) ** 2))
sweep = CountTrace(0.05, [20000, 40000, 70000, 40000, 20000])
steady = CountTrace(0.5, [5200, 5100, 5150, 5180])
blinking = CountTrace(0.5, [5200, 900, 5100, 800])

records = [
    EmitterRecord(1, ple=ple, trace=steady, g2=g2(30), optimization_traces=(sweep,)),
    EmitterRecord(2, ple=ple, trace=blinking, g2=g2(30), optimization_traces=(sweep,)),
    EmitterRecord(3, ple=ple, trace=steady, g2=g2(80), optimization_traces=(sweep,)),
    EmitterRecord(4, ple=ple, trace=steady, g2=g2(30),
                  optimization_traces=(CountTrace(0.05, [30000, 60000, 30000]),)),
]
for rep in select_emitters(records):
    print(f"emitter {rep.emitter_id}: passed={rep.passed} failed_stage={rep.failed_stage} "
          f"rate={rep.mean_count_rate} g2={rep.g2_zero}")
