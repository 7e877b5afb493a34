"""
Excitation spectrum to transition energies
==========================================

A synthetic PLE spectrum on the usual 430-530 nm, 1 nm grid is normalised,
peak candidates are found and vetted, and the accepted peaks are fitted
together with a multi-Gaussian model. The fitted centers are the
transition energies of the emitter.
"""
import numpy as np

from hbnple import Spectrum, normalize, wavelength_to_energy
from hbnple.fitting import extract_transitions, fit_candidates, multi_gauss_fit
from hbnple.peaks import find_peaks

rng = np.random.default_rng(7)
nm = np.arange(430.0, 531.0)
e = wavelength_to_energy(nm)

# three lines 165 meV apart, weakening upwards, plus a little uniform noise
true = [(1.0, 2.490, 0.015), (0.7, 2.655, 0.018), (0.45, 2.820, 0.020)]
counts = sum(a * np.exp(-0.5 * ((e - c) / s) ** 2) for a, c, s in true)
counts = 1200 * counts + 40 + rng.uniform(-30, 30, nm.size)

spec = normalize(Spectrum.from_wavelength(nm, counts - 40))
print(f"{spec.axis.size} points, {spec.axis[0]:.3f}..{spec.axis[-1]:.3f} eV")

cands = find_peaks(spec)
for c in cands:
    print(f"  candidate {spec.axis[c.index]:.3f} eV  edge={c.is_edge}  accepted={c.accepted}")

fit = multi_gauss_fit(spec, fit_candidates(cands))
print("converged:", fit.converged, " max |residual|: %.3f" % np.abs(fit.residuals).max())

ts = extract_transitions(fit, cands, emitter_id=1, zpl_energy=2.16)
print("transitions (eV):", np.round(ts.transitions, 4))
print("true centers (eV):", [c for _, c, _ in true])
print("pairwise spacings (meV):", np.round(np.array(ts.pairwise_diffs) * 1e3, 1))
