"""
Photoluminescence: ZPL and phonon sidebands
===========================================

The zero-phonon line is simply the maximum of the PL spectrum. The
five-Gaussian decomposition (ZPL, two acoustic and two optical sidebands)
gives the sideband detunings and a Debye-Waller-like weight ratio.
"""
import numpy as np

from hbnple import Spectrum, energy_to_wavelength
from hbnple.fitting import decompose_pl, extract_zpl

zpl = 2.156
e = np.linspace(1.80, 2.30, 400)
parts = [(1.0, zpl, 0.006),            # ZPL
         (0.25, zpl - 0.018, 0.010),   # acoustic
         (0.12, zpl - 0.045, 0.015),
         (0.18, zpl - 0.165, 0.020),   # optical
         (0.06, zpl - 0.190, 0.020)]
y = sum(a * np.exp(-0.5 * ((e - c) / s) ** 2) for a, c, s in parts)
pl = Spectrum(e, y + np.random.default_rng(3).normal(0, 0.005, e.size))

z = extract_zpl(pl)
print(f"ZPL at {z:.4f} eV ({energy_to_wavelength(z):.1f} nm)")

dec = decompose_pl(pl, z)
print("converged:", dec.converged)
for name, d in zip(("acoustic 1", "acoustic 2", "optical 1", "optical 2"), dec.detunings):
    print(f"  {name:10s} detuning {d * 1e3:6.1f} meV")
print(f"ZPL weight fraction {dec.debye_waller_proxy:.2f}")
