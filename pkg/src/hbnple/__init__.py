"""Excitation-spectroscopy analysis of hBN quantum emitters.

Modules: ``core`` (types, units), ``lsq`` (Levenberg-Marquardt), ``peaks``,
``fitting``, ``qc`` (detection and selection), ``correlation``,
``simulate``, ``afm``; ``cli`` and ``pipeline`` wire them together.
"""
from .core import (CountTrace, DegenerateInputError, DomainError, EmitterRecord, G2Histogram,
                   ParameterError, Spectrum, energy_to_wavelength, normalize,
                   wavelength_to_energy)

__version__ = "0.1.0"
