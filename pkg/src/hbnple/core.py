"""Domain types and small numeric helpers shared by the whole package.

Spectra are stored on an ascending energy axis (eV). Wavelength data is
converted and re-sorted when a :class:`Spectrum` is built with
:meth:`Spectrum.from_wavelength`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

HC_EV_NM = 1239.841984


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class DegenerateInputError(ValueError):
    """Input that carries no usable signal (e.g. an all-zero spectrum)."""


class ParameterError(ValueError):
    """Invalid tuning parameter for an otherwise valid input."""


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def wavelength_to_energy(lambda_nm):
    """Photon energy in eV for a vacuum wavelength in nm.

    Accepts scalars or arrays. The conversion is its own inverse, so
    :func:`energy_to_wavelength` is the same formula.
    """
    lam = np.asarray(lambda_nm, dtype=float)
    if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
        raise DomainError("wavelength must be positive and finite")
    out = HC_EV_NM / lam
    return float(out) if out.ndim == 0 else out


def energy_to_wavelength(energy_ev):
    """Vacuum wavelength in nm for a photon energy in eV."""
    e = np.asarray(energy_ev, dtype=float)
    if np.any(~np.isfinite(e)) or np.any(e <= 0):
        raise DomainError("energy must be positive and finite")
    out = HC_EV_NM / e
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Spectrum:
    """Intensities on a strictly increasing axis.

    Parameters
    ----------
    axis : array_like
        Abscissa, strictly increasing. Energy in eV for everything that
        gets fitted.
    intensities : array_like
        Same length as ``axis``, all finite.
    unit : str
        Unit tag of the axis (``"eV"``, ``"nm"``, ``"uW"``, ...).
    normalized : bool
        True when intensities were divided by their maximum.
    metadata : mapping
        Free-form acquisition details.
    """

    axis: np.ndarray
    intensities: np.ndarray
    unit: str = "eV"
    normalized: bool = False
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        axis = _frozen(self.axis)
        y = _frozen(self.intensities)
        if axis.ndim != 1 or y.ndim != 1 or axis.size != y.size:
            raise ValueError("axis and intensities must be 1-D with equal length")
        if axis.size < 3:
            raise ValueError("a spectrum needs at least 3 points")
        if not np.all(np.isfinite(axis)) or not np.all(np.isfinite(y)):
            raise ValueError("axis and intensities must be finite")
        if np.any(np.diff(axis) <= 0):
            raise ValueError("axis must be strictly increasing")
        if self.normalized and y.max() != 1.0:
            raise ValueError("normalized intensities must have a maximum of exactly 1")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "intensities", y)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self):
        return self.axis.size

    @classmethod
    def from_wavelength(cls, wavelength_nm, intensities, metadata=None) -> "Spectrum":
        """Build an energy-axis spectrum from wavelength-ordered data."""
        energy = np.asarray(wavelength_to_energy(np.asarray(wavelength_nm, float)))
        y = np.asarray(intensities, dtype=float)
        order = np.argsort(energy)
        return cls(energy[order], y[order], unit="eV", metadata=metadata or {})


@dataclass(frozen=True)
class CountTrace:
    """Photon counts per time bin (bin width in seconds)."""

    bin_width: float
    counts: np.ndarray

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        counts = _frozen(self.counts, dtype=np.int64)
        if counts.ndim != 1 or np.any(counts < 0):
            raise ValueError("counts must be a 1-D array of non-negative integers")
        object.__setattr__(self, "counts", counts)

    def __len__(self):
        return self.counts.size


@dataclass(frozen=True)
class G2Histogram:
    """Coincidence histogram of a start-stop correlation measurement."""

    bin_width: float
    delays: np.ndarray
    coincidences: np.ndarray

    def __post_init__(self):
        d = _frozen(self.delays)
        c = _frozen(self.coincidences)
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        if d.ndim != 1 or d.shape != c.shape or d.size < 3:
            raise ValueError("delays and coincidences must be 1-D with equal length")
        if np.any(np.diff(d) <= 0):
            raise ValueError("delays must be strictly increasing")
        if abs(d[0] + d[-1]) > self.bin_width:
            raise ValueError("delays must be centered on zero")
        if np.any(c < 0):
            raise ValueError("coincidences must be non-negative")
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "coincidences", c)


@dataclass(frozen=True)
class EmitterRecord:
    """Everything measured on one fluorescent spot.

    Measurements missing because the sequence aborted are ``None``.
    ``optimization_traces`` is empty when no brightness sweeps were kept.
    """

    id: int
    scan_position: Optional[tuple] = None
    ple: Optional[Spectrum] = None
    pl: Optional[Spectrum] = None
    trace: Optional[CountTrace] = None
    g2: Optional[G2Histogram] = None
    optimization_traces: tuple = ()
    saturation: Optional[Spectrum] = None

    def __post_init__(self):
        object.__setattr__(self, "optimization_traces", tuple(self.optimization_traces))


def normalize(spectrum: Spectrum) -> Spectrum:
    """Divide intensities by their maximum.

    Raises
    ------
    DegenerateInputError
        If the maximum is not positive.
    """
    y = spectrum.intensities
    peak = y.max()
    if not peak > 0:
        raise DegenerateInputError("cannot normalize: maximum intensity is not positive")
    scaled = y / peak
    return Spectrum(spectrum.axis, scaled, unit=spectrum.unit, normalized=True,
                    metadata=spectrum.metadata)


def rebin_trace(trace: CountTrace, target_bin: float) -> CountTrace:
    """Sum consecutive bins into wider ones, dropping a trailing partial group."""
    ratio = target_bin / trace.bin_width
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9 * max(1.0, ratio):
        raise ParameterError(
            f"target bin {target_bin} is not an integer multiple of {trace.bin_width}")
    n = len(trace) // factor
    counts = trace.counts[: n * factor].reshape(n, factor).sum(axis=1)
    return CountTrace(factor * trace.bin_width, counts)


def mean_abs_diff(values) -> float:
    """Mean absolute difference between consecutive values."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ParameterError("need at least two values")
    return float(np.mean(np.abs(np.diff(v))))
