"""Sliding-window densities of transition spacings and conditional-subset heatmaps.

All windows are half-open, ``[c - w/2, c + w/2)``. Window centers start at
zero and run in multiples of the step up to ``max_detuning``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DegenerateInputError, Spectrum, normalize
from .fitting import TransitionSet, fit_candidates, multi_gauss_fit
from .peaks import PLE_THRESHOLDS, PLE_WINDOW, VetThresholds, find_peaks

DENSITY_WIDTH = 0.050
SLICE_WIDTH = 0.040
DENSITY_STEP = 0.005
SLICE_STEP = 0.010
MAX_DETUNING = 0.55


class DensityPeakWarning(UserWarning):
    """Fewer density peaks were found than expected."""


@dataclass(frozen=True)
class DensityMap:
    centers: np.ndarray
    values: np.ndarray
    window_width: float
    step: float


@dataclass(frozen=True)
class HeatMap:
    """Rows: slicing intervals. Columns: density windows.

    ``subset_sizes[i]`` is the number of emitters selected by row ``i``.
    """

    slice_centers: np.ndarray
    density_centers: np.ndarray
    matrix: np.ndarray
    slice_width: float
    density_width: float
    subset_sizes: np.ndarray
    normalized: bool = True


def window_centers(step: float, max_detuning: float = MAX_DETUNING) -> np.ndarray:
    if not step > 0:
        raise ValueError("step must be positive")
    n = int(np.floor(max_detuning / step + 1e-9)) + 1
    return np.arange(n) * step


def window_counts(values, centers, width: float) -> np.ndarray:
    """Number of ``values`` inside ``[c - width/2, c + width/2)`` for each center."""
    if not width > 0:
        raise ValueError("window width must be positive")
    v = np.sort(np.asarray(values, dtype=float))
    c = np.asarray(centers, dtype=float)
    lo = np.searchsorted(v, c - 0.5 * width, side="left")
    hi = np.searchsorted(v, c + 0.5 * width, side="left")
    return (hi - lo).astype(float)


def pooled_diffs(sets: Sequence[TransitionSet]) -> np.ndarray:
    return np.array([d for s in sets for d in s.pairwise_diffs], dtype=float)


def pooled_zpl_distances(sets: Sequence[TransitionSet]) -> np.ndarray:
    return np.array([t - s.zpl_energy for s in sets if s.zpl_energy is not None
                     for t in s.transitions], dtype=float)


def spacing_density(sets: Sequence[TransitionSet], window: float = DENSITY_WIDTH,
                    step: float = DENSITY_STEP, max_detuning: float = MAX_DETUNING) -> DensityMap:
    """Counts of pooled pairwise spacings in sliding windows."""
    centers = window_centers(step, max_detuning)
    return DensityMap(centers, window_counts(pooled_diffs(sets), centers, window), window, step)


def zpl_distance_density(sets: Sequence[TransitionSet], window: float = DENSITY_WIDTH,
                         step: float = DENSITY_STEP,
                         max_detuning: float = MAX_DETUNING) -> DensityMap:
    """Like :func:`spacing_density`, pooling transition minus ZPL energy."""
    centers = window_centers(step, max_detuning)
    return DensityMap(centers, window_counts(pooled_zpl_distances(sets), centers, window),
                      window, step)


def conditional_subset(sets: Sequence[TransitionSet], interval_center: float,
                       interval_width: float = SLICE_WIDTH) -> list:
    """Emitters with at least one spacing inside the slicing interval."""
    if not interval_width > 0:
        raise ValueError("interval width must be positive")
    lo = interval_center - 0.5 * interval_width
    hi = interval_center + 0.5 * interval_width
    return [s for s in sets if any(lo <= d < hi for d in s.pairwise_diffs)]


def build_heatmap(sets: Sequence[TransitionSet], slice_width: float = SLICE_WIDTH,
                  density_width: float = DENSITY_WIDTH, slice_step: float = SLICE_STEP,
                  density_step: float = DENSITY_STEP, max_detuning: float = MAX_DETUNING,
                  normalized: bool = True) -> HeatMap:
    """Spacing density of each conditional subset, one row per slicing interval.

    With ``normalized`` each row is divided by the size of its subset (rows of
    empty subsets stay zero); otherwise rows hold raw counts.
    """
    slices = window_centers(slice_step, max_detuning)
    dens = window_centers(density_step, max_detuning)
    matrix = np.zeros((slices.size, dens.size))
    sizes = np.zeros(slices.size, dtype=int)
    for i, c in enumerate(slices):
        subset = conditional_subset(sets, c, slice_width)
        sizes[i] = len(subset)
        if not subset:
            continue
        row = window_counts(pooled_diffs(subset), dens, density_width)
        matrix[i] = row / len(subset) if normalized else row
    return HeatMap(slices, dens, matrix, slice_width, density_width, sizes, normalized)


def fit_density_peaks(density: DensityMap, expected_count: int, window: int = PLE_WINDOW,
                      thresholds: VetThresholds = PLE_THRESHOLDS) -> list:
    """Gaussian components describing the maxima of a density.

    The density is normalised and treated as a spectrum: peaks are
    preselected, vetted and fitted jointly. Edge peaks help the fit but are
    not returned. When more than ``expected_count`` peaks survive, the
    largest ones are kept; when fewer, a :class:`DensityPeakWarning` is
    issued and the ones found are returned.
    """
    values = np.asarray(density.values, dtype=float)
    if not values.max() > 0:
        raise DegenerateInputError("density is zero everywhere")
    spec = normalize(Spectrum(density.centers, values))
    cands = find_peaks(spec, window, thresholds)
    used = fit_candidates(cands)
    found = []
    if used:
        fit = multi_gauss_fit(spec, used)
        keep = {c.index for c in cands if c.accepted and not c.is_edge}
        found = [comp for comp, src in zip(fit.components, fit.source_indices) if src in keep]
    if len(found) < expected_count:
        warnings.warn(f"found {len(found)} density peaks, expected {expected_count}",
                      DensityPeakWarning, stacklevel=2)
    elif len(found) > expected_count:
        found = sorted(found, key=lambda c: c.amplitude, reverse=True)[:expected_count]
        found.sort(key=lambda c: c.center)
    return found
