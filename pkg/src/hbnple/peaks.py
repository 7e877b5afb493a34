"""Peak preselection by strict local maxima and vetting by local Gaussian fits."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import ParameterError, Spectrum
from .gaussian import FWHM_TO_SIGMA, GaussianComponent, gaussian_bounds, multi_gaussian, \
    multi_gaussian_jacobian
from . import lsq

PLE_WINDOW = 8
PL_WINDOW = 25


@dataclass(frozen=True)
class VetThresholds:
    residual_max: float
    min_height: float


PLE_THRESHOLDS = VetThresholds(residual_max=0.12, min_height=0.10)
PL_THRESHOLDS = VetThresholds(residual_max=0.15, min_height=0.06)


@dataclass(frozen=True)
class PeakCandidate:
    """A strict local maximum and, once vetted, the outcome of its local fit.

    ``est_width`` is a FWHM estimate: half the distance between the minima
    on either side of the peak. ``left_min``/``right_min`` are the indices of
    those minima (the data boundary when there is none).
    """

    index: int
    position: float
    height: float
    est_width: float
    is_edge: bool
    left_min: Optional[int] = None
    right_min: Optional[int] = None
    vet_residual_max: Optional[float] = None
    accepted: bool = False
    local_fit: Optional[GaussianComponent] = None
    message: str = ""

    @property
    def initial_sigma(self) -> float:
        return self.est_width / FWHM_TO_SIGMA


def _strict_local_maxima(y: np.ndarray, window: int):
    n = y.size
    if window < 1:
        raise ParameterError("window must be >= 1")
    if window >= n:
        raise ParameterError(f"window {window} must be smaller than the data length {n}")
    padded = np.concatenate([np.full(window, -np.inf), y, np.full(window, -np.inf)])
    views = sliding_window_view(padded, 2 * window + 1)
    others = np.delete(views, window, axis=1).max(axis=1)
    idx = np.flatnonzero(y > others)
    edge = (idx < window) | (idx > n - 1 - window)
    return idx, edge


def find_minima(spectrum: Spectrum, window: int) -> list:
    """Indices of strict local minima (including truncated-window edge minima)."""
    idx, _ = _strict_local_maxima(-spectrum.intensities, window)
    return idx.tolist()


def preselect_peaks(spectrum: Spectrum, window: int) -> list:
    """Points strictly larger than every point within ``window`` indices.

    Points closer than ``window`` to either end are compared against the
    truncated neighbourhood and flagged ``is_edge``.
    """
    y = spectrum.intensities
    x = spectrum.axis
    idx, edge = _strict_local_maxima(y, window)
    minima = np.asarray(find_minima(spectrum, window), dtype=int)
    out = []
    for i, is_edge in zip(idx, edge):
        left = minima[minima < i]
        right = minima[minima > i]
        lo = left[-1] if left.size else 0
        hi = right[0] if right.size else y.size - 1
        width = 0.5 * (x[hi] - x[lo])
        out.append(PeakCandidate(index=int(i), position=float(x[i]), height=float(y[i]),
                                 est_width=float(width), is_edge=bool(is_edge),
                                 left_min=int(lo), right_min=int(hi)))
    return out


def fit_single_gaussian(x, y, amplitude, center, sigma, options=None) -> lsq.FitResult:
    problem = lsq.FitProblem(
        model=multi_gaussian,
        jacobian=multi_gaussian_jacobian,
        initial_params=[amplitude, center, sigma],
        x_data=x,
        y_data=y,
        bounds=gaussian_bounds(1),
    )
    return lsq.fit(problem, options)


def vet_peak(spectrum: Spectrum, candidate: PeakCandidate, window: int,
             thresholds: VetThresholds = PLE_THRESHOLDS, options=None) -> PeakCandidate:
    """Fit one Gaussian on the candidate's neighbourhood and accept or reject it.

    Accepted iff the largest absolute residual is below
    ``thresholds.residual_max`` and the fitted amplitude exceeds
    ``thresholds.min_height``. A local fit whose center leaves the
    neighbourhood or whose sigma is below the grid spacing does not describe
    a resolved peak and is rejected as well. Edge candidates are never accepted; they are
    kept only so the multi-Gaussian fit can use them.
    """
    if candidate.is_edge:
        return replace(candidate, accepted=False, message="edge peak: not vetted")
    i = candidate.index
    # window on each side, cut at the surrounding minima so a neighbouring
    # peak's flank does not leak into the local fit
    lo = max(0, i - window)
    hi = min(len(spectrum), i + window + 1)
    if candidate.left_min is not None:
        lo = max(lo, candidate.left_min)
    if candidate.right_min is not None:
        hi = min(hi, candidate.right_min + 1)
    x = spectrum.axis[lo:hi]
    y = spectrum.intensities[lo:hi]
    try:
        res = fit_single_gaussian(x, y, max(candidate.height, 0.0), candidate.position,
                                  max(candidate.initial_sigma, 1e-6), options)
    except ValueError as exc:
        return replace(candidate, accepted=False, message=f"local fit failed: {exc}")
    if not res.converged:
        return replace(candidate, accepted=False, message=f"local fit failed: {res.message}")
    amp, mu, sig = res.params
    worst = float(np.max(np.abs(res.residuals)))
    step = float(np.mean(np.diff(x)))
    plausible = x[0] <= mu <= x[-1] and sig >= step
    ok = plausible and worst < thresholds.residual_max and amp > thresholds.min_height
    return replace(candidate, vet_residual_max=worst, accepted=bool(ok),
                   local_fit=GaussianComponent(float(amp), float(mu), float(sig)),
                   message="accepted" if ok else "rejected by residual/height threshold")


def find_peaks(spectrum: Spectrum, window: int = PLE_WINDOW,
               thresholds: VetThresholds = PLE_THRESHOLDS, options=None) -> list:
    """Preselect and vet in one go; returns every candidate with its outcome."""
    return [vet_peak(spectrum, c, window, thresholds, options)
            for c in preselect_peaks(spectrum, window)]
