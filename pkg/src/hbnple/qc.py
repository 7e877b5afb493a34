"""Emitter detection in confocal scans and the automatic data-selection chain.

Selection runs in measurement order: bleaching check, then brightness and
stability of the count trace, then g2(0), then the quality of the
multi-Gaussian fit to the excitation spectrum. The first failing stage
ends the evaluation of a record.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from . import lsq
from .core import CountTrace, DegenerateInputError, EmitterRecord, G2Histogram, normalize, \
    mean_abs_diff, rebin_trace
from .fitting import MultiGaussFit, fit_candidates, multi_gauss_fit
from .peaks import PLE_THRESHOLDS, PLE_WINDOW, VetThresholds, find_peaks

EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


class Status(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_EVALUABLE = "not_evaluable"
    NOT_EVALUATED = "not_evaluated"


@dataclass(frozen=True)
class QCConfig:
    brightness_ratio: float = 4.0
    neighbour_offset: int = 6
    median_size: int = 3
    bleach_ratio: float = 3.5
    stability_bin: float = 0.5
    min_count_rate: float = 8000.0
    max_stability: float = 0.1
    rep_period: float = 12.5e-9
    side_peaks: int = 3
    max_g2: float = 0.5
    max_fit_residual: float = 0.26
    ple_window: int = PLE_WINDOW
    ple_thresholds: VetThresholds = PLE_THRESHOLDS
    fit_options: lsq.FitOptions = field(default_factory=lsq.FitOptions)


@dataclass(frozen=True)
class ScanImage:
    pixels: np.ndarray
    step: float = 0.1

    def __post_init__(self):
        px = np.array(self.pixels, dtype=float)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("scan must be a non-empty 2-D grid")
        if np.any(~np.isfinite(px)) or np.any(px < 0):
            raise ValueError("scan pixels must be finite and non-negative")
        if not self.step > 0:
            raise ValueError("step must be positive")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)


@dataclass(frozen=True)
class DetectedSpot:
    pixel_indices: frozenset
    centroid: tuple
    peak_brightness: float

    @property
    def pixel_count(self) -> int:
        return len(self.pixel_indices)


def brightness_mask(smoothed: np.ndarray, ratio: float = 4.0, offset: int = 6) -> np.ndarray:
    """Pixels at least ``ratio`` times brighter than the pixel ``offset`` steps
    away in each of the four axis directions.

    Directions that fall outside the image are ignored. Zero-valued pixels are
    never selected.
    """
    s = np.asarray(smoothed, dtype=float)
    mask = s > 0
    rows, cols = s.shape
    if offset < rows:
        mask[offset:, :] &= s[offset:, :] >= ratio * s[:-offset, :]    # up
        mask[:-offset, :] &= s[:-offset, :] >= ratio * s[offset:, :]   # down
    if offset < cols:
        mask[:, offset:] &= s[:, offset:] >= ratio * s[:, :-offset]    # left
        mask[:, :-offset] &= s[:, :-offset] >= ratio * s[:, offset:]   # right
    return mask


def detect_emitters(scan: ScanImage, config: QCConfig = QCConfig()) -> list:
    """Find fluorescent spots in a confocal scan.

    The scan is median filtered, thresholded with :func:`brightness_mask` and
    the selected pixels are grouped by 8-connectivity. Centroids are
    brightness weighted (filtered image) and given as ``(x, y)`` in the scan's
    length unit, x along columns.
    """
    smoothed = ndimage.median_filter(scan.pixels, size=config.median_size)
    mask = brightness_mask(smoothed, config.brightness_ratio, config.neighbour_offset)
    labels, n = ndimage.label(mask, EIGHT_CONNECTED)
    spots = []
    for k in range(1, n + 1):
        r, c = np.nonzero(labels == k)
        w = smoothed[r, c]
        cy = float(np.sum(w * r) / np.sum(w)) * scan.step
        cx = float(np.sum(w * c) / np.sum(w)) * scan.step
        spots.append(DetectedSpot(frozenset(zip(r.tolist(), c.tolist())), (cx, cy),
                                  float(w.max())))
    return spots


def check_bleaching(traces, ratio: float = 3.5) -> bool:
    """True when any optimisation sweep lacks the required max/min contrast.

    ``traces`` is one :class:`CountTrace` or a sequence of them (x and y
    sweeps). A sweep with min 0 counts as unbleached unless its max is 0 too.
    """
    if isinstance(traces, CountTrace):
        traces = [traces]
    if not traces:
        raise ValueError("need at least one optimisation trace")
    for t in traces:
        if len(t) == 0:
            raise ValueError("empty optimisation trace")
        hi, lo = int(t.counts.max()), int(t.counts.min())
        if hi == 0:
            return True
        if lo > 0 and hi < ratio * lo:
            return True
    return False


@dataclass(frozen=True)
class StabilityResult:
    mean_rate: Optional[float]
    stability_metric: Optional[float]
    status: Status


def criterion_stability(trace: Optional[CountTrace], config: QCConfig = QCConfig()) -> StabilityResult:
    """Mean count rate and mean absolute step of the max-normalised trace.

    Traces with finer bins are summed up to ``config.stability_bin`` first.
    """
    if trace is None:
        return StabilityResult(None, None, Status.NOT_EVALUABLE)
    if not np.isclose(trace.bin_width, config.stability_bin, rtol=1e-9, atol=0):
        trace = rebin_trace(trace, config.stability_bin)
    if len(trace) < 2:
        return StabilityResult(None, None, Status.NOT_EVALUABLE)
    counts = trace.counts.astype(float)
    rate = float(counts.mean() / trace.bin_width)
    if counts.max() <= 0:
        return StabilityResult(rate, None, Status.FAIL)
    metric = mean_abs_diff(counts / counts.max())
    ok = rate > config.min_count_rate and metric < config.max_stability
    return StabilityResult(rate, metric, Status.PASS if ok else Status.FAIL)


@dataclass(frozen=True)
class G2Result:
    g2_zero: Optional[float]
    status: Status


def pulse_areas(g2: G2Histogram, rep_period: float, side_peaks: int = 3):
    """Integrated coincidences of the central window and of the side windows.

    Window k covers delays in ``[k T - T/2, k T + T/2)``. Returns ``None``
    when the histogram does not cover all side windows.
    """
    d, c = g2.delays, g2.coincidences
    half = 0.5 * rep_period
    reach = (side_peaks + 0.5) * rep_period
    if d[0] > -reach + g2.bin_width or d[-1] < reach - g2.bin_width:
        return None

    def area(center):
        sel = (d >= center - half) & (d < center + half)
        return float(c[sel].sum())

    central = area(0.0)
    sides = [area(s * k * rep_period) for k in range(1, side_peaks + 1) for s in (-1, 1)]
    return central, sides


def criterion_g2(g2: Optional[G2Histogram], config: QCConfig = QCConfig()) -> G2Result:
    """Central pulse area over the mean side-pulse area."""
    if g2 is None:
        return G2Result(None, Status.NOT_EVALUABLE)
    areas = pulse_areas(g2, config.rep_period, config.side_peaks)
    if areas is None:
        return G2Result(None, Status.NOT_EVALUABLE)
    central, sides = areas
    side_mean = float(np.mean(sides))
    if side_mean <= 0:
        return G2Result(None, Status.NOT_EVALUABLE)
    value = central / side_mean
    return G2Result(value, Status.PASS if value < config.max_g2 else Status.FAIL)


@dataclass(frozen=True)
class FitQualityResult:
    max_resid: Optional[float]
    status: Status


def criterion_fit_quality(fit: Optional[MultiGaussFit], config: QCConfig = QCConfig()) -> FitQualityResult:
    if fit is None:
        return FitQualityResult(None, Status.NOT_EVALUABLE)
    worst = fit.max_abs_residual
    ok = fit.converged and worst < config.max_fit_residual
    return FitQualityResult(worst, Status.PASS if ok else Status.FAIL)


def fit_ple(ple, config: QCConfig = QCConfig()) -> Optional[MultiGaussFit]:
    """Peak search and multi-Gaussian fit on the normalised excitation spectrum.

    Returns ``None`` if the spectrum cannot be normalised or has no usable
    peak; such a record fails the fit-quality criterion.
    """
    try:
        spec = normalize(ple)
    except DegenerateInputError:
        return None
    cands = find_peaks(spec, config.ple_window, config.ple_thresholds, config.fit_options)
    used = fit_candidates(cands)
    if not used:
        return None
    return multi_gauss_fit(spec, used, config.fit_options)


@dataclass(frozen=True)
class SelectionReport:
    emitter_id: int
    bleached: Optional[bool] = None
    mean_count_rate: Optional[float] = None
    stability_metric: Optional[float] = None
    g2_zero: Optional[float] = None
    fit_max_residual: Optional[float] = None
    stability: Status = Status.NOT_EVALUATED
    g2: Status = Status.NOT_EVALUATED
    fit_quality: Status = Status.NOT_EVALUATED
    failed_stage: Optional[str] = None

    @property
    def passed(self) -> bool:
        return (self.bleached is not True and self.stability is Status.PASS
                and self.g2 is Status.PASS and self.fit_quality is Status.PASS)


def evaluate_emitter(record: EmitterRecord, config: QCConfig = QCConfig()) -> SelectionReport:
    """Run the selection chain on one record.

    Without optimisation sweeps the bleaching state is unknown (``None``) and
    does not stop the evaluation.
    """
    rid = record.id
    bleached = None
    if record.optimization_traces:
        bleached = check_bleaching(record.optimization_traces, config.bleach_ratio)
        if bleached:
            return SelectionReport(rid, bleached=True, failed_stage="bleaching")

    st = criterion_stability(record.trace, config)
    report = dict(emitter_id=rid, bleached=bleached, mean_count_rate=st.mean_rate,
                  stability_metric=st.stability_metric, stability=st.status)
    if st.status is not Status.PASS:
        return SelectionReport(**report, failed_stage="stability")

    g2 = criterion_g2(record.g2, config)
    report.update(g2_zero=g2.g2_zero, g2=g2.status)
    if g2.status is not Status.PASS:
        return SelectionReport(**report, failed_stage="g2")

    if record.ple is None:
        return SelectionReport(**report, fit_quality=Status.NOT_EVALUABLE,
                               failed_stage="fit_quality")
    fq = criterion_fit_quality(fit_ple(record.ple, config), config)
    if fq.status is Status.NOT_EVALUABLE:
        fq = FitQualityResult(None, Status.FAIL)
    report.update(fit_max_residual=fq.max_resid, fit_quality=fq.status)
    return SelectionReport(**report, failed_stage=None if fq.status is Status.PASS else "fit_quality")


def select_emitters(records: Sequence[EmitterRecord], config: QCConfig = QCConfig()) -> list:
    """Selection reports in input order; failures are data, never exceptions."""
    return [evaluate_emitter(r, config) for r in records]
