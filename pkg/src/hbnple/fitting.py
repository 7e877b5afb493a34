"""Multi-Gaussian fits of excitation spectra, ZPL extraction and PL decomposition."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from . import lsq
from .core import DegenerateInputError, Spectrum
from .gaussian import (FWHM_TO_SIGMA, SIGMA_FLOOR, GaussianComponent, gaussian_bounds,
                       multi_gaussian, multi_gaussian_jacobian, unpack)
from .peaks import PeakCandidate

ACOUSTIC_DETUNINGS = (0.020, 0.050)
OPTICAL_DETUNINGS = (0.165, 0.190)
OPTICAL_SLACK = 0.025
# acoustic detunings are confined below the optical band
ACOUSTIC_BOUNDS = ((0.0, 0.035), (0.035, 0.100))


class FitFailed(RuntimeError):
    """A fit did not converge; ``partial`` carries the best attempt."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class MultiGaussFit:
    """Fitted sum of Gaussians.

    ``source_indices[k]`` is the spectrum index of the candidate that seeded
    ``components[k]``; components are sorted by center.
    """

    components: tuple
    residuals: np.ndarray
    converged: bool
    source_indices: tuple = ()
    message: str = ""

    @property
    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if self.residuals.size else 0.0

    def __call__(self, x):
        return sum((c(x) for c in self.components), np.zeros(np.shape(x)))


@dataclass(frozen=True)
class TransitionSet:
    """Transition energies of one emitter plus all their pairwise spacings."""

    emitter_id: int
    zpl_energy: Optional[float]
    transitions: tuple = ()
    pairwise_diffs: tuple = field(init=False)

    def __post_init__(self):
        t = tuple(sorted(float(v) for v in self.transitions))
        object.__setattr__(self, "transitions", t)
        object.__setattr__(self, "pairwise_diffs",
                           tuple(b - a for a, b in combinations(t, 2)))


@dataclass(frozen=True)
class PLDecomposition:
    zpl: GaussianComponent
    acoustic: tuple
    optical: tuple
    residuals: np.ndarray
    converged: bool

    @property
    def debye_waller_proxy(self) -> float:
        return debye_waller_proxy(self.zpl, self.acoustic + self.optical)

    @property
    def detunings(self) -> tuple:
        return tuple(self.zpl.center - c.center for c in self.acoustic + self.optical)


def debye_waller_proxy(zpl: GaussianComponent, sidebands: Sequence[GaussianComponent]) -> float:
    """Fraction of the total Gaussian area carried by the ZPL component."""
    total = zpl.area + sum(c.area for c in sidebands)
    if not total > 0:
        raise DegenerateInputError("total area is zero")
    return zpl.area / total


def multi_gauss_fit(spectrum: Spectrum, candidates: Sequence[PeakCandidate],
                    options: lsq.FitOptions | None = None) -> MultiGaussFit:
    """Fit one Gaussian per candidate to the whole spectrum.

    Starting values come from the candidates: center = position,
    amplitude = height, sigma = est_width / 2.355.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    init = []
    for c in candidates:
        init += [max(c.height, 0.0), c.position, max(c.initial_sigma, SIGMA_FLOOR)]
    problem = lsq.FitProblem(
        model=multi_gaussian,
        jacobian=multi_gaussian_jacobian,
        initial_params=init,
        x_data=spectrum.axis,
        y_data=spectrum.intensities,
        bounds=gaussian_bounds(len(candidates)),
    )
    res = lsq.fit(problem, options)
    comps = unpack(res.params)
    order = np.argsort([c.center for c in comps], kind="stable")
    return MultiGaussFit(
        components=tuple(comps[k] for k in order),
        residuals=res.residuals,
        converged=res.converged,
        source_indices=tuple(candidates[k].index for k in order),
        message=res.message,
    )


def fit_candidates(candidates: Sequence[PeakCandidate]) -> list:
    """Candidates that take part in the multi-Gaussian fit: accepted or edge."""
    return [c for c in candidates if c.accepted or c.is_edge]


def extract_transitions(fit: MultiGaussFit, candidates: Sequence[PeakCandidate],
                        emitter_id: int = 0, zpl_energy: Optional[float] = None) -> TransitionSet:
    """Fitted centers of the accepted, non-edge components."""
    keep = {c.index for c in candidates if c.accepted and not c.is_edge}
    centers = [comp.center for comp, src in zip(fit.components, fit.source_indices)
               if src in keep]
    return TransitionSet(emitter_id, zpl_energy, tuple(centers))


def extract_zpl(pl: Spectrum) -> float:
    """Energy of the global maximum; the lowest energy wins a tie."""
    if len(pl) == 0:
        raise ValueError("empty spectrum")
    return float(pl.axis[int(np.argmax(pl.intensities))])


# PL decomposition: parameters are
# [A_zpl, E_zpl, s_zpl, A_1, d_1, s_1, ..., A_4, d_4, s_4]
# where sideband k sits at E_zpl - d_k.
_N_PL = 5


def _pl_to_gauss(theta):
    p = np.asarray(theta, dtype=float).reshape(_N_PL, 3).copy()
    p[1:, 1] = p[0, 1] - p[1:, 1]
    return p.ravel()


def _pl_model(theta, x):
    return multi_gaussian(_pl_to_gauss(theta), x)


def _pl_jacobian(theta, x):
    jac = multi_gaussian_jacobian(_pl_to_gauss(theta), x)
    mu_cols = jac[:, 1::3].copy()
    jac[:, 1] = mu_cols.sum(axis=1)
    jac[:, 4::3] = -mu_cols[:, 1:]
    return jac


def _half_max_sigma(pl: Spectrum, i: int) -> float:
    y = pl.intensities
    half = 0.5 * y[i]
    lo = i
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = i
    while hi < y.size - 1 and y[hi] > half:
        hi += 1
    fwhm = pl.axis[hi] - pl.axis[lo]
    return float(np.clip(fwhm / FWHM_TO_SIGMA, 0.002, 0.05))


def decompose_pl(pl: Spectrum, zpl: float, options: lsq.FitOptions | None = None,
                 span_below: float = 0.28, zpl_slack: float = 0.02) -> PLDecomposition:
    """Five-Gaussian decomposition: ZPL, two acoustic and two optical sidebands.

    Sideband centers are fitted as detunings below the ZPL. Only data with
    energy above ``zpl - span_below`` enter the fit.

    Raises
    ------
    FitFailed
        If the fit does not converge; the exception carries the partial
        decomposition.
    """
    x_all = pl.axis
    if not x_all[0] <= zpl <= x_all[-1]:
        raise ValueError("zpl outside the spectrum range")
    mask = x_all >= zpl - span_below
    x = x_all[mask]
    y = pl.intensities[mask]
    i0 = int(np.argmin(np.abs(x_all - zpl)))
    y0 = float(pl.intensities[i0])

    def level(e):
        return float(np.interp(e, x_all, pl.intensities))

    det0 = ACOUSTIC_DETUNINGS + OPTICAL_DETUNINGS
    sig0 = (0.010, 0.020, 0.015, 0.015)
    theta = [max(y0, 1e-3), zpl, _half_max_sigma(pl, i0)]
    for k, (d, s) in enumerate(zip(det0, sig0)):
        scale = 0.5 if k < 2 else 1.0
        theta += [max(scale * level(zpl - d), 0.0), d, s]

    lo = [0.0, zpl - zpl_slack, SIGMA_FLOOR]
    hi = [np.inf, zpl + zpl_slack, np.inf]
    det_bounds = list(ACOUSTIC_BOUNDS) + [(d - OPTICAL_SLACK, d + OPTICAL_SLACK)
                                         for d in OPTICAL_DETUNINGS]
    for dlo, dhi in det_bounds:
        lo += [0.0, dlo, SIGMA_FLOOR]
        hi += [np.inf, dhi, np.inf]

    problem = lsq.FitProblem(model=_pl_model, jacobian=_pl_jacobian, initial_params=theta,
                             x_data=x, y_data=y, bounds=(lo, hi))
    res = lsq.fit(problem, options)
    comps = unpack(_pl_to_gauss(res.params))
    out = PLDecomposition(zpl=comps[0], acoustic=tuple(comps[1:3]), optical=tuple(comps[3:5]),
                          residuals=res.residuals, converged=res.converged)
    if not res.converged:
        raise FitFailed(f"PL decomposition did not converge: {res.message}", partial=out)
    return out
