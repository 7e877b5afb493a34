"""Sum-of-Gaussians model with its analytic Jacobian.

Parameters are packed flat as ``[A0, mu0, s0, A1, mu1, s1, ...]`` with
``A * exp(-(x - mu)**2 / (2 s**2))`` per component.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FWHM_TO_SIGMA = 2.355
SIGMA_FLOOR = 1e-6


@dataclass(frozen=True)
class GaussianComponent:
    amplitude: float
    center: float
    sigma: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def area(self) -> float:
        return self.amplitude * self.sigma * np.sqrt(2 * np.pi)

    def __call__(self, x):
        return gaussian(x, self.amplitude, self.center, self.sigma)


def gaussian(x, amplitude, center, sigma):
    x = np.asarray(x, dtype=float)
    return amplitude * np.exp(-0.5 * ((x - center) / sigma) ** 2)


def multi_gaussian(params, x):
    x = np.asarray(x, dtype=float)
    p = np.asarray(params, dtype=float).reshape(-1, 3)
    with np.errstate(over="ignore"):
        z = (x[None, :] - p[:, 1:2]) / p[:, 2:3]
        return (p[:, 0:1] * np.exp(-0.5 * z * z)).sum(axis=0)


def multi_gaussian_jacobian(params, x):
    x = np.asarray(x, dtype=float)
    p = np.asarray(params, dtype=float).reshape(-1, 3)
    amp, mu, sig = p[:, 0:1], p[:, 1:2], p[:, 2:3]
    with np.errstate(over="ignore", invalid="ignore"):
        z = (x[None, :] - mu) / sig
        e = np.exp(-0.5 * z * z)
    jac = np.empty((x.size, p.shape[0] * 3))
    jac[:, 0::3] = e.T
    with np.errstate(over="ignore", invalid="ignore"):
        jac[:, 1::3] = (amp * e * z / sig).T
        jac[:, 2::3] = (amp * e * z * z / sig).T
    return np.nan_to_num(jac, nan=0.0, posinf=0.0, neginf=0.0)


def pack(components) -> np.ndarray:
    return np.array([[c.amplitude, c.center, c.sigma] for c in components], float).ravel()


def unpack(params) -> list:
    p = np.asarray(params, dtype=float).reshape(-1, 3)
    return [GaussianComponent(max(float(a), 0.0), float(m), float(s)) for a, m, s in p]


def gaussian_bounds(n_components: int):
    """Amplitude >= 0, free center, sigma >= SIGMA_FLOOR."""
    lo = np.tile([0.0, -np.inf, SIGMA_FLOOR], n_components)
    hi = np.full(3 * n_components, np.inf)
    return lo, hi
