"""Damped Gauss-Newton (Levenberg-Marquardt) least squares with box bounds.

Bounds are enforced after each step: a coordinate that would leave the box
is moved halfway towards the bound it violates, so a parameter can approach
a bound but never jumps onto it in one step. The
damping term is scaled by the diagonal of ``J^T J`` (Marquardt scaling), so
parameters of very different magnitude (amplitudes near 1, widths near
0.01 eV) are handled without manual rescaling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

DAMPING_CAP = 1e10


@dataclass
class FitProblem:
    """A model, its data and a starting point.

    ``jacobian(params, x)`` returns the ``(len(x), len(params))`` matrix of
    partial derivatives of the model. When omitted, central finite
    differences are used.
    """

    model: Callable[[np.ndarray, np.ndarray], np.ndarray]
    initial_params: np.ndarray
    x_data: np.ndarray
    y_data: np.ndarray
    bounds: Optional[tuple] = None
    jacobian: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.initial_params = np.array(self.initial_params, dtype=float)
        self.x_data = np.asarray(self.x_data, dtype=float)
        self.y_data = np.asarray(self.y_data, dtype=float)
        if self.x_data.shape != self.y_data.shape:
            raise ValueError("x_data and y_data must have equal length")
        if self.x_data.size < self.initial_params.size:
            raise ValueError("fewer data points than parameters")
        lo, hi = self.bounds_arrays()
        if np.any(lo > hi):
            raise ValueError("lower bound above upper bound")
        if np.any(self.initial_params < lo) or np.any(self.initial_params > hi):
            raise ValueError("initial parameters outside bounds")

    def bounds_arrays(self):
        k = self.initial_params.size
        if self.bounds is None:
            return np.full(k, -np.inf), np.full(k, np.inf)
        lo, hi = self.bounds
        return (np.broadcast_to(np.asarray(lo, float), (k,)).copy(),
                np.broadcast_to(np.asarray(hi, float), (k,)).copy())


@dataclass
class FitResult:
    params: np.ndarray
    residuals: np.ndarray
    converged: bool
    iterations: int
    cost: float
    message: str = ""
    cost_history: list = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 200
    tol_cost: float = 1e-10
    tol_step: float = 1e-10
    damping_init: float = 1e-3


def finite_difference_jacobian(model, params, x, rel_step=1e-6):
    """Central-difference Jacobian with step ``rel_step * max(|p|, 1)``."""
    params = np.asarray(params, dtype=float)
    jac = np.empty((np.size(x), params.size))
    for k in range(params.size):
        h = rel_step * max(abs(params[k]), 1.0)
        up = params.copy()
        dn = params.copy()
        up[k] += h
        dn[k] -= h
        jac[:, k] = (model(up, x) - model(dn, x)) / (2 * h)
    return jac


def _bounded_step(p, step, lo, hi):
    # coordinates that would leave the box stop halfway to the violated bound
    trial = p + step
    below = trial < lo
    above = trial > hi
    trial[below] = lo[below] + 0.5 * (p[below] - lo[below])
    trial[above] = hi[above] - 0.5 * (hi[above] - p[above])
    return np.clip(trial, lo, hi)


def _result(p, r, converged, it, message, history):
    return FitResult(params=p, residuals=r, converged=converged, iterations=it,
                     cost=float(r @ r), message=message, cost_history=history)


def fit(problem: FitProblem, options: FitOptions | None = None) -> FitResult:
    """Minimise the sum of squared residuals ``y - model(p, x)``.

    The returned cost is never above the initial cost. Failures during the
    iteration (non-finite model output, damping beyond the cap, iteration
    limit) are reported through ``converged=False`` and ``message``; the best
    parameters found so far are returned.
    """
    opts = options or FitOptions()
    x, y = problem.x_data, problem.y_data
    lo, hi = problem.bounds_arrays()
    model = problem.model
    if problem.jacobian is not None:
        jac_fn = problem.jacobian
    else:
        def jac_fn(p, xx):
            return finite_difference_jacobian(model, p, xx)

    p = problem.initial_params.copy()
    f0 = model(p, x)
    if not np.all(np.isfinite(f0)):
        raise ValueError("model is not finite at the initial parameters")
    r = y - f0
    cost = float(r @ r)
    history = [cost]
    if cost == 0.0:
        return _result(p, r, True, 0, "exact fit at initial parameters", history)

    lam = opts.damping_init
    J = jac_fn(p, x)
    for it in range(1, opts.max_iter + 1):
        JtJ = J.T @ J
        g = J.T @ r
        diag = np.diag(JtJ).copy()
        floor = 1e-12 * max(diag.max(), 1e-300)
        diag = np.maximum(diag, floor)
        while True:
            A = JtJ + lam * np.diag(diag)
            try:
                step = np.linalg.solve(A, g)
            except np.linalg.LinAlgError:
                step = None
            if step is None or not np.all(np.isfinite(step)):
                lam *= 10.0
                if lam > DAMPING_CAP:
                    return _result(p, r, False, it, "damping cap exceeded (singular system)", history)
                continue
            trial = _bounded_step(p, step, lo, hi)
            actual = trial - p
            f_trial = model(trial, x)
            if not np.all(np.isfinite(f_trial)):
                return _result(p, r, False, it, "non-finite model output", history)
            r_trial = y - f_trial
            cost_trial = float(r_trial @ r_trial)
            step_norm = np.linalg.norm(actual)
            small_step = step_norm <= opts.tol_step * (np.linalg.norm(p) + opts.tol_step)
            if cost_trial <= cost:
                improvement = cost - cost_trial
                p, r = trial, r_trial
                history.append(cost_trial)
                prev_cost, cost = cost, cost_trial
                lam = max(lam / 3.0, 1e-15)
                if cost == 0.0 or improvement <= opts.tol_cost * prev_cost or small_step:
                    return _result(p, r, True, it, "converged", history)
                J = jac_fn(p, x)
                break
            if small_step:
                return _result(p, r, True, it, "converged (step below tolerance)", history)
            lam *= 4.0
            if lam > DAMPING_CAP:
                return _result(p, r, False, it, "damping cap exceeded", history)
    return _result(p, r, False, opts.max_iter, "iteration limit reached", history)
