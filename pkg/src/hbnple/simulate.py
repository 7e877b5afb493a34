"""Toy excitation-line ladders: discrete phonon modes, Gaussian jitter, skipped lines.

Each emitter starts at its ZPL. Lines are stacked one mode energy (plus
jitter) above the previous line, whether that line was kept or skipped.
A line is kept with probability ``min(1, 3 / (m + n + 1))`` where ``n`` is
twice the number of lines generated so far and ``m`` counts consecutive
skips (reset to one on placement). Only kept lines inside the experimental
range are recorded.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import ParameterError, wavelength_to_energy

DEFAULT_MODES = ((0.165, 25.0), (0.190, 2.0), (0.100, 2.0))
DEFAULT_RANGE = (2.34, 2.88)
ZPL_WINDOW = (wavelength_to_energy(585.0), wavelength_to_energy(555.0))


@dataclass(frozen=True)
class SimConfig:
    modes: tuple = DEFAULT_MODES
    jitter_sigma: float = 0.017
    range: tuple = DEFAULT_RANGE
    duplication: int = 7
    seed: int = 0
    skip: bool = True

    def __post_init__(self):
        modes = tuple((float(e), float(w)) for e, w in self.modes)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "range", tuple(float(v) for v in self.range))
        if not modes or sum(w for _, w in modes) <= 0 or any(w < 0 for _, w in modes):
            raise ParameterError("mode weights must be non-negative with a positive sum")
        if any(e <= 0 for e, _ in modes):
            raise ParameterError("mode energies must be positive")
        if self.jitter_sigma < 0:
            raise ParameterError("jitter_sigma must be non-negative")
        lo, hi = self.range
        if not lo < hi:
            raise ParameterError("range must satisfy lo < hi")
        if self.duplication < 1:
            raise ParameterError("duplication must be >= 1")

    @property
    def mode_energies(self) -> np.ndarray:
        return np.array([e for e, _ in self.modes])

    @property
    def mode_probabilities(self) -> np.ndarray:
        w = np.array([w for _, w in self.modes])
        return w / w.sum()


@dataclass(frozen=True)
class SimEmitter:
    zpl: float
    transitions: tuple = ()
    generated_count: int = 0
    placed_order: tuple = field(default=(), repr=False)


def placement_probability(m: int, n: int) -> float:
    """``min(1, 3 / (m + n + 1))``."""
    if m < 1:
        raise ParameterError("m must be >= 1")
    if n < 0:
        raise ParameterError("n must be >= 0")
    return min(1.0, 3.0 / (m + n + 1))


def generate_emitter(zpl: float, config: SimConfig, rng: np.random.Generator,
                     placement: Optional[Callable[[int, int], float]] = None) -> SimEmitter:
    """Generate one emitter's ladder.

    ``placement`` overrides :func:`placement_probability`; with
    ``config.skip`` False every line is placed. Generation stops at the first
    candidate above the upper range limit. ``placed_order`` holds, for each
    recorded transition, its rank among all placed lines (0 = first above the
    ZPL), which is what spectrum synthesis uses for amplitude decay.
    """
    lo, hi = config.range
    if not zpl < hi:
        return SimEmitter(zpl=zpl)
    prob = placement or placement_probability
    energies = config.mode_energies
    weights = config.mode_probabilities
    pos = zpl
    m, n, generated, placed = 1, 0, 0, 0
    kept, order = [], []
    while True:
        step = energies[rng.choice(energies.size, p=weights)]
        jitter = rng.normal(0.0, config.jitter_sigma) if config.jitter_sigma > 0 else 0.0
        pos = pos + step + jitter
        generated += 1
        if pos > hi:
            break
        if not config.skip or rng.random() < prob(m, n):
            if lo <= pos:
                kept.append(pos)
                order.append(placed)
            placed += 1
            m = 1
        else:
            m += 1
        n = 2 * generated
    # jitter can push a line below its predecessor; keep the invariant
    idx = np.argsort(kept, kind="stable")
    return SimEmitter(zpl=zpl, transitions=tuple(float(kept[i]) for i in idx),
                      generated_count=generated,
                      placed_order=tuple(int(order[i]) for i in idx))


def synthetic_zpls(count: int = 152, seed: int = 0, window=ZPL_WINDOW) -> np.ndarray:
    """Uniform ZPL energies when no measured list is available."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5A11]))
    return rng.uniform(window[0], window[1], count)


def generate_dataset(zpls: Sequence[float], config: SimConfig) -> list:
    """Replicate the ZPL list ``config.duplication`` times and simulate each entry.

    Emitter ``i`` draws from its own stream spawned from ``config.seed``, so
    the output does not depend on evaluation order.
    """
    zpls = [float(z) for z in zpls]
    if not zpls:
        raise ValueError("need at least one ZPL")
    full = zpls * config.duplication
    streams = np.random.SeedSequence(config.seed).spawn(len(full))
    return [generate_emitter(z, config, np.random.default_rng(ss)) for z, ss in zip(full, streams)]
