"""Batch orchestration over datasets: selection, fitting and synthetic spectra."""
from __future__ import annotations

import logging
import os
from pathlib import Path
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from .config import PipelineConfig
from .core import DegenerateInputError, Spectrum, normalize, wavelength_to_energy
from .fitting import TransitionSet, extract_transitions, extract_zpl, fit_candidates, \
    multi_gauss_fit
from .formats import Dataset, ManifestEntry, load_record, write_manifest, write_spectrum
from .peaks import find_peaks
from .qc import SelectionReport, evaluate_emitter
from .simulate import SimEmitter

log = logging.getLogger(__name__)


def worker_count(jobs: int) -> int:
    return jobs if jobs > 0 else (os.cpu_count() or 1)


def parallel_map(fn, items, jobs: int):
    """``map`` that keeps input order; runs in-process for one worker."""
    items = list(items)
    n = min(worker_count(jobs), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * n))))


# --- selection ------------------------------------------------------------

def _qc_one(args) -> SelectionReport:
    dataset, entry, cfg = args
    return evaluate_emitter(load_record(dataset, entry), cfg.qc_config())


def run_qc(dataset: Dataset, cfg: PipelineConfig) -> list:
    return parallel_map(_qc_one, [(dataset, e, cfg) for e in dataset.entries], cfg.jobs)


# --- transitions ----------------------------------------------------------

def transitions_from_ple(ple: Spectrum, cfg: PipelineConfig, emitter_id: int = 0,
                         zpl: Optional[float] = None) -> Optional[TransitionSet]:
    """Normalise, find and vet peaks, fit, keep accepted non-edge centers.

    Returns ``None`` when the fit fails; a spectrum without usable peaks
    gives an empty set.
    """
    try:
        spec = normalize(ple)
    except DegenerateInputError:
        return None
    cands = find_peaks(spec, cfg.peaks.ple_window, cfg.ple_thresholds(), cfg.fit_options())
    used = fit_candidates(cands)
    if not used:
        return TransitionSet(emitter_id, zpl, ())
    fit = multi_gauss_fit(spec, used, cfg.fit_options())
    if not fit.converged:
        return None
    return extract_transitions(fit, cands, emitter_id, zpl)


def _fit_one(args):
    dataset, entry, cfg = args
    record = load_record(dataset, entry, fields=("ple", "pl"))
    if record.ple is None:
        log.warning("emitter %d: no excitation spectrum, skipped", entry.id)
        return None
    if not record.ple.intensities.max() > 0:
        log.warning("emitter %d: excitation spectrum has no positive signal, omitted", entry.id)
        return None
    zpl = entry.zpl_eV
    if zpl is None and record.pl is not None:
        zpl = extract_zpl(record.pl)
    ts = transitions_from_ple(record.ple, cfg, entry.id, zpl)
    if ts is None:
        log.warning("emitter %d: fit failed, omitted", entry.id)
    return ts


def run_fit(dataset: Dataset, cfg: PipelineConfig, selected_ids=None,
            zpl_window: Optional[tuple] = None) -> list:
    """Transition sets for the emitters of a dataset, ordered by id.

    ``selected_ids`` restricts the run (e.g. to emitters that passed
    selection). With ``zpl_window`` emitters whose ZPL is unknown or outside
    ``[lo, hi]`` are dropped.
    """
    entries = [e for e in dataset.entries if selected_ids is None or e.id in selected_ids]
    sets = [s for s in parallel_map(_fit_one, [(dataset, e, cfg) for e in entries], cfg.jobs)
            if s is not None]
    if zpl_window is not None:
        lo, hi = zpl_window
        sets = [s for s in sets if s.zpl_energy is not None and lo <= s.zpl_energy <= hi]
    return sorted(sets, key=lambda s: s.emitter_id)


# --- synthetic spectra ----------------------------------------------------

def ple_grid_nm(lo=430.0, hi=530.0, step=1.0) -> np.ndarray:
    n = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(n)


def synthesize_ple(emitter: SimEmitter, wavelength_nm, line_sigma: float = 0.015,
                   amplitude_decay: float = 0.8, noise: float = 0.0,
                   rng: Optional[np.random.Generator] = None) -> Spectrum:
    """Normalised excitation spectrum with one Gaussian per simulated transition.

    Line ``k`` (in placement order) has amplitude ``amplitude_decay**k``.
    Uniform noise in ``[-noise, noise]`` is added after normalisation.
    """
    energy = np.sort(wavelength_to_energy(np.asarray(wavelength_nm, float)))
    y = np.zeros_like(energy)
    for t, k in zip(emitter.transitions, emitter.placed_order):
        y += amplitude_decay ** k * np.exp(-0.5 * ((energy - t) / line_sigma) ** 2)
    if y.max() > 0:
        y /= y.max()
    if noise > 0:
        rng = rng or np.random.default_rng()
        y = y + rng.uniform(-noise, noise, y.size)
    return Spectrum(energy, y, metadata={"synthetic": True})


def synthesize_dataset(emitters, cfg: PipelineConfig, root) -> list:
    """Write one excitation spectrum per simulated emitter below ``root``.

    Returns the manifest entries (ids start at 1, ZPL stored in the manifest).
    """
    root = Path(root)
    (root / "ple").mkdir(parents=True, exist_ok=True)
    s = cfg.simulate
    grid = ple_grid_nm(*s.wavelength_nm)
    streams = np.random.SeedSequence([cfg.seed, 0x9E3]).spawn(len(emitters))
    entries = []
    for i, (em, ss) in enumerate(zip(emitters, streams), start=1):
        spec = synthesize_ple(em, grid, s.line_sigma, s.amplitude_decay, s.noise,
                              np.random.default_rng(ss))
        rel = f"ple/emitter_{i:05d}.csv"
        write_spectrum(root / rel, spec, as_wavelength=True)
        entries.append(ManifestEntry(i, {"ple": rel}, zpl_eV=em.zpl))
    write_manifest(root, entries, {"source": "simulate", "seed": cfg.seed})
    return entries
