import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hbnple.core import ParameterError, Spectrum, normalize
from hbnple.peaks import (PL_THRESHOLDS, PLE_THRESHOLDS, PLE_WINDOW, PeakCandidate,
                          find_minima, find_peaks, preselect_peaks, vet_peak)

from conftest import ple_grid, synth_spectrum


def brute_maxima(y, w):
    """Direct loop over the strict-maximum rule, truncated at the ends."""
    out = []
    for i in range(len(y)):
        lo, hi = max(0, i - w), min(len(y), i + w + 1)
        others = [y[j] for j in range(lo, hi) if j != i]
        if all(y[i] > v for v in others):
            out.append((i, i - w < 0 or i + w > len(y) - 1))
    return out


def test_triangle_peak():
    x = np.arange(101.0)
    y = 1.0 - np.abs(x - 50) / 60.0
    cands = preselect_peaks(normalize(Spectrum(x, y)), 8)
    assert [(c.index, c.is_edge) for c in cands] == [(50, False)]


def test_monotone_gives_edge_candidate():
    x = np.arange(30.0)
    cands = preselect_peaks(Spectrum(x, x + 1.0), 8)
    assert [(c.index, c.is_edge) for c in cands] == [(29, True)]


def test_two_gaussians_on_scan_grid():
    spec = normalize(synth_spectrum([(1.0, 2.4, 0.02), (0.8, 2.6, 0.02)]))
    x = spec.axis
    cands = preselect_peaks(spec, PLE_WINDOW)
    expected = sorted(int(np.argmin(np.abs(x - mu))) for mu in (2.4, 2.6))
    assert [c.index for c in cands] == expected
    assert not any(c.is_edge for c in cands)
    # one interior minimum between the peaks
    inner = [i for i in find_minima(spec, PLE_WINDOW) if expected[0] < i < expected[1]]
    assert len(inner) == 1


def test_minima_examples():
    x = np.arange(21.0)
    assert find_minima(Spectrum(x, np.abs(x - 10)), 5) == [10]
    assert find_minima(Spectrum(x, np.ones(21)), 5) == []
    assert preselect_peaks(Spectrum(x, np.ones(21)), 5) == []


def test_window_errors():
    s = Spectrum(np.arange(10.0), np.arange(10.0))
    with pytest.raises(ParameterError):
        preselect_peaks(s, 10)
    with pytest.raises(ParameterError):
        preselect_peaks(s, 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=5, max_size=60), st.integers(1, 4))
def test_preselect_matches_brute_force(values, w):
    if w >= len(values):
        w = len(values) - 1
    y = np.array(values, float)
    s = Spectrum(np.arange(y.size, dtype=float), y)
    got = [(c.index, c.is_edge) for c in preselect_peaks(s, w)]
    assert got == brute_maxima(y, w)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=20, max_size=60), st.floats(0.01, 1e4))
def test_preselect_scale_invariant(values, c):
    y = np.array(values) + 0.01
    x = np.arange(y.size, dtype=float)
    a = preselect_peaks(normalize(Spectrum(x, y)), 3)
    b = preselect_peaks(normalize(Spectrum(x, c * y)), 3)
    assert [p.index for p in a] == [p.index for p in b]


def test_est_width_from_minima():
    x = np.arange(41.0)
    y = np.array([abs(((i + 10) % 20) - 10) for i in range(41)], float)   # peaks at 10, 30
    cands = preselect_peaks(Spectrum(x, y), 4)
    c10 = [c for c in cands if c.index == 10][0]
    assert (c10.left_min, c10.right_min) == (0, 20)
    assert c10.est_width == pytest.approx(10.0)
    assert c10.initial_sigma == pytest.approx(10.0 / 2.355)


def test_vet_accepts_clean_peak():
    spec = synth_spectrum([(0.5, 2.6, 0.02)])
    cand = [c for c in preselect_peaks(spec, 8) if not c.is_edge][0]
    out = vet_peak(spec, cand, 8, PLE_THRESHOLDS)
    assert out.accepted and out.vet_residual_max < 1e-6
    assert out.local_fit.amplitude == pytest.approx(0.5, rel=1e-6)


def test_vet_rejects_small_peak():
    spec = synth_spectrum([(0.05, 2.6, 0.02)])
    cand = [c for c in preselect_peaks(spec, 8) if not c.is_edge][0]
    out = vet_peak(spec, cand, 8, PLE_THRESHOLDS)
    assert not out.accepted
    assert out.local_fit.amplitude <= PLE_THRESHOLDS.min_height


def test_vet_rejects_noise_plateau():
    # seeded white noise on a plateau; the local fit leaves a residual of ~0.2
    rng = np.random.default_rng(1)
    x = np.linspace(2.4, 2.8, 41)
    spec = Spectrum(x, 0.6 + rng.uniform(-0.2, 0.2, 41))
    cand = [c for c in preselect_peaks(spec, 8) if not c.is_edge][0]
    out = vet_peak(spec, cand, 8, PLE_THRESHOLDS)
    assert out.vet_residual_max == pytest.approx(0.2, abs=0.01)
    assert out.local_fit.amplitude > PLE_THRESHOLDS.min_height
    assert not out.accepted


def test_edge_candidate_never_accepted():
    x = np.arange(30.0)
    spec = normalize(Spectrum(x, np.exp(-0.5 * ((x - 29) / 4) ** 2)))
    c = preselect_peaks(spec, 8)[0]
    assert c.is_edge
    assert not vet_peak(spec, c, 8).accepted


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_separated_gaussians_all_accepted(k, seed):
    rng = np.random.default_rng(seed)
    x = ple_grid()
    # interior range (clear of the edge windows), spacing larger than window * grid step (~0.11 eV) and 3 sigma
    centers = 2.43 + 0.12 * np.arange(k) + rng.uniform(0, 0.02, k)
    comps = [(rng.uniform(0.2, 1.0), mu, rng.uniform(0.01, 0.025)) for mu in centers]
    spec = normalize(synth_spectrum(comps))
    acc = [c for c in find_peaks(spec) if c.accepted and not c.is_edge]
    assert len(acc) == k
    step = np.diff(x).max()
    for c, mu in zip(acc, centers):
        assert abs(c.position - mu) <= step
    idx = [c.index for c in acc]
    assert all(b - a > PLE_WINDOW for a, b in zip(idx, idx[1:]))


def test_candidate_defaults():
    c = PeakCandidate(3, 2.5, 0.7, 0.05, False)
    assert not c.accepted and c.vet_residual_max is None
