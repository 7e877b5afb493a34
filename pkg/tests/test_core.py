import numpy as np
import pytest
from hypothesis import given, strategies as st

from hbnple.core import (CountTrace, DegenerateInputError, DomainError, EmitterRecord,
                         G2Histogram, HC_EV_NM, ParameterError, Spectrum, energy_to_wavelength,
                         mean_abs_diff, normalize, rebin_trace, wavelength_to_energy)


def test_wavelength_575_nm():
    assert wavelength_to_energy(575.0) == pytest.approx(2.156, abs=1e-3)


def test_wavelength_hc_constant():
    assert wavelength_to_energy(1239.841984) == pytest.approx(1.0, rel=1e-15)


def test_scan_endpoints():
    # direct division by the hc constant
    assert wavelength_to_energy(530.0) == pytest.approx(HC_EV_NM / 530.0)
    assert wavelength_to_energy(530.0) == pytest.approx(2.3393, abs=1e-4)
    assert wavelength_to_energy(430.0) == pytest.approx(2.8833, abs=1e-4)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_wavelength_domain(bad):
    with pytest.raises(DomainError):
        wavelength_to_energy(bad)


def test_wavelength_array_is_decreasing():
    e = wavelength_to_energy(np.arange(430.0, 531.0))
    assert np.all(np.diff(e) < 0)


@given(st.floats(0.1, 100.0))
def test_energy_roundtrip(e):
    assert wavelength_to_energy(energy_to_wavelength(e)) == pytest.approx(e, rel=1e-12)


def test_normalize_examples():
    s = Spectrum([1, 2, 3], [2, 4, 8])
    np.testing.assert_array_equal(normalize(s).intensities, [0.25, 0.5, 1.0])
    const = normalize(Spectrum([1, 2, 3], [5, 5, 5]))
    np.testing.assert_array_equal(const.intensities, [1, 1, 1])


@given(st.lists(st.floats(0.01, 1e6), min_size=3, max_size=40))
def test_normalize_idempotent(values):
    s = Spectrum(np.arange(len(values)), values)
    once = normalize(s)
    assert once.intensities.max() == 1.0
    np.testing.assert_array_equal(normalize(once).intensities, once.intensities)


@pytest.mark.parametrize("y", [[0, 0, 0], [-1, -2, -3]])
def test_normalize_degenerate(y):
    with pytest.raises(DegenerateInputError):
        normalize(Spectrum([1, 2, 3], y))


@pytest.mark.parametrize("axis, y", [
    ([1, 2], [1, 2]),                  # too short
    ([1, 3, 2], [1, 1, 1]),            # not increasing
    ([1, 2, 3], [1, np.inf, 1]),       # non-finite
    ([1, 2, 3], [1, 2]),               # length mismatch
])
def test_spectrum_invariants(axis, y):
    with pytest.raises(ValueError):
        Spectrum(axis, y)


def test_spectrum_normalized_flag_checked():
    with pytest.raises(ValueError):
        Spectrum([1, 2, 3], [0.1, 0.5, 0.9], normalized=True)


def test_spectrum_is_immutable():
    s = Spectrum([1, 2, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        s.intensities[0] = 5.0


def test_from_wavelength_sorts_to_ascending_energy():
    s = Spectrum.from_wavelength([430, 480, 530], [1.0, 2.0, 3.0])
    assert np.all(np.diff(s.axis) > 0)
    np.testing.assert_array_equal(s.intensities, [3.0, 2.0, 1.0])


def test_rebin_examples():
    tr = CountTrace(0.01, np.arange(1, 51))
    out = rebin_trace(tr, 0.5)
    assert out.counts.tolist() == [sum(range(1, 51))]
    assert out.bin_width == 0.5
    same = rebin_trace(tr, 0.01)
    np.testing.assert_array_equal(same.counts, tr.counts)
    assert len(rebin_trace(CountTrace(0.01, np.ones(103, int)), 0.5)) == 2


def test_rebin_rejects_non_multiple():
    with pytest.raises(ParameterError):
        rebin_trace(CountTrace(0.01, np.ones(10, int)), 0.015)


@given(st.lists(st.integers(0, 10_000), min_size=1, max_size=200), st.integers(1, 20))
def test_rebin_conserves_counts(counts, factor):
    tr = CountTrace(0.01, counts)
    out = rebin_trace(tr, 0.01 * factor)
    kept = (len(counts) // factor) * factor
    assert out.counts.sum() == sum(counts[:kept])


def test_mean_abs_diff_examples():
    assert mean_abs_diff([1, 1, 1, 1]) == 0
    assert mean_abs_diff([0, 1, 0, 1]) == 1
    assert mean_abs_diff([0.0, 0.5, 0.3]) == pytest.approx(0.35)
    with pytest.raises(ParameterError):
        mean_abs_diff([1.0])


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50), st.floats(-1e3, 1e3))
def test_mean_abs_diff_shift_invariant(values, c):
    assert mean_abs_diff(np.add(values, c)) == pytest.approx(mean_abs_diff(values), abs=1e-9)


def test_count_trace_rejects_negative():
    with pytest.raises(ValueError):
        CountTrace(0.01, [1, -1, 2])


def test_g2_histogram_must_be_centred():
    d = np.arange(-10, 11) * 0.2e-9
    G2Histogram(0.2e-9, d, np.ones_like(d))
    with pytest.raises(ValueError):
        G2Histogram(0.2e-9, d + 1e-9, np.ones_like(d))


def test_emitter_record_absent_fields_are_none():
    r = EmitterRecord(id=3)
    assert r.ple is None and r.trace is None and r.optimization_traces == ()
