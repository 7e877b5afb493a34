import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hbnple.core import CountTrace, Spectrum
from hbnple.fitting import TransitionSet
from hbnple.formats import (InputError, format_transitions, load_manifest, load_record,
                            parse_transitions, read_g2, read_grid, read_sidecar,
                            read_spectrum, read_trace, write_g2, write_grid, write_spectrum,
                            write_trace)
from hbnple.qc import evaluate_emitter

from dataset import write_dataset
from records import g2_hist, make_record


def test_spectrum_wavelength_roundtrip(tmp_path):
    nm = np.arange(430.0, 531.0)
    s = Spectrum.from_wavelength(nm, np.linspace(0, 1, nm.size))
    write_spectrum(tmp_path / "s.csv", s, as_wavelength=True)
    assert (tmp_path / "s.csv").read_text().startswith("wavelength_nm,intensity\n430.0000,")
    back = read_spectrum(tmp_path / "s.csv")
    np.testing.assert_allclose(back.axis, s.axis, rtol=1e-9)
    np.testing.assert_allclose(back.intensities, s.intensities, atol=1e-6)


def test_spectrum_energy_and_other_units(tmp_path):
    (tmp_path / "e.csv").write_text("energy_eV,intensity\n2.5,1\n2.4,2\n2.6,3\n")
    s = read_spectrum(tmp_path / "e.csv")
    assert s.unit == "eV" and s.axis.tolist() == [2.4, 2.5, 2.6]
    (tmp_path / "p.csv").write_text("power_uW,intensity\n1,10\n2,20\n3,25\n")
    assert read_spectrum(tmp_path / "p.csv").unit == "uW"


@pytest.mark.parametrize("text", ["", "energy_eV,intensity\n", "a,b,c\n1,2,3\n",
                                  "energy_eV,intensity\n1,x\n2,3\n3,4\n",
                                  "energy_eV,intensity\n1,2\n1,3\n2,4\n"])
def test_bad_spectra(tmp_path, text):
    (tmp_path / "bad.csv").write_text(text)
    with pytest.raises(InputError):
        read_spectrum(tmp_path / "bad.csv")


def test_trace_and_g2_roundtrip(tmp_path):
    tr = CountTrace(0.01, np.arange(100))
    write_trace(tmp_path / "t.csv", tr)
    back = read_trace(tmp_path / "t.csv")
    assert back.bin_width == 0.01 and np.array_equal(back.counts, tr.counts)
    g = g2_hist(30.0)
    write_g2(tmp_path / "g.csv", g)
    gb = read_g2(tmp_path / "g.csv")
    np.testing.assert_allclose(gb.delays, g.delays, rtol=1e-6)
    np.testing.assert_array_equal(gb.coincidences, g.coincidences)


def test_grid_io(tmp_path):
    grid = np.arange(12.0).reshape(3, 4)
    write_grid(tmp_path / "g.csv", grid)
    np.testing.assert_array_equal(read_grid(tmp_path / "g.csv"), grid)
    (tmp_path / "r.csv").write_text("1,2,3\n4,5\n")
    with pytest.raises(InputError):
        read_grid(tmp_path / "r.csv")
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(InputError):
        read_grid(tmp_path / "e.csv")
    with pytest.raises(InputError):
        read_grid(tmp_path / "missing.csv")
    assert read_sidecar(tmp_path / "g.csv") == {}
    (tmp_path / "g.json").write_text('{"pixel_size_nm": 3.9}')
    assert read_sidecar(tmp_path / "g.csv") == {"pixel_size_nm": 3.9}


transition_sets = st.lists(
    st.tuples(st.one_of(st.none(), st.floats(2.0, 2.3)),
              st.lists(st.floats(2.3, 2.9), max_size=6)),
    max_size=10)


@settings(max_examples=50)
@given(transition_sets)
def test_transitions_rewrite_is_byte_identical(rows):
    sets = [TransitionSet(i, z, tuple(t)) for i, (z, t) in enumerate(rows)]
    text = format_transitions(sets)
    parsed, skipped = parse_transitions(text)
    assert skipped == 0
    assert format_transitions(parsed) == text


def test_transitions_skip_malformed():
    text = ("emitter_id,zpl_eV,transitions_eV\n1,2.1,2.5;2.6\nx,2.1,2.5\n2,,\n"
            "3,2.1,2.5;abc\n1,2.0,2.4\n4,2.2\n")
    sets, skipped = parse_transitions(text)
    assert [s.emitter_id for s in sets] == [1, 2]
    assert sets[1].zpl_energy is None and sets[1].transitions == ()
    assert skipped == 4
    with pytest.raises(InputError):
        parse_transitions("id,zpl\n1,2\n")


def test_dataset_roundtrip(tmp_path):
    recs = [make_record(2), make_record(1, ple=None)]
    root = write_dataset(tmp_path / "ds", recs)
    ds = load_manifest(root)
    assert [e.id for e in ds.entries] == [1, 2]
    r1 = load_record(ds, ds.entries[0])
    assert r1.ple is None and r1.trace is not None and len(r1.optimization_traces) == 2
    # the reloaded record is judged like the in-memory one
    for e, rec in zip(ds.entries, sorted(recs, key=lambda r: r.id)):
        assert evaluate_emitter(load_record(ds, e)).passed == evaluate_emitter(rec).passed


def test_missing_file_becomes_absent(tmp_path):
    root = write_dataset(tmp_path / "ds", [make_record(1)])
    (root / "e0001_g2.csv").unlink()
    ds = load_manifest(root)
    assert load_record(ds, ds.entries[0]).g2 is None


def test_manifest_errors(tmp_path):
    with pytest.raises(InputError):
        load_manifest(tmp_path)
    (tmp_path / "manifest.json").write_text(json.dumps({"emitters": [{"id": 1}, {"id": 1}]}))
    with pytest.raises(InputError):
        load_manifest(tmp_path)
