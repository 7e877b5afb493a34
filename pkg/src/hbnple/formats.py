"""Flat-file formats.

* Spectra: two-column CSV with a header naming the axis unit, one of
  ``wavelength_nm``, ``energy_eV`` (fitted data) or any ``<name>_<unit>``
  for other axes (e.g. ``power_uW`` for saturation curves).
* Count traces: ``time_s,counts``; optimisation sweeps: ``position_um,counts``.
* g2 histograms: ``delay_s,coincidences``.
* Scans and height maps: header-less, row-major numeric CSV grids.
* Transitions: ``emitter_id,zpl_eV,transitions_eV`` with the transitions
  joined by ``;`` and an empty ``zpl_eV`` when unknown.
* Datasets: a directory holding ``manifest.json`` plus per-emitter files,
  paths relative to the directory.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import CountTrace, EmitterRecord, G2Histogram, Spectrum
from .fitting import TransitionSet

log = logging.getLogger(__name__)

TRANSITIONS_HEADER = ("emitter_id", "zpl_eV", "transitions_eV")
MANIFEST = "manifest.json"


class InputError(ValueError):
    """Unreadable or malformed input file."""


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _read_columns(path, expected: Optional[tuple] = None):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if len(rows) < 2:
        raise InputError(f"{path}: no data rows")
    header = tuple(h.strip() for h in rows[0])
    if len(header) != 2 or (expected and header != expected):
        raise InputError(f"{path}: unexpected header {header}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric value ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != 2:
        raise InputError(f"{path}: every row needs two values")
    return header, data[:, 0], data[:, 1]


def _write_columns(path, header, a, b, fmt_a="{:.6f}", fmt_b="{:.6g}"):
    lines = [",".join(header)]
    lines += [f"{fmt_a.format(x)},{fmt_b.format(y)}" for x, y in zip(a, b)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_spectrum(path) -> Spectrum:
    """Spectra with a wavelength axis come back on an ascending eV axis."""
    header, x, y = _read_columns(path)
    axis_name = header[0]
    meta = {"source": str(path)}
    try:
        if axis_name == "wavelength_nm":
            return Spectrum.from_wavelength(x, y, metadata=meta)
        unit = axis_name.rsplit("_", 1)[-1] if "_" in axis_name else axis_name
        order = np.argsort(x)
        return Spectrum(x[order], y[order], unit=unit, metadata=meta)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_spectrum(path, spectrum: Spectrum, as_wavelength: bool = False):
    if as_wavelength:
        nm = 1239.841984 / spectrum.axis
        order = np.argsort(nm)
        _write_columns(path, ("wavelength_nm", "intensity"), nm[order],
                       spectrum.intensities[order], fmt_a="{:.4f}")
    else:
        name = "energy_eV" if spectrum.unit == "eV" else f"axis_{spectrum.unit}"
        _write_columns(path, (name, "intensity"), spectrum.axis, spectrum.intensities)


def _step(x, path) -> float:
    if x.size < 2:
        raise InputError(f"{path}: need at least two rows to infer the bin width")
    return float(np.round(x[1] - x[0], 12))


def read_trace(path) -> CountTrace:
    _, t, c = _read_columns(path, ("time_s", "counts"))
    try:
        return CountTrace(_step(t, path), np.rint(c).astype(np.int64))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_trace(path, trace: CountTrace):
    t = np.arange(len(trace)) * trace.bin_width
    _write_columns(path, ("time_s", "counts"), t, trace.counts, fmt_a="{:.6f}", fmt_b="{:d}")


def read_sweep(path) -> CountTrace:
    """Optimisation sweep; the position step stands in for the bin width."""
    _, x, c = _read_columns(path, ("position_um", "counts"))
    try:
        return CountTrace(abs(_step(x, path)) or 1.0, np.rint(c).astype(np.int64))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_sweep(path, trace: CountTrace):
    x = np.arange(len(trace)) * trace.bin_width
    _write_columns(path, ("position_um", "counts"), x, trace.counts, fmt_b="{:d}")


def read_g2(path) -> G2Histogram:
    _, d, c = _read_columns(path, ("delay_s", "coincidences"))
    try:
        return G2Histogram(_step(d, path), d, c)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_g2(path, g2: G2Histogram):
    _write_columns(path, ("delay_s", "coincidences"), g2.delays, g2.coincidences,
                   fmt_a="{:.6e}", fmt_b="{:.6g}")


def read_grid(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise InputError(f"{path}: empty grid")
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: ragged grid")
    try:
        grid = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric value ({exc})") from exc
    if not np.all(np.isfinite(grid)):
        raise InputError(f"{path}: non-finite value")
    return grid


def write_grid(path, grid):
    lines = [",".join(f"{v:.6g}" for v in row) for row in np.asarray(grid)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_sidecar(path) -> dict:
    """``<grid>.json`` next to a grid file, or an empty dict."""
    side = Path(path).with_suffix(".json")
    if not side.exists():
        return {}
    try:
        return json.loads(side.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{side}: {exc}") from exc


def format_transitions(sets) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRANSITIONS_HEADER)
    for s in sorted(sets, key=lambda s: s.emitter_id):
        zpl = "" if s.zpl_energy is None else _fmt(s.zpl_energy)
        w.writerow([s.emitter_id, zpl, ";".join(_fmt(t) for t in s.transitions)])
    return out.getvalue()


def write_transitions(path, sets):
    Path(path).write_text(format_transitions(sets))


def parse_transitions(text: str, source: str = "<string>"):
    """Parse a transitions CSV. Returns ``(sets, skipped_rows)``."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != TRANSITIONS_HEADER:
        raise InputError(f"{source}: expected header {','.join(TRANSITIONS_HEADER)}")
    sets, skipped, seen = [], 0, set()
    for row in reader:
        if not row:
            continue
        try:
            if len(row) != 3:
                raise ValueError("wrong field count")
            eid = int(row[0])
            if eid in seen:
                raise ValueError("duplicate id")
            zpl = float(row[1]) if row[1].strip() else None
            ts = tuple(float(v) for v in row[2].split(";") if v.strip())
            if not all(np.isfinite(ts)) or (zpl is not None and not np.isfinite(zpl)):
                raise ValueError("non-finite value")
        except ValueError:
            skipped += 1
            continue
        seen.add(eid)
        sets.append(TransitionSet(eid, zpl, ts))
    if skipped:
        log.warning("%s: skipped %d malformed rows", source, skipped)
    return sets, skipped


def read_transitions(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return parse_transitions(text, str(path))


# --- datasets -------------------------------------------------------------

@dataclass
class ManifestEntry:
    id: int
    files: dict = field(default_factory=dict)
    scan_position_um: Optional[tuple] = None
    zpl_eV: Optional[float] = None


@dataclass
class Dataset:
    root: Path
    entries: list
    provenance: dict = field(default_factory=dict)

    def path(self, rel) -> Path:
        return self.root / rel


_FILE_KEYS = ("ple", "pl", "trace", "g2", "saturation")


def load_manifest(root) -> Dataset:
    root = Path(root)
    mpath = root / MANIFEST
    try:
        raw = json.loads(mpath.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read manifest {mpath}: {exc}") from exc
    entries, seen = [], set()
    for item in raw.get("emitters", []):
        try:
            eid = int(item["id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{mpath}: emitter without a valid id") from exc
        if eid in seen:
            raise InputError(f"{mpath}: duplicate emitter id {eid}")
        seen.add(eid)
        files = {k: item[k] for k in _FILE_KEYS if item.get(k)}
        if item.get("opt"):
            files["opt"] = list(item["opt"])
        pos = item.get("scan_position_um")
        zpl = item.get("zpl_eV")
        entries.append(ManifestEntry(eid, files, tuple(pos) if pos else None,
                                     float(zpl) if zpl is not None else None))
    entries.sort(key=lambda e: e.id)
    return Dataset(root, entries, raw.get("provenance", {}))


def write_manifest(root, entries, provenance=None):
    items = []
    for e in sorted(entries, key=lambda e: e.id):
        item = {"id": e.id}
        if e.scan_position_um is not None:
            item["scan_position_um"] = list(e.scan_position_um)
        if e.zpl_eV is not None:
            item["zpl_eV"] = round(e.zpl_eV, 9)
        item.update(e.files)
        items.append(item)
    doc = {"provenance": provenance or {}, "emitters": items}
    (Path(root) / MANIFEST).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


_READERS = {"ple": read_spectrum, "pl": read_spectrum, "trace": read_trace, "g2": read_g2,
            "saturation": read_spectrum}


def load_record(dataset: Dataset, entry: ManifestEntry, fields=None) -> EmitterRecord:
    """Build an :class:`EmitterRecord`; unreadable files become absent fields."""
    kwargs = {}
    for key, rel in entry.files.items():
        if fields is not None and key not in fields:
            continue
        if key == "opt":
            try:
                kwargs["optimization_traces"] = tuple(read_sweep(dataset.path(p)) for p in rel)
            except InputError as exc:
                log.warning("emitter %d: %s", entry.id, exc)
            continue
        try:
            kwargs[key] = _READERS[key](dataset.path(rel))
        except InputError as exc:
            log.warning("emitter %d: %s", entry.id, exc)
    return EmitterRecord(id=entry.id, scan_position=entry.scan_position_um, **kwargs)
