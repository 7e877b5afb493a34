"""Command-line frontend.

    hbnple [global flags] <command> [args]

Commands: detect, qc, fit, correlate, simulate, afm. Global flags
(``--config``, ``--seed``, ``--jobs``, ``--out``, ``--set``) may be given
before or after the command. Exit codes: 0 success, 1 input error,
2 configuration error. Logs go to standard error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .afm import HeightMap, aggregate_stats, correct_tilt, flake_stats, segment_flakes
from .config import ConfigError, PipelineConfig, build_config
from .core import DegenerateInputError
from .correlation import DensityPeakWarning, build_heatmap, fit_density_peaks, \
    spacing_density, zpl_distance_density
from .fitting import TransitionSet
from .formats import InputError, load_manifest, read_grid, \
    read_sidecar, read_transitions, write_transitions
from .pipeline import run_fit, run_qc, synthesize_dataset
from .qc import ScanImage, detect_emitters
from .simulate import generate_dataset, synthetic_zpls

log = logging.getLogger("hbnple")

QC_COLUMNS = ("emitter_id", "passed", "failed_stage", "bleached", "mean_count_rate",
              "stability_metric", "stability", "g2_zero", "g2", "fit_max_residual",
              "fit_quality")


def _num(x) -> str:
    return "" if x is None else f"{x:.6g}"


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- detect ---------------------------------------------------------------

def cmd_detect(args, cfg: PipelineConfig) -> int:
    grid = read_grid(args.scan)
    step = read_sidecar(args.scan).get("step_um", cfg.qc.scan_step_um)
    try:
        scan = ScanImage(grid, step=float(step))
    except ValueError as exc:
        raise InputError(f"{args.scan}: {exc}") from exc
    spots = detect_emitters(scan, cfg.qc_config())
    doc = [{"id": i, "x_um": round(s.centroid[0], 6), "y_um": round(s.centroid[1], 6),
            "pixel_count": s.pixel_count, "peak_brightness": round(s.peak_brightness, 6)}
           for i, s in enumerate(spots, start=1)]
    text = json.dumps(doc, indent=1) + "\n"
    if args.out:
        (_out_dir(args) / "spots.json").write_text(text)
    else:
        sys.stdout.write(text)
    log.info("%d spots", len(doc))
    return 0


# --- qc -------------------------------------------------------------------

def format_qc_report(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(QC_COLUMNS)
    for r in sorted(reports, key=lambda r: r.emitter_id):
        bleached = "" if r.bleached is None else str(r.bleached).lower()
        w.writerow([r.emitter_id, str(r.passed).lower(), r.failed_stage or "", bleached,
                    _num(r.mean_count_rate), _num(r.stability_metric), r.stability.value,
                    _num(r.g2_zero), r.g2.value, _num(r.fit_max_residual), r.fit_quality.value])
    return buf.getvalue()


def read_passed_ids(path) -> set:
    try:
        rows = list(csv.DictReader(io.StringIO(Path(path).read_text())))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        return {int(r["emitter_id"]) for r in rows if r["passed"] == "true"}
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: not a selection report") from exc


def cmd_qc(args, cfg: PipelineConfig) -> int:
    dataset = load_manifest(args.dataset)
    reports = run_qc(dataset, cfg)
    (_out_dir(args) / "qc_report.csv").write_text(format_qc_report(reports))
    bleached = sum(r.bleached is True for r in reports)
    passed = sum(r.passed for r in reports)
    print(f"measured {len(reports)} / bleached {bleached} / passed {passed}", file=sys.stderr)
    return 0


# --- fit ------------------------------------------------------------------

def cmd_fit(args, cfg: PipelineConfig) -> int:
    dataset = load_manifest(args.dataset)
    selected = read_passed_ids(args.qc_report) if args.qc_report else None
    window = None
    if args.zpl_window is not None:
        window = tuple(args.zpl_window) if args.zpl_window else tuple(cfg.correlation.zpl_window)
        if not window[0] < window[1]:
            raise ConfigError("--zpl-window needs LO < HI")
    sets = run_fit(dataset, cfg, selected, window)
    write_transitions(_out_dir(args) / "transitions.csv", sets)
    log.info("%d emitters written", len(sets))
    return 0


# --- correlate ------------------------------------------------------------

def _write_density(path, density):
    lines = ["center_eV,value"]
    lines += [f"{c:.6f},{v:.6g}" for c, v in zip(density.centers, density.values)]
    Path(path).write_text("\n".join(lines) + "\n")


def _write_heatmap(path, hm):
    lines = ["slice_eV\\density_eV," + ",".join(f"{c:.6f}" for c in hm.density_centers)]
    for c, row in zip(hm.slice_centers, hm.matrix):
        lines.append(f"{c:.6f}," + ",".join(f"{v:.6g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_correlate(args, cfg: PipelineConfig) -> int:
    sets, skipped = read_transitions(args.transitions)
    if skipped:
        print(f"skipped {skipped} malformed rows", file=sys.stderr)
    c = cfg.correlation
    out = _out_dir(args)
    density = spacing_density(sets, c.density_width, c.density_step, c.max_detuning)
    _write_density(out / "density.csv", density)
    _write_heatmap(out / "heatmap.csv",
                   build_heatmap(sets, c.slice_width, c.density_width, c.slice_step,
                                 c.density_step, c.max_detuning, c.normalize_rows))
    if args.from_zpl:
        zd = zpl_distance_density(sets, c.density_width, c.density_step, c.max_detuning)
        _write_density(out / "zpl_density.csv", zd)
    if args.peaks:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DensityPeakWarning)
            try:
                comps = fit_density_peaks(density, c.expected_peaks, cfg.peaks.ple_window,
                                          cfg.ple_thresholds())
            except DegenerateInputError:
                comps = []
                log.warning("density is empty, no peaks fitted")
        for wmsg in caught:
            log.warning("%s", wmsg.message)
        doc = [{"center_eV": round(p.center, 6), "sigma_eV": round(p.sigma, 6),
                "amplitude": round(p.amplitude, 6)} for p in comps]
        (out / "density_peaks.json").write_text(json.dumps(doc, indent=1) + "\n")
    return 0


# --- simulate -------------------------------------------------------------

def read_zpl_list(path) -> list:
    """ZPLs from a transitions CSV (``zpl_eV`` column) or one energy per line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if text.startswith("emitter_id"):
        sets, _ = read_transitions(path)
        zpls = [s.zpl_energy for s in sets if s.zpl_energy is not None]
    else:
        try:
            zpls = [float(line) for line in text.split() if line.strip()]
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from exc
    if not zpls or not np.all(np.isfinite(zpls)):
        raise InputError(f"{path}: no usable ZPL energies")
    return zpls


def cmd_simulate(args, cfg: PipelineConfig) -> int:
    s = cfg.simulate
    zpls = read_zpl_list(args.zpls) if args.zpls else \
        synthetic_zpls(s.zpl_count, cfg.seed, tuple(s.zpl_window))
    emitters = generate_dataset(zpls, cfg.sim_config())
    out = _out_dir(args)
    sets = [TransitionSet(i, e.zpl, e.transitions) for i, e in enumerate(emitters, start=1)]
    write_transitions(out / "transitions.csv", sets)
    if args.spectra:
        synthesize_dataset(emitters, cfg, out / "dataset")
    log.info("%d emitters simulated", len(emitters))
    return 0


# --- afm ------------------------------------------------------------------

def cmd_afm(args, cfg: PipelineConfig) -> int:
    grid = read_grid(args.heightmap)
    a = cfg.afm
    pixel_size = float(read_sidecar(args.heightmap).get("pixel_size_nm", a.pixel_size_nm))
    try:
        hmap = HeightMap(grid, pixel_size)
        if a.correct_tilt:
            hmap = correct_tilt(hmap)
    except ValueError as exc:
        raise InputError(f"{args.heightmap}: {exc}") from exc
    stats = [flake_stats(hmap, f, a.layer_thickness_nm)
             for f in segment_flakes(hmap, a.threshold_nm)]
    out = _out_dir(args)
    lines = ["flake_id,pixel_count,mean_height_nm,area_nm2,equiv_diameter_nm,layers"]
    lines += [f"{i},{f.pixel_count},{f.mean_height:.6g},{f.area:.6g},{f.equiv_diameter:.6g},"
              f"{f.layers:.6g}" for i, f in enumerate(stats, start=1)]
    (out / "flakes.csv").write_text("\n".join(lines) + "\n")
    summary = aggregate_stats(stats) if stats else {"count": 0}
    summary = {k: (round(v, 9) if isinstance(v, float) else v) for k, v in summary.items()}
    summary.update(pixel_size_nm=pixel_size, threshold_nm=a.threshold_nm,
                   tilt_corrected=a.correct_tilt)
    (out / "afm_summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    log.info("%d flakes", len(stats))
    return 0


# --- argument parsing -----------------------------------------------------

def _global_flags(parser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    g = parser.add_argument_group("global options")
    g.add_argument("--config", metavar="PATH", default=d, help="JSON config file")
    g.add_argument("--seed", type=int, default=d)
    g.add_argument("--jobs", type=int, default=d, help="worker processes (0 = one per CPU)")
    g.add_argument("--out", metavar="DIR", default=d, help="output directory")
    g.add_argument("--set", dest="overrides", action="append", metavar="SECTION.KEY=VALUE",
                   default=d, help="override one config value (repeatable)")
    g.add_argument("-v", "--verbose", action="store_true", default=d)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hbnple", description=__doc__.split("\n")[0])
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        _global_flags(sp, suppress=True)
        sp.set_defaults(func=func)
        return sp

    sp = add("detect", cmd_detect, "find emitters in a confocal scan grid")
    sp.add_argument("scan", help="row-major CSV grid (optional <scan>.json with step_um)")

    sp = add("qc", cmd_qc, "run the selection chain over a dataset")
    sp.add_argument("dataset", help="directory holding manifest.json")

    sp = add("fit", cmd_fit, "fit excitation spectra and write transitions")
    sp.add_argument("dataset")
    sp.add_argument("--qc-report", metavar="CSV", help="only fit emitters that passed")
    sp.add_argument("--zpl-window", nargs="*", type=float, metavar=("LO", "HI"),
                    help="keep emitters with ZPL in [LO, HI] eV (default window if no values)")

    sp = add("correlate", cmd_correlate, "spacing densities and heatmap")
    sp.add_argument("transitions")
    sp.add_argument("--from-zpl", action="store_true", help="also write the ZPL-distance density")
    sp.add_argument("--peaks", action="store_true", help="fit Gaussians to the density maxima")

    sp = add("simulate", cmd_simulate, "simulate transition ladders")
    sp.add_argument("--zpls", metavar="FILE", help="measured ZPLs (default: uniform synthetic)")
    sp.add_argument("--spectra", action="store_true", help="also write synthetic PLE spectra")
    sp.add_argument("--noise", type=float, help="uniform noise amplitude for --spectra")
    sp.add_argument("--duplication", type=int)

    sp = add("afm", cmd_afm, "flake statistics from an AFM height map")
    sp.add_argument("heightmap", help="row-major CSV grid in nm (optional <map>.json)")
    sp.add_argument("--pixel-size", type=float, metavar="NM")
    sp.add_argument("--threshold", type=float, metavar="NM")
    sp.add_argument("--no-tilt", action="store_true", help="skip tilt correction")
    return p


def _section_flags(args) -> dict:
    flags = {}
    sim = {k: v for k, v in (("noise", getattr(args, "noise", None)),
                             ("duplication", getattr(args, "duplication", None)))
           if v is not None}
    if sim:
        flags["simulate"] = sim
    afm = {}
    if getattr(args, "pixel_size", None) is not None:
        afm["pixel_size_nm"] = args.pixel_size
    if getattr(args, "threshold", None) is not None:
        afm["threshold_nm"] = args.threshold
    if getattr(args, "no_tilt", False):
        afm["correct_tilt"] = False
    if afm:
        flags["afm"] = afm
    return flags


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        level=logging.DEBUG if args.verbose else logging.WARNING, force=True)
    try:
        cfg = build_config(args.config, args.overrides or (), seed=args.seed, jobs=args.jobs,
                           **_section_flags(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InputError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
