"""Pipeline configuration: defaults, JSON config files and ``section.key=value`` overrides.

Precedence is flag > config file > default. Unknown sections or keys are
rejected, and every section is validated before any computation starts.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import lsq
from .afm import HEIGHT_THRESHOLD_NM, LAYER_THICKNESS_NM
from .correlation import DENSITY_STEP, DENSITY_WIDTH, MAX_DETUNING, SLICE_STEP, SLICE_WIDTH
from .peaks import PL_THRESHOLDS, PL_WINDOW, PLE_THRESHOLDS, PLE_WINDOW, VetThresholds
from .qc import QCConfig
from .simulate import DEFAULT_MODES, DEFAULT_RANGE, ZPL_WINDOW, SimConfig


class ConfigError(ValueError):
    pass


@dataclass
class PeaksSection:
    ple_window: int = PLE_WINDOW
    pl_window: int = PL_WINDOW
    ple_residual_max: float = PLE_THRESHOLDS.residual_max
    ple_min_height: float = PLE_THRESHOLDS.min_height
    pl_residual_max: float = PL_THRESHOLDS.residual_max
    pl_min_height: float = PL_THRESHOLDS.min_height

    def validate(self):
        if self.ple_window < 1 or self.pl_window < 1:
            raise ConfigError("peak windows must be >= 1")
        for name in ("ple_residual_max", "ple_min_height", "pl_residual_max", "pl_min_height"):
            if getattr(self, name) < 0:
                raise ConfigError(f"peaks.{name} must be non-negative")


@dataclass
class FitSection:
    max_iter: int = 200
    tol_cost: float = 1e-10
    tol_step: float = 1e-10
    damping_init: float = 1e-3

    def validate(self):
        if self.max_iter < 1:
            raise ConfigError("fit.max_iter must be >= 1")
        if self.tol_cost <= 0 or self.tol_step <= 0 or self.damping_init <= 0:
            raise ConfigError("fit tolerances and damping must be positive")


@dataclass
class QCSection:
    scan_step_um: float = 0.1
    brightness_ratio: float = 4.0
    neighbour_offset: int = 6
    median_size: int = 3
    bleach_ratio: float = 3.5
    stability_bin_s: float = 0.5
    min_count_rate: float = 8000.0
    max_stability: float = 0.1
    rep_period_s: float = 12.5e-9
    side_peaks: int = 3
    max_g2: float = 0.5
    max_fit_residual: float = 0.26

    def validate(self):
        positive = ("scan_step_um", "brightness_ratio", "bleach_ratio", "stability_bin_s",
                    "rep_period_s", "max_g2", "max_fit_residual", "max_stability")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"qc.{name} must be positive")
        if self.neighbour_offset < 1 or self.median_size < 1 or self.side_peaks < 1:
            raise ConfigError("qc.neighbour_offset, median_size and side_peaks must be >= 1")


@dataclass
class CorrelationSection:
    density_width: float = DENSITY_WIDTH
    density_step: float = DENSITY_STEP
    slice_width: float = SLICE_WIDTH
    slice_step: float = SLICE_STEP
    max_detuning: float = MAX_DETUNING
    normalize_rows: bool = True
    zpl_window: list = field(default_factory=lambda: [2.115, 2.232])
    expected_peaks: int = 2

    def validate(self):
        for name in ("density_width", "density_step", "slice_width", "slice_step",
                     "max_detuning"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"correlation.{name} must be positive")
        if len(self.zpl_window) != 2 or not self.zpl_window[0] < self.zpl_window[1]:
            raise ConfigError("correlation.zpl_window must be [lo, hi] with lo < hi")


@dataclass
class SimulateSection:
    modes: list = field(default_factory=lambda: [list(m) for m in DEFAULT_MODES])
    jitter_sigma: float = 0.017
    range: list = field(default_factory=lambda: list(DEFAULT_RANGE))
    duplication: int = 7
    zpl_count: int = 152
    zpl_window: list = field(default_factory=lambda: list(ZPL_WINDOW))
    line_sigma: float = 0.015
    amplitude_decay: float = 0.8
    noise: float = 0.0
    wavelength_nm: list = field(default_factory=lambda: [430.0, 530.0, 1.0])

    def validate(self):
        try:
            self.sim_config(0)
        except ValueError as exc:
            raise ConfigError(f"simulate: {exc}") from exc
        if self.zpl_count < 1:
            raise ConfigError("simulate.zpl_count must be >= 1")
        if not self.line_sigma > 0 or not 0 < self.amplitude_decay <= 1 or self.noise < 0:
            raise ConfigError("simulate.line_sigma > 0, 0 < amplitude_decay <= 1, noise >= 0")
        lo, hi, step = self.wavelength_nm
        if not (0 < lo < hi and step > 0):
            raise ConfigError("simulate.wavelength_nm must be [lo, hi, step]")

    def sim_config(self, seed: int) -> SimConfig:
        return SimConfig(modes=tuple(tuple(m) for m in self.modes), jitter_sigma=self.jitter_sigma,
                         range=tuple(self.range), duplication=self.duplication, seed=seed)


@dataclass
class AFMSection:
    threshold_nm: float = HEIGHT_THRESHOLD_NM
    layer_thickness_nm: float = LAYER_THICKNESS_NM
    pixel_size_nm: float = 1.0
    correct_tilt: bool = True

    def validate(self):
        for name in ("threshold_nm", "layer_thickness_nm", "pixel_size_nm"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"afm.{name} must be positive")


_SECTIONS = {"peaks": PeaksSection, "fit": FitSection, "qc": QCSection,
             "correlation": CorrelationSection, "simulate": SimulateSection, "afm": AFMSection}


@dataclass
class PipelineConfig:
    peaks: PeaksSection = field(default_factory=PeaksSection)
    fit: FitSection = field(default_factory=FitSection)
    qc: QCSection = field(default_factory=QCSection)
    correlation: CorrelationSection = field(default_factory=CorrelationSection)
    simulate: SimulateSection = field(default_factory=SimulateSection)
    afm: AFMSection = field(default_factory=AFMSection)
    seed: int = 42
    jobs: int = 0

    def validate(self) -> "PipelineConfig":
        for name in _SECTIONS:
            getattr(self, name).validate()
        if self.jobs < 0:
            raise ConfigError("jobs must be >= 0 (0 = one per processor)")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    # runtime objects for the library layer

    def fit_options(self) -> lsq.FitOptions:
        f = self.fit
        return lsq.FitOptions(f.max_iter, f.tol_cost, f.tol_step, f.damping_init)

    def ple_thresholds(self) -> VetThresholds:
        return VetThresholds(self.peaks.ple_residual_max, self.peaks.ple_min_height)

    def pl_thresholds(self) -> VetThresholds:
        return VetThresholds(self.peaks.pl_residual_max, self.peaks.pl_min_height)

    def qc_config(self) -> QCConfig:
        q = self.qc
        return QCConfig(brightness_ratio=q.brightness_ratio, neighbour_offset=q.neighbour_offset,
                        median_size=q.median_size, bleach_ratio=q.bleach_ratio,
                        stability_bin=q.stability_bin_s, min_count_rate=q.min_count_rate,
                        max_stability=q.max_stability, rep_period=q.rep_period_s,
                        side_peaks=q.side_peaks, max_g2=q.max_g2,
                        max_fit_residual=q.max_fit_residual, ple_window=self.peaks.ple_window,
                        ple_thresholds=self.ple_thresholds(), fit_options=self.fit_options())

    def sim_config(self) -> SimConfig:
        return self.simulate.sim_config(self.seed)


def _coerce(current, value, where):
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if isinstance(current, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{where}: expected an integer")
        return int(value)
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if isinstance(current, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return value
    return value


def apply_mapping(cfg: PipelineConfig, data: dict, source: str = "config") -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be an object")
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"{source}: section {key} must be an object")
            section = getattr(cfg, key)
            names = {f.name for f in fields(section)}
            updates = {}
            for k, v in value.items():
                if k not in names:
                    raise ConfigError(f"{source}: unknown key {key}.{k}")
                updates[k] = _coerce(getattr(section, k), v, f"{source}: {key}.{k}")
            setattr(cfg, key, replace(section, **updates))
        elif key in ("seed", "jobs"):
            setattr(cfg, key, _coerce(getattr(cfg, key), value, f"{source}: {key}"))
        else:
            raise ConfigError(f"{source}: unknown key {key}")
    return cfg


def load_config_file(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def parse_override(text: str) -> dict:
    """``section.key=value`` (value parsed as JSON, else kept as a string)."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    dotted, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = dotted.strip().split(".")
    if len(parts) == 1:
        return {parts[0]: value}
    if len(parts) == 2:
        return {parts[0]: {parts[1]: value}}
    raise ConfigError(f"override {text!r}: use section.key=value")


def build_config(config_file=None, overrides=(), **flags) -> PipelineConfig:
    """Defaults, then the config file, then ``--set`` overrides, then direct flags."""
    cfg = PipelineConfig()
    if config_file is not None:
        apply_mapping(cfg, load_config_file(config_file), str(config_file))
    for text in overrides:
        apply_mapping(cfg, parse_override(text), "--set")
    for key, value in flags.items():
        if value is not None:
            apply_mapping(cfg, {key: value}, f"--{key}")
    return cfg.validate()
