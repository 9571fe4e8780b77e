"""Flat ``key = value [unit]`` run configuration.

One setting per line, ``#`` starts a comment. Dimensioned keys need an
explicit unit suffix; dimensionless keys must not carry one. Unknown keys,
repeated keys, bad units and out-of-range values are reported with the key
name and line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from . import defaults
from .biphoton import Scene
from .counting import Detector, GateConfig, ScanGrid, default_triple_detectors
from .errors import ConfigError, ThinCrystalViolation
from .lgbeam import LaguerreGaussianMode
from .phasematch import Crystal

UNITS = {
    "length": {"nm": 1e-7, "um": 1e-4, "mm": 0.1, "cm": 1.0, "m": 100.0},
    "time": {"ps": 1e-12, "ns": 1e-9, "us": 1e-6, "ms": 1e-3, "s": 1.0},
    "wavenumber": {"/cm": 1.0, "1/cm": 1.0, "/mm": 10.0, "/m": 0.01},
    "rate": {"/s": 1.0, "Hz": 1.0, "kHz": 1e3, "MHz": 1e6},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
}
# unit used when echoing defaults
DISPLAY_UNIT = {"length": "cm", "time": "s", "wavenumber": "/cm", "rate": "/s", "angle": "deg"}

EXPERIMENTS = ("scan", "triple", "analyze", "full")


@dataclass(frozen=True)
class Key:
    name: str
    kind: str  # a UNITS dimension, or int / float / choice / path
    default: object
    doc: str
    check: str = ""  # "pos", "nonneg", "unit" (0..1]
    choices: tuple = ()
    display: str | None = None


KEYS = [
    Key("experiment", "choice", None, "pipeline to run", choices=EXPERIMENTS),
    Key("seed", "int", 0, "master random seed", "nonneg"),
    Key("workers", "int", 1, "threads for the scan grid", "pos"),
    Key("output.dir", "path", "out", "output directory"),
    Key("pump.l", "int", 4, "pump topological charge"),
    Key("pump.p", "int", 0, "pump radial index", "nonneg"),
    Key("pump.z_R", "length", defaults.Z_R, "pump Rayleigh range", "pos"),
    Key("pump.w0", "length", None, "pump waist in the crystal (overrides pump.z_R)", "pos", display="um"),
    Key("pump.wavelength", "length", defaults.PUMP_WAVELENGTH, "vacuum pump wavelength", "pos", display="nm"),
    Key("scene.k_P", "wavenumber", defaults.K_P, "pump wavenumber in the crystal", "pos"),
    Key("scene.k_s", "wavenumber", defaults.K_S, "signal wavenumber in the crystal", "pos"),
    Key("crystal.l_c", "length", defaults.CRYSTAL_LENGTH, "crystal length", "pos"),
    Key("crystal.n_s", "float", defaults.N_S, "signal refractive index", "pos"),
    Key("crystal.cut_polar", "angle", defaults.CUT_POLAR_DEG * math.pi / 180, "optic-axis polar cut angle"),
    Key("crystal.cut_azimuth", "angle", defaults.CUT_AZIMUTH_DEG * math.pi / 180, "optic-axis azimuthal cut angle"),
    Key("detector.distance", "length", defaults.DETECTOR_DISTANCE, "crystal to detection plane", "pos"),
    Key("detector.aperture", "length", defaults.PCM_APERTURE, "fixed and scanning aperture diameter", "pos",
        display="um"),
    Key("detector.efficiency", "float", 0.1, "quantum efficiency of the scan detectors", "unit"),
    Key("detector.dark_rate", "rate", 0.0, "dark count rate of the scan detectors", "nonneg"),
    Key("scan.x_min", "length", 3.3, "scan window", None),
    Key("scan.x_max", "length", 4.2, "scan window", None),
    Key("scan.y_min", "length", -1.0, "scan window", None),
    Key("scan.y_max", "length", 1.0, "scan window", None),
    Key("scan.step", "length", 0.02, "scan step", "pos", display="um"),
    Key("scan.dwell", "time", 1000.0, "dwell per grid point", "nonneg"),
    Key("scan.pair_rate", "rate", 2e8, "pair emission rate during the scan", "nonneg"),
    Key("gate.trigger", "time", defaults.TRIGGER_GATE, "scan coincidence gate", "pos", display="ns"),
    Key("gate.pulse_width", "time", defaults.PULSE_WIDTH, "triple-coincidence pulse width", "pos", display="ns"),
    Key("gate.window", "time", defaults.EFFECTIVE_WINDOW, "accidental window for the rate algebra", "pos",
        display="ns"),
    Key("gate.logic", "choice", "gated", "triple channel logic", choices=("gated", "overlap")),
    Key("triple.model", "choice", "quantum", "pair statistics model", choices=("quantum", "semiclassical")),
    Key("triple.duration", "time", defaults.MEASURED_DURATION, "simulated run length", "nonneg"),
    Key("triple.grin_aperture", "length", 0.18, "top/bottom collection aperture diameter", "pos"),
    Key("triple.trigger_efficiency", "float", 0.25, "trigger detector quantum efficiency", "unit"),
    Key("triple.trigger_dark_rate", "rate", 0.0, "trigger detector dark rate", "nonneg"),
    Key("target.R_trig", "rate", defaults.MEASURED_RATES["R_trig"], "calibration target", "pos"),
    Key("target.R_ctop", "rate", defaults.MEASURED_RATES["R_ctop"], "calibration target", "pos"),
    Key("target.R_cbot", "rate", defaults.MEASURED_RATES["R_cbot"], "calibration target", "pos"),
    Key("target.R_top", "rate", defaults.MEASURED_RATES["R_top"], "calibration target", "pos"),
    Key("target.R_bot", "rate", defaults.MEASURED_RATES["R_bot"], "calibration target", "pos"),
    Key("analyze.input", "path", None, "map CSV to fit (default: coincidence_map.csv in output.dir)"),
]
KEY_TABLE = {k.name: k for k in KEYS}


def _parse_value(key: Key, text: str, line: int):
    parts = text.split()
    if not parts:
        raise ConfigError("missing value", key.name, line)
    if key.kind in ("choice", "path"):
        if len(parts) != 1:
            raise ConfigError(f"expected a single word, got {text!r}", key.name, line)
        if key.kind == "choice" and parts[0] not in key.choices:
            raise ConfigError(f"must be one of {', '.join(key.choices)}", key.name, line)
        return parts[0]
    if key.kind == "int":
        if len(parts) != 1:
            raise ConfigError("dimensionless key takes no unit", key.name, line)
        try:
            value = int(parts[0])
        except ValueError:
            raise ConfigError(f"expected an integer, got {parts[0]!r}", key.name, line) from None
    else:
        try:
            number = float(parts[0])
        except ValueError:
            raise ConfigError(f"expected a number, got {parts[0]!r}", key.name, line) from None
        if not math.isfinite(number):
            raise ConfigError("value must be finite", key.name, line)
        if key.kind == "float":
            if len(parts) != 1:
                raise ConfigError("dimensionless key takes no unit", key.name, line)
            value = number
        else:
            units = UNITS[key.kind]
            if len(parts) != 2:
                raise ConfigError(f"unit required, one of {', '.join(units)}", key.name, line)
            if parts[1] not in units:
                raise ConfigError(f"unit {parts[1]!r} is not a {key.kind} unit ({', '.join(units)})", key.name, line)
            value = number * units[parts[1]]
    if key.check == "pos" and not value > 0:
        raise ConfigError("must be positive", key.name, line)
    if key.check == "nonneg" and value < 0:
        raise ConfigError("must be >= 0", key.name, line)
    if key.check == "unit" and not 0 < value <= 1:
        raise ConfigError("must lie in (0, 1]", key.name, line)
    return value


@dataclass(frozen=True)
class RunConfig:
    values: dict
    lines: dict = field(default_factory=dict)  # key -> source line, for error messages

    def __getitem__(self, name):
        return self.values[name]

    def with_values(self, **updates) -> "RunConfig":
        vals = dict(self.values)
        for k, v in updates.items():
            vals[k.replace("__", ".")] = v
        return RunConfig(vals, dict(self.lines))

    @property
    def experiment(self):
        return self.values["experiment"]

    @property
    def output_dir(self) -> Path:
        return Path(self.values["output.dir"])

    def _where(self, name):
        return name, self.lines.get(name)

    def pump(self) -> LaguerreGaussianMode:
        v = self.values
        lam_medium = 2 * math.pi / v["scene.k_P"]
        try:
            if v["pump.w0"] is not None:
                return LaguerreGaussianMode(v["pump.l"], v["pump.p"], w0=v["pump.w0"], wavelength=lam_medium)
            return LaguerreGaussianMode(v["pump.l"], v["pump.p"], z_R=v["pump.z_R"], wavelength=lam_medium)
        except ValueError as exc:
            raise ConfigError(str(exc), *self._where("pump.l")) from None

    def crystal(self) -> Crystal:
        v = self.values
        n_P = v["scene.k_P"] * v["pump.wavelength"] / (2 * math.pi)
        return Crystal(v["crystal.l_c"], v["crystal.n_s"], n_P, v["crystal.cut_polar"], v["crystal.cut_azimuth"])

    def scene(self) -> Scene:
        v = self.values
        return Scene(self.pump(), self.crystal(), v["scene.k_P"], v["scene.k_s"], v["detector.distance"])

    def grid(self) -> ScanGrid:
        v = self.values
        try:
            return ScanGrid(v["scan.x_min"], v["scan.x_max"], v["scan.y_min"], v["scan.y_max"], v["scan.step"],
                            v["scan.dwell"])
        except ValueError as exc:
            raise ConfigError(str(exc), *self._where("scan.x_min")) from None

    def gates(self) -> GateConfig:
        v = self.values
        return GateConfig(v["gate.trigger"], v["gate.pulse_width"], v["gate.window"], v["gate.logic"])

    def scan_detector(self, center=(0.0, 0.0)) -> Detector:
        v = self.values
        return Detector(center, v["detector.aperture"], v["detector.efficiency"], v["detector.dark_rate"])

    def triple_detectors(self, scene: Scene):
        v = self.values
        trig, top, bot = default_triple_detectors(scene, v["triple.grin_aperture"], v["triple.trigger_efficiency"])
        trig = Detector(trig.center, v["detector.aperture"], trig.quantum_efficiency, v["triple.trigger_dark_rate"])
        return trig, top, bot

    def targets(self) -> dict:
        return {name.split(".", 1)[1]: self.values[name] for name in self.values if name.startswith("target.")}


def default_values() -> dict:
    return {k.name: k.default for k in KEYS}


def parse_text(text: str) -> RunConfig:
    values = default_values()
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError("expected 'key = value'", None, lineno)
        name, rhs = (s.strip() for s in content.split("=", 1))
        if name not in KEY_TABLE:
            raise ConfigError("unknown key", name, lineno)
        if name in lines:
            raise ConfigError(f"repeated key (first set on line {lines[name]})", name, lineno)
        values[name] = _parse_value(KEY_TABLE[name], rhs, lineno)
        lines[name] = lineno
    cfg = RunConfig(values, lines)
    _validate(cfg)
    return cfg


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_text(text)


def _validate(cfg: RunConfig):
    v = cfg.values
    z_R = cfg.pump().z_R
    if not v["crystal.l_c"] < z_R:
        key = "crystal.l_c"
        raise ThinCrystalViolation(
            f"{key} (line {cfg.lines.get(key, '-')}): crystal length {v[key]:g} cm must be below the pump "
            f"Rayleigh range {z_R:g} cm"
        )
    for lo, hi in (("scan.x_min", "scan.x_max"), ("scan.y_min", "scan.y_max")):
        if v[hi] < v[lo]:
            raise ConfigError(f"must not be below {lo}", *cfg._where(hi))


def format_value(key: Key, value) -> str:
    if value is None:
        return ""
    if key.kind in ("choice", "path"):
        return str(value)
    if key.kind == "int":
        return str(value)
    if key.kind == "float":
        return f"{value:.6g}"
    unit = key.display or DISPLAY_UNIT[key.kind]
    return f"{value / UNITS[key.kind][unit]:.6g} {unit}"


def dump_defaults() -> str:
    """Every key with its default, in config-file syntax; unset optional keys are commented out."""
    out = []
    for key in KEYS:
        text = format_value(key, key.default)
        if text:
            out.append(f"{key.name} = {text}  # {key.doc}")
        else:
            out.append(f"# {key.name} =  # {key.doc} (unset)")
    return "\n".join(out) + "\n"
