"""Experiment configuration: INI files with one section per experiment plus CLI overrides.

Example::

    [DEFAULT]
    seed = 1

    [euclid-wave-sweep]
    Ns = 8, 16, 32, 64
    dx = 0.02
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from ..errors import ConfigError
from ..metrics import FAMILIES
from ..profiles import parse_profile
from ..wave import VELOCITY_MODES

EXPERIMENT_NAMES = (
    "euclid-residual", "euclid-wave-sweep", "sphere-wave-sweep", "rays-oracle",
    "wf-classify", "f-monotonicity", "forward-heat",
)

# documented default preset for each experiment
PRESETS = {
    "euclid-residual": dict(family="euclid1", h="gaussian(0, 1)", t0=0.25, T=1.0, dx=0.1,
                            Ns=(8, 16, 32, 64, 128, 256, 512, 1024)),
    "euclid-wave-sweep": dict(family="euclid1", h="gaussian(0, 1)", t0=0.25, T=1.0, dx=0.02, dr=0.02,
                              dt_safety=0.5, Ns=(8, 16, 32, 64), delta=0.1, x_probe=2.0),
    "sphere-wave-sweep": dict(family="sphere2", h="constant(1)", t0=0.1, T=0.3, dr=0.02,
                              dt_safety=0.5, Ns=(8, 16, 32), delta=0.02, sphere_cells=32),
    "rays-oracle": dict(family="euclid1", count=100, step=1e-3, s_max=10.0, seed=1),
    "wf-classify": dict(family="euclid1", Ns=(4, 8, 16, 32), s_probe=1.0, T=1.0),
    "f-monotonicity": dict(family="sphere2", t0=0.1, T=0.2, dt=1e-5, cells=1536),
    "forward-heat": dict(family="euclid1", h="gaussian(0, 1)", t0=-0.25, T=-1.0, dx=0.02, dt=1e-4),
}

# keys that do not change results and are left out of the hash
_NOT_HASHED = ("out", "format")


@dataclass
class ExperimentConfig:
    experiment: str
    family: str = "euclid1"
    h: str = "gaussian(0, 1)"
    t0: float = 0.25
    T: float = 1.0
    dx: float = 0.02
    dr: float = 0.02
    dt_safety: float = 0.5
    dt: float = 1e-4
    Ns: tuple = (8, 16, 32, 64)
    terminal_velocity_mode: str = "heat_compatible"
    c_shift: float = 0.0
    delta: float = 0.1
    x_probe: float = 2.0
    sphere_cells: int = 32
    cells: int = 1536
    count: int = 100
    step: float = 1e-3
    s_max: float = 10.0
    s_probe: float = 1.0
    seed: int = 1
    out: str | None = None
    format: str = "csv"
    extra: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENT_NAMES:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENT_NAMES}")
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; choose from {sorted(FAMILIES)}")
        try:
            parse_profile(self.h)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.terminal_velocity_mode not in VELOCITY_MODES:
            raise ConfigError(f"terminal_velocity_mode must be one of {VELOCITY_MODES}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        for name in ("dx", "dr", "dt", "step", "s_max", "s_probe"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.dt_safety < 1:
            raise ConfigError("dt_safety must lie in (0, 1)")
        if self.c_shift < 0:
            raise ConfigError("c_shift must be nonnegative")
        for name in ("sphere_cells", "cells", "count"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if not self.Ns or any(n < 2 for n in self.Ns):
            raise ConfigError("Ns must be a nonempty list of integers >= 2")
        return self


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, text):
    if not isinstance(text, str):
        return text
    kind = _FIELD_TYPES.get(key)
    try:
        if key == "Ns":
            return tuple(int(v) for v in text.replace(",", " ").split())
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
    except ValueError:
        raise ConfigError(f"cannot read {key} = {text!r}") from None
    if key == "out" and text.lower() in ("", "none"):
        return None
    return text.strip()


def _assign(values: dict, key: str, text) -> None:
    if key == "experiment":
        raise ConfigError("the experiment name comes from the command line")
    if key in _FIELD_TYPES and key != "extra":
        values[key] = _coerce(key, text)
    else:
        values.setdefault("extra", {})[key] = text


def load_config(experiment: str, path: str | None = None, overrides=()) -> ExperimentConfig:
    """Preset, then the file's ``[DEFAULT]`` and ``[experiment]`` sections, then ``key=value`` overrides."""
    if experiment not in EXPERIMENT_NAMES:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENT_NAMES}")
    values: dict = dict(PRESETS[experiment])
    if path is not None:
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keep "Ns" and "T" case
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        section = parser[experiment] if parser.has_section(experiment) else parser.defaults()
        for key, text in section.items():
            _assign(values, key, text)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, text = item.split("=", 1)
        _assign(values, key.strip(), text.strip())
    return ExperimentConfig(experiment=experiment, **values).validate()


def canonical(config: ExperimentConfig) -> dict:
    data = asdict(config)
    for key in _NOT_HASHED:
        data.pop(key, None)
    data["Ns"] = list(data["Ns"])
    return data


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(canonical(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
