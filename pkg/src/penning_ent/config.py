"""Run configuration: a sectioned ``key = value`` document (INI syntax).

Sections and keys (all optional except ``run.seed`` and ``run.n_trajectories``)::

    [trap]
    omega_c = 7.658227848101266   # cyclotron frequency in trap units, or
    omega_c_si = 484e6            # ... in rad/s (not both)
    omega_z_si = 63.2e6           # rad/s, sets the time unit and Kelvin scale

    [environment]
    damping_interval = 0.01, 0.1
    coupling_interval = 0.001, 0.01
    alpha_12 = 0                  # any constant name pins it for every draw

    [run]
    seed = 1
    n_trajectories = 1000
    temperatures = 10 mK, 0.1 K, 1 K   # or: thetas = 20.7, 207 (not both)
    t_max = 50
    n_steps = 500
    t_bins = 100
    eps_bins = 100
    eps_range = -0.01, 0.5       # omit for automatic range
    chunk_size = 20000
    workers = 1

    [output]
    directory = out
    formats = csv, json, svg
    color_scale = linear         # or log

Unknown sections or keys are errors.
"""

import configparser
import re
from dataclasses import dataclass, field, fields, replace

from .environment import EnvironmentConstants
from .mc import SamplerConfig, TimeGrid
from .trap import (
    PROTON_OMEGA_C_SI,
    PROTON_OMEGA_Z_SI,
    InvalidParametersError,
    TrapParameters,
    UnitSystem,
    temperature_to_dimensionless,
)

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "parse_temperature"]

_FORMATS = ("csv", "json", "svg")
_TEMP_UNITS = {"k": 1.0, "mk": 1e-3, "uk": 1e-6, "µk": 1e-6, "nk": 1e-9}
_CONSTANTS = tuple(EnvironmentConstants().to_dict())


class ConfigError(ValueError):
    """Invalid configuration; the message names the key and its location."""


def parse_temperature(text):
    """``"10 mK"`` -> 0.01 (Kelvin). A bare number is read as Kelvin."""
    m = re.fullmatch(r"\s*([-+0-9.eE]+)\s*([a-zA-Zµ]*)\s*", str(text))
    if not m:
        raise ValueError(f"cannot parse temperature {text!r}")
    unit = m.group(2).lower() or "k"
    if unit not in _TEMP_UNITS:
        raise ValueError(f"unknown temperature unit {m.group(2)!r}")
    value = float(m.group(1)) * _TEMP_UNITS[unit]
    if not value > 0:
        raise ValueError(f"temperature must be positive, got {text!r}")
    return value


@dataclass(frozen=True)
class RunConfig:
    seed: int
    n_trajectories: int
    omega_c: float = PROTON_OMEGA_C_SI / PROTON_OMEGA_Z_SI
    omega_z_si: float = PROTON_OMEGA_Z_SI
    damping_interval: tuple = (1e-2, 1e-1)
    coupling_interval: tuple = (1e-3, 1e-2)
    fixed: dict = field(default_factory=dict)
    temperatures_kelvin: tuple = None
    thetas_given: tuple = None
    t_max: float = 50.0
    n_steps: int = 500
    t_bins: int = 100
    eps_bins: int = 100
    eps_range: tuple = None
    chunk_size: int = 20000
    workers: int = 1
    directory: str = "out"
    formats: tuple = _FORMATS
    color_scale: str = "linear"

    def __post_init__(self):
        if self.temperatures_kelvin is not None and self.thetas_given is not None:
            raise ConfigError("give temperatures (Kelvin) or thetas, not both")
        if self.temperatures_kelvin is None and self.thetas_given is None:
            object.__setattr__(self, "temperatures_kelvin", (0.01, 0.1, 1.0))
        if self.color_scale not in ("linear", "log"):
            raise ConfigError(f"output.color_scale must be 'linear' or 'log', got {self.color_scale!r}")
        bad = set(self.formats) - set(_FORMATS)
        if bad:
            raise ConfigError(f"output.formats: unknown format(s) {sorted(bad)}")
        if self.workers < 1:
            raise ConfigError("run.workers must be >= 1")
        try:
            self.trap
            self.units
            self.sampler()
            EnvironmentConstants.from_dict(self.fixed)
            for t in self.thetas:
                if not t > 0:
                    raise InvalidParametersError(f"theta must be positive, got {t}")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def trap(self):
        return TrapParameters(omega_c=self.omega_c)

    @property
    def units(self):
        return UnitSystem(self.omega_z_si)

    @property
    def thetas(self):
        if self.thetas_given is not None:
            return tuple(self.thetas_given)
        return tuple(temperature_to_dimensionless(t, self.units) for t in self.temperatures_kelvin)

    def sampler(self):
        return SamplerConfig(
            seed=self.seed,
            n_trajectories=self.n_trajectories,
            damping_interval=tuple(self.damping_interval),
            coupling_interval=tuple(self.coupling_interval),
            thetas=self.thetas,
            grid=TimeGrid(self.t_max, self.n_steps),
            t_bins=self.t_bins,
            eps_bins=self.eps_bins,
            eps_range=self.eps_range,
            chunk_size=self.chunk_size,
            fixed=dict(self.fixed),
        )

    def with_overrides(self, **kw):
        """Copy with non-None keyword overrides applied (CLI flags)."""
        kw = {k: v for k, v in kw.items() if v is not None}
        if "temperatures_kelvin" in kw:
            kw.setdefault("thetas_given", None)
        elif "thetas_given" in kw:
            kw.setdefault("temperatures_kelvin", None)
        try:
            return replace(self, **kw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["fixed"] = dict(self.fixed)
        d["thetas"] = list(self.thetas)
        return d

    def to_text(self):
        """Serialize to the config syntax; ``parse_config(c.to_text()) == c``."""
        r = repr

        def lst(v):
            return ", ".join(r(float(x)) for x in v)

        lines = ["[trap]", f"omega_c = {r(self.omega_c)}", f"omega_z_si = {r(self.omega_z_si)}", "",
                 "[environment]",
                 f"damping_interval = {lst(self.damping_interval)}",
                 f"coupling_interval = {lst(self.coupling_interval)}"]
        lines += [f"{k} = {r(float(v))}" for k, v in sorted(self.fixed.items())]
        lines += ["", "[run]", f"seed = {self.seed}", f"n_trajectories = {self.n_trajectories}"]
        if self.thetas_given is not None:
            lines.append(f"thetas = {lst(self.thetas_given)}")
        else:
            lines.append("temperatures = " + ", ".join(f"{r(float(t))} K" for t in self.temperatures_kelvin))
        lines += [f"t_max = {r(float(self.t_max))}", f"n_steps = {self.n_steps}",
                  f"t_bins = {self.t_bins}", f"eps_bins = {self.eps_bins}"]
        if self.eps_range is not None:
            lines.append(f"eps_range = {lst(self.eps_range)}")
        lines += [f"chunk_size = {self.chunk_size}", f"workers = {self.workers}", "",
                  "[output]", f"directory = {self.directory}",
                  f"formats = {', '.join(self.formats)}", f"color_scale = {self.color_scale}"]
        return "\n".join(lines) + "\n"


def _locate(text):
    """Map (section, key) -> (line, column of value), both 1-based."""
    where, section = {}, None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]\s*", line)
        if m and section is not None:
            where[(section, m.group(1).lower())] = (n, m.end() + 1)
    return where


_INT = int
_FLOAT = float


def _pair(v):
    parts = [p.strip() for p in v.split(",")]
    if len(parts) != 2:
        raise ValueError("expected two comma-separated numbers")
    return (float(parts[0]), float(parts[1]))


def _floats(v):
    return tuple(float(p) for p in v.split(",") if p.strip())


def _words(v):
    return tuple(p.strip() for p in v.split(",") if p.strip())


def _temps(v):
    return tuple(parse_temperature(p) for p in v.split(",") if p.strip())


_SCHEMA = {
    "trap": {"omega_c": _FLOAT, "omega_c_si": _FLOAT, "omega_z_si": _FLOAT},
    "environment": {"damping_interval": _pair, "coupling_interval": _pair,
                    **{c: _FLOAT for c in _CONSTANTS}},
    "run": {"seed": _INT, "n_trajectories": _INT, "temperatures": _temps, "thetas": _floats,
            "t_max": _FLOAT, "n_steps": _INT, "t_bins": _INT, "eps_bins": _INT,
            "eps_range": _pair, "chunk_size": _INT, "workers": _INT},
    "output": {"directory": str, "formats": _words, "color_scale": str},
}


def parse_config(text):
    """Parse and validate a config document into a :class:`RunConfig`.

    Raises ConfigError on syntax errors (with line number), duplicate or
    unknown keys, bad values (with line and column) and conflicting options.
    """
    cp = configparser.ConfigParser(strict=True, interpolation=None,
                                   inline_comment_prefixes=("#", ";"), default_section="\0")
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate key '{exc.option}' in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}, column 1: key outside any [section]") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"line {lineno}, column 1: cannot parse {line!r}") from None

    where = _locate(text)
    raw = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in cp.items(section):
            loc = where.get((section, key), ("?", "?"))
            if key not in _SCHEMA[section]:
                raise ConfigError(f"line {loc[0]}: unknown key '{section}.{key}'")
            try:
                raw[(section, key)] = _SCHEMA[section][key](value)
            except ValueError as exc:
                raise ConfigError(
                    f"line {loc[0]}, column {loc[1]}: bad value for '{section}.{key}': {exc}"
                ) from None

    def get(section, key):
        return raw.get((section, key))

    kw = {}
    if get("trap", "omega_c") is not None and get("trap", "omega_c_si") is not None:
        raise ConfigError("trap.omega_c and trap.omega_c_si are mutually exclusive")
    if get("trap", "omega_z_si") is not None:
        kw["omega_z_si"] = get("trap", "omega_z_si")
    if get("trap", "omega_c") is not None:
        kw["omega_c"] = get("trap", "omega_c")
    elif get("trap", "omega_c_si") is not None:
        kw["omega_c"] = get("trap", "omega_c_si") / kw.get("omega_z_si", PROTON_OMEGA_Z_SI)
    for key in ("damping_interval", "coupling_interval"):
        if get("environment", key) is not None:
            kw[key] = get("environment", key)
    kw["fixed"] = {c: get("environment", c) for c in _CONSTANTS if get("environment", c) is not None}
    if get("run", "temperatures") is not None and get("run", "thetas") is not None:
        raise ConfigError("run.temperatures (Kelvin) and run.thetas are mutually exclusive")
    if get("run", "temperatures") is not None:
        kw["temperatures_kelvin"] = get("run", "temperatures")
    if get("run", "thetas") is not None:
        kw["thetas_given"] = get("run", "thetas")
    for key in ("t_max", "n_steps", "t_bins", "eps_bins", "eps_range", "chunk_size", "workers"):
        if get("run", key) is not None:
            kw[key] = get("run", key)
    for key in ("directory", "formats", "color_scale"):
        if get("output", key) is not None:
            kw[key] = get("output", key)
    for key in ("seed", "n_trajectories"):
        if get("run", key) is None:
            raise ConfigError(f"missing required key 'run.{key}'")
        kw[key] = get("run", key)
    return RunConfig(**kw)


def load_config(path):
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())
