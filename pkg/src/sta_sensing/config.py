"""INI run configuration with unit-suffixed keys.

Every physical quantity names its unit in the key (``b_z_T``,
``xi_delta_MHz``, ``t_pi_us``); dimensionless keys carry no suffix. Unknown
sections or keys are rejected. Lists are comma separated.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources

import numpy as np

from .constants import khz_to_rad, mhz_to_rad
from .dynamics import IntegratorConfig
from .pulse_shaper import ErrorModel
from .targets import ClassicalSignal, NuclearSpin


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def _opt(kind, default, **meta):
    return field(default=default, metadata={"kind": kind, **meta})


@dataclass(frozen=True)
class TargetSection:
    kind: str = _opt("choice", "nuclear", choices=("nuclear", "classical"))
    gamma_n_MHz_per_T: float = _opt("float", 10.7084)
    b_z_T: float = _opt("float", 3.0)
    hyperfine_kHz: tuple = _opt("floats", (-4.81, -8.331, -26.744))
    gamma_amp_kHz: float = _opt("float", 28.0)
    signal_MHz: float = _opt("float", 127.731)


@dataclass(frozen=True)
class PulseSection:
    shape: str = _opt("choice", "sta", choices=("sta", "tophat"))
    k: int = _opt("int", 15)
    lam: int = _opt("int", 7)
    weight: float = _opt("float", 1.0)
    tol: float = _opt("float", 1e-6)
    n_starts: int = _opt("int", 64)
    # half-width of the box the eta starts are drawn from
    eta_start_box: float = _opt("float", 3.0)
    seed: int = _opt("int", 0)
    # 0 means: derive t_pi = lam / f_res from the target
    t_pi_us: float = _opt("float", 0.0)
    # 0 means: match the STA peak amplitude
    tophat_rabi_MHz: float = _opt("float", 0.0)
    n_samples: int = _opt("int", 2000)


@dataclass(frozen=True)
class SequenceSection:
    n_xy8: int = _opt("int", 102)


@dataclass(frozen=True)
class ErrorSection:
    xi_omega: tuple = _opt("floats", (0.0,))
    xi_delta_MHz: tuple = _opt("floats", (0.0,))


@dataclass(frozen=True)
class GridSection:
    modes: tuple = _opt("words", ("ideal", "tophat", "sta"), choices=("ideal", "tophat", "sta"))
    n_points: int = _opt("int", 61)
    half_width_linewidths: float = _opt("float", 10.0)
    # explicit grid; overrides n_points when given
    probe_MHz: tuple = _opt("floats", ())


@dataclass(frozen=True)
class IntegratorSection:
    steps_per_pulse: int = _opt("int", 2000)
    norm_tolerance: float = _opt("float", 1e-9)


@dataclass(frozen=True)
class RobustnessSection:
    xi_omega: tuple = _opt("floats", (-0.005, 0.0, 0.005))
    xi_delta_MHz: tuple = _opt("floats", (-1.0, 0.0, 1.0))


@dataclass(frozen=True)
class RunSection:
    threads: int = _opt("int", 1)


_SECTIONS = {
    "target": TargetSection,
    "pulse": PulseSection,
    "sequence": SequenceSection,
    "errors": ErrorSection,
    "grid": GridSection,
    "integrator": IntegratorSection,
    "robustness": RobustnessSection,
    "run": RunSection,
}


@dataclass(frozen=True)
class RunConfig:
    target: TargetSection = TargetSection()
    pulse: PulseSection = PulseSection()
    sequence: SequenceSection = SequenceSection()
    errors: ErrorSection = ErrorSection()
    grid: GridSection = GridSection()
    integrator: IntegratorSection = IntegratorSection()
    robustness: RobustnessSection = RobustnessSection()
    run: RunSection = RunSection()

    # ---- derived physics objects

    def build_target(self):
        t = self.target
        if t.kind == "nuclear":
            return NuclearSpin(
                mhz_to_rad(t.gamma_n_MHz_per_T), t.b_z_T, tuple(khz_to_rad(np.array(t.hyperfine_kHz)))
            )
        return ClassicalSignal(khz_to_rad(t.gamma_amp_kHz), mhz_to_rad(t.signal_MHz))

    def error_ensemble(self):
        """Broadcast the error lists against each other into ErrorModels."""
        xo, xd = self.errors.xi_omega, self.errors.xi_delta_MHz
        n = max(len(xo), len(xd))
        if len(xo) not in (1, n) or len(xd) not in (1, n):
            raise ConfigError("errors.xi_omega and errors.xi_delta_MHz lengths do not broadcast")
        xo = xo * n if len(xo) == 1 else xo
        xd = xd * n if len(xd) == 1 else xd
        return tuple(ErrorModel(a, mhz_to_rad(b)) for a, b in zip(xo, xd))

    def integrator_config(self):
        return IntegratorConfig(self.integrator.steps_per_pulse, self.integrator.norm_tolerance)

    # ---- serialisation

    def to_ini(self):
        parser = _new_parser()
        for name in _SECTIONS:
            sec = getattr(self, name)
            parser[name] = {
                f.name: _format(f.metadata["kind"], getattr(sec, f.name))
                for f in fields(sec)
                if getattr(sec, f.name) != ()  # an absent list means "use the default"
            }
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def _new_parser():
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys keep their unit capitalisation
    return parser


def _format(kind, value):
    if kind in ("floats",):
        return ", ".join(repr(float(v)) for v in value)
    if kind == "words":
        return ", ".join(value)
    if kind == "float":
        return repr(float(value))
    return str(value)


def _parse_value(kind, raw, meta, where):
    raw = raw.strip()
    try:
        if kind == "float":
            val = float(raw)
            if not math.isfinite(val):
                raise ValueError("not finite")
            return val
        if kind == "int":
            return int(raw)
        if kind == "floats":
            items = [p.strip() for p in raw.split(",") if p.strip()]
            vals = tuple(float(p) for p in items)
            if not all(math.isfinite(v) for v in vals):
                raise ValueError("not finite")
            return vals
        if kind == "choice":
            if raw not in meta["choices"]:
                raise ValueError(f"expected one of {meta['choices']}")
            return raw
        if kind == "words":
            vals = tuple(p.strip() for p in raw.split(",") if p.strip())
            bad = [v for v in vals if v not in meta["choices"]]
            if bad or not vals:
                raise ValueError(f"expected a list drawn from {meta['choices']}")
            return vals
    except ValueError as exc:
        raise ConfigError(f"{where} = {raw!r}: {exc}") from None
    raise AssertionError(kind)


def parse_config(text, base=None, ignore_sections=("metadata",)):
    """Parse INI text on top of ``base`` (defaults when None)."""
    parser = _new_parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    cfg = base or RunConfig()
    for name in parser.sections():
        if name in ignore_sections:
            continue
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        sec = getattr(cfg, name)
        known = {f.name: f for f in fields(sec)}
        updates = {}
        for key, raw in parser[name].items():
            if key not in known:
                raise ConfigError(f"unknown key {name}.{key}")
            f = known[key]
            updates[key] = _parse_value(f.metadata["kind"], raw, f.metadata, f"{name}.{key}")
            if (name, key) == ("grid", "probe_MHz") and not updates[key]:
                raise ConfigError("grid.probe_MHz is present but empty")
        cfg = replace(cfg, **{name: replace(sec, **updates)})
    validate(cfg)
    return cfg


def validate(cfg):
    p = cfg.pulse
    if p.k < 1 or p.k % 2 == 0:
        raise ConfigError("pulse.k must be an odd positive integer")
    if p.lam < 1:
        raise ConfigError("pulse.lam must be >= 1")
    if p.t_pi_us < 0 or p.tophat_rabi_MHz < 0:
        raise ConfigError("pulse.t_pi_us and pulse.tophat_rabi_MHz must be >= 0")
    if p.n_samples < 2 or p.n_starts < 1 or p.weight <= 0 or p.tol <= 0 or not p.eta_start_box > 0:
        raise ConfigError("pulse optimiser settings out of range")
    if cfg.sequence.n_xy8 < 1:
        raise ConfigError("sequence.n_xy8 must be >= 1")
    if cfg.target.b_z_T <= 0 or len(cfg.target.hyperfine_kHz) != 3:
        raise ConfigError("target needs b_z_T > 0 and a 3-component hyperfine_kHz")
    if cfg.target.signal_MHz <= 0:
        raise ConfigError("target.signal_MHz must be positive")
    g = cfg.grid
    if g.n_points < 1 and not g.probe_MHz:
        raise ConfigError("grid is empty")
    if any(b <= a for a, b in zip(g.probe_MHz, g.probe_MHz[1:])):
        raise ConfigError("grid.probe_MHz must be strictly increasing")
    if cfg.integrator.steps_per_pulse < 1 or cfg.integrator.norm_tolerance <= 0:
        raise ConfigError("integrator settings out of range")
    if cfg.run.threads < 1:
        raise ConfigError("run.threads must be >= 1")
    if not cfg.errors.xi_omega or not cfg.errors.xi_delta_MHz:
        raise ConfigError("errors lists must be nonempty")
    if not cfg.robustness.xi_omega or not cfg.robustness.xi_delta_MHz:
        raise ConfigError("robustness grids must be nonempty")
    cfg.error_ensemble()


def load_config(path, base=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, base)


def _presets():
    return resources.files("sta_sensing").joinpath("presets")


def preset_names():
    return sorted(
        p.name[:-4] for p in _presets().iterdir() if p.name.endswith(".ini")
    )


def load_preset(name):
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    text = _presets().joinpath(f"{name}.ini").read_text()
    return parse_config(text)


def explicit_grid_hz(cfg):
    """Explicit probe grid in Hz, or None when the default grid applies."""
    if cfg.grid.probe_MHz:
        return np.array(cfg.grid.probe_MHz) * 1e6
    return None

