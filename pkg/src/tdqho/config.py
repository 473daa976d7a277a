"""Experiment configuration files (TOML).

Example::

    [protocol]
    kind = "Tanh"
    omega_i = 1.0
    omega_f = 3.0
    tau = 0.0
    eps = 0.5

    [oscillator]        # optional; hbar = M = 1 by default
    mass = 1.0

    [time]
    stop = 10.0         # start defaults to the protocol's natural start
    samples = 2001

    [initial]
    mode = "equilibrium"   # or "adiabatic", "explicit" (+ sigma, sigma_dot)

    [observables]
    level = 0
    pmf = true
    transitions = 8

    [sweep.axes]
    "protocol.delta" = [0.1, 1.0, 10.0]
"""

from __future__ import annotations

import copy
import itertools
import math
from dataclasses import dataclass, field

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .ermakov import DEFAULT_ATOL, DEFAULT_RTOL
from .protocols import (FrequencyProtocol, LinearSymmetric, NonlinearSymmetric, OscillatorParams,
                        ProtocolError, SuddenQuench, Tanh, protocol_from_dict)

SECTIONS = {"protocol", "oscillator", "time", "integrator", "initial", "observables", "output", "sweep"}
INITIAL_MODES = ("equilibrium", "adiabatic", "explicit")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending section and field."""


def _number(section, key, value, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}] {key}: expected a number, got {value!r}")
    if integer and not float(value).is_integer():
        raise ConfigError(f"[{section}] {key}: expected an integer, got {value!r}")
    if not math.isfinite(value) or (positive and value <= 0):
        raise ConfigError(f"[{section}] {key}: expected a {'positive ' if positive else ''}finite number, got {value!r}")
    return int(value) if integer else float(value)


@dataclass
class ExperimentConfig:
    raw: dict
    protocol: FrequencyProtocol
    params: OscillatorParams
    t_start: float
    t_stop: float
    samples: int
    rtol: float
    atol: float
    initial: dict
    observables: dict
    output: dict
    axes: dict = field(default_factory=dict)
    fit: dict | None = None

    def with_overrides(self, **dotted):
        """New config with ``section.key`` entries replaced."""
        raw = copy.deepcopy(self.raw)
        raw.pop("sweep", None)
        for k, v in dotted.items():
            sec, _, key = k.partition(".")
            raw.setdefault(sec, {})[key] = v
        return from_dict(raw)


def _default_start(p):
    if isinstance(p, Tanh):
        return p.start_time
    if isinstance(p, (LinearSymmetric, NonlinearSymmetric)):
        return None
    if isinstance(p, SuddenQuench):
        return p.t_q
    lo, _ = p.domain()
    return lo if math.isfinite(lo) else None


def from_dict(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    if "protocol" not in raw:
        raise ConfigError("missing [protocol] section")
    try:
        protocol = protocol_from_dict(raw["protocol"])
    except KeyError as exc:
        raise ConfigError(f"[protocol] missing field {exc.args[0]!r}") from None
    except ProtocolError as exc:
        raise ConfigError(f"[protocol] {exc}") from None

    osc = raw.get("oscillator", {})
    try:
        params = OscillatorParams(
            _number("oscillator", "mass", osc.get("mass", 1.0), positive=True),
            _number("oscillator", "hbar", osc.get("hbar", 1.0), positive=True),
            _number("oscillator", "c", osc["c"], positive=True) if "c" in osc else None)
    except ProtocolError as exc:
        raise ConfigError(f"[oscillator] {exc}") from None

    tsec = raw.get("time", {})
    start = tsec.get("start", _default_start(protocol))
    if start is None:
        raise ConfigError("[time] start: required for this protocol kind")
    start = _number("time", "start", start)
    if "stop" not in tsec:
        raise ConfigError("[time] stop: required")
    stop = _number("time", "stop", tsec["stop"])
    if not stop > start:
        raise ConfigError(f"[time] stop: must exceed start ({start}), got {stop}")
    samples = _number("time", "samples", tsec.get("samples", 1001), positive=True, integer=True)
    if samples < 2:
        raise ConfigError("[time] samples: need at least 2")

    isec = raw.get("integrator", {})
    rtol = _number("integrator", "rtol", isec.get("rtol", DEFAULT_RTOL), positive=True)
    atol = _number("integrator", "atol", isec.get("atol", DEFAULT_ATOL), positive=True)

    init = dict(raw.get("initial", {}))
    mode = init.setdefault("mode", "equilibrium")
    if mode not in INITIAL_MODES:
        raise ConfigError(f"[initial] mode: expected one of {INITIAL_MODES}, got {mode!r}")
    if mode == "explicit":
        for k in ("sigma", "sigma_dot"):
            if k not in init:
                raise ConfigError(f"[initial] {k}: required when mode = 'explicit'")
        init["sigma"] = _number("initial", "sigma", init["sigma"], positive=True)
        init["sigma_dot"] = _number("initial", "sigma_dot", init["sigma_dot"])

    obs = dict(raw.get("observables", {}))
    obs["level"] = _number("observables", "level", obs.get("level", 0), integer=True)
    if obs["level"] < 0:
        raise ConfigError("[observables] level: must be >= 0")
    obs["pmf"] = bool(obs.get("pmf", False))
    obs["transitions"] = _number("observables", "transitions", obs.get("transitions", 0), integer=True)

    out = dict(raw.get("output", {}))
    out.setdefault("name", "run")
    if not isinstance(out["name"], str) or not out["name"] or "/" in out["name"]:
        raise ConfigError(f"[output] name: expected a plain file stem, got {out['name']!r}")

    axes, fit = {}, None
    if "sweep" in raw:
        sw = raw["sweep"]
        axes = sw.get("axes", {})
        if not isinstance(axes, dict) or not axes:
            raise ConfigError("[sweep] axes: at least one axis is required")
        for name, values in axes.items():
            sec, dot, key = name.partition(".")
            if not dot or sec not in SECTIONS - {"sweep", "output"}:
                raise ConfigError(f"[sweep] axes: {name!r} must look like 'section.field'")
            if not isinstance(values, list) or not values:
                raise ConfigError(f"[sweep] axes: {name!r} needs a non-empty list of values")
        fit = sw.get("fit")
        if fit is not None:
            if not isinstance(fit, dict) or set(fit) != {"x", "y"}:
                raise ConfigError("[sweep] fit: expected a table with keys x and y")
            if fit["x"] not in axes:
                raise ConfigError(f"[sweep] fit: x = {fit['x']!r} is not a sweep axis")

    return ExperimentConfig(raw, protocol, params, start, stop, samples, rtol, atol,
                            init, obs, out, axes, fit)


def loads(text: str) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from None
    return from_dict(raw)


def load(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML syntax error: {exc}") from None
    return from_dict(raw)


def sweep_points(cfg: ExperimentConfig):
    """Cartesian product of the sweep axes as dicts of dotted overrides."""
    names = list(cfg.axes)
    return [dict(zip(names, combo)) for combo in itertools.product(*(cfg.axes[n] for n in names))]
