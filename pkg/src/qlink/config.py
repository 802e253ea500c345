"""YAML config loading with line-numbered diagnostics.

Each file is a flat mapping of SI-unit values.  A link config may nest its
receiver as a mapping or point at a receiver file by relative path.
"""

from __future__ import annotations

import math
import os
from dataclasses import fields

import yaml

from ._units import from_db, photon_energy
from .link import LinkConfig
from .receiver import ReceiverSpec
from .trace import TraceConfig

_REQUIRED = object()


class ConfigError(ValueError):
    """Config problem, located by file, line and field where possible."""

    def __init__(self, message, path=None, line=None, field=None):
        self.path, self.line, self.field = path, line, field
        where = ":".join(str(x) for x in (path, line) if x is not None)
        label = f"{field}: " if field else ""
        super().__init__(f"{where}: {label}{message}" if where else f"{label}{message}")


def _line_map(node):
    """``{key: (line, child_map_or_None)}`` for a YAML mapping node (1-based lines)."""
    out = {}
    for key, value in node.value:
        child = _line_map(value) if isinstance(value, yaml.MappingNode) else None
        out[key.value] = (key.start_mark.line + 1, child)
    return out


def load_yaml(path):
    """Return ``(data, line_map)`` for a YAML file whose top level is a mapping."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from None
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(problem, path, mark.line + 1 if mark else None) from None
    if not isinstance(node, yaml.MappingNode) or not isinstance(data, dict):
        raise ConfigError("top level must be a key: value mapping", path, 1)
    return data, _line_map(node)


class _Reader:
    """Pulls typed fields out of a mapping and reports problems with their line."""

    def __init__(self, data, lines, path, prefix=""):
        self.data, self.lines, self.path, self.prefix = data, lines, path, prefix
        self.used = set()

    def error(self, name, message):
        line = self.lines.get(name, (None, None))[0]
        return ConfigError(message, self.path, line, self.prefix + name)

    def has(self, name):
        return name in self.data

    def raw(self, name, default=_REQUIRED):
        if name not in self.data:
            if default is _REQUIRED:
                raise ConfigError("required field is missing", self.path, None, self.prefix + name)
            return default
        self.used.add(name)
        return self.data[name]

    def number(self, name, default=_REQUIRED, lo=None, hi=None, lo_open=False, allow_inf=False):
        value = self.raw(name, default)
        if value is default and name not in self.data:
            return value
        if isinstance(value, bool):
            raise self.error(name, f"expected a number, got {value!r}")
        try:
            # YAML 1.1 reads '1e-3' as a string, so coerce explicitly
            x = float(value)
        except (TypeError, ValueError):
            raise self.error(name, f"expected a number, got {value!r}") from None
        if math.isnan(x) or (math.isinf(x) and not allow_inf):
            raise self.error(name, f"must be finite, got {value!r}")
        if lo is not None and (x < lo or (lo_open and x == lo)):
            raise self.error(name, f"must be {'>' if lo_open else '>='} {lo:g}, got {x:g}")
        if hi is not None and x > hi:
            raise self.error(name, f"must be <= {hi:g}, got {x:g}")
        return x

    def integer(self, name, default=_REQUIRED, lo=None):
        value = self.raw(name, default)
        if value is default and name not in self.data:
            return value
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(name, f"expected an integer, got {value!r}")
        if lo is not None and value < lo:
            raise self.error(name, f"must be >= {lo}, got {value}")
        return value

    def boolean(self, name, default=_REQUIRED):
        value = self.raw(name, default)
        if not isinstance(value, bool):
            raise self.error(name, f"expected true or false, got {value!r}")
        return value

    def one_of(self, *names):
        present = sorted((n for n in names if n in self.data), key=lambda k: self.lines.get(k, (0,))[0])
        if len(present) > 1:
            raise self.error(present[1], f"conflicts with {present[0]}; give only one of {', '.join(names)}")
        return present[0] if present else None

    def finish(self):
        extra = sorted(set(self.data) - self.used, key=lambda k: self.lines.get(k, (0,))[0])
        if extra:
            raise self.error(extra[0], "unknown field")

    def build(self, cls, kwargs):
        try:
            return cls(**kwargs)
        except ValueError as exc:
            msg = str(exc)
            for name in kwargs:
                if msg.startswith(name) or f" {name} " in msg:
                    raise self.error(name, msg) from None
            raise ConfigError(msg, self.path) from None


_RECEIVER_NUMBERS = {
    "wavelength": dict(lo=0.0, lo_open=True),
    "bandwidth": dict(lo=0.0, lo_open=True),
    "optical_efficiency_eta_opt": dict(lo=0.0, hi=1.0, lo_open=True),
    "responsivity_L": dict(lo=0.0, hi=1.0, lo_open=True),
    "dc_gain_f3db": dict(lo=0.0, lo_open=True, allow_inf=True),
}


def _receiver_from_reader(rd):
    kw = {}
    for name, opts in _RECEIVER_NUMBERS.items():
        if rd.has(name):
            kw[name] = rd.number(name, **opts)
    if rd.has("rolloff_order"):
        kw["rolloff_order"] = rd.integer("rolloff_order", lo=1)
    cmrr = rd.one_of("cmrr_linear", "cmrr_db")
    if cmrr == "cmrr_linear":
        kw["cmrr_linear"] = rd.number("cmrr_linear", lo=1.0, lo_open=True, allow_inf=True)
    elif cmrr == "cmrr_db":
        kw["cmrr_linear"] = from_db(rd.number("cmrr_db", lo=0.0, lo_open=True, allow_inf=True))
    if rd.has("noise_shape"):
        shape = rd.raw("noise_shape")
        try:
            kw["noise_shape"] = tuple((float(f), float(m)) for f, m in shape)
        except (TypeError, ValueError):
            raise rd.error("noise_shape", "expected a list of [frequency, multiplier] pairs") from None

    noise = rd.one_of("p_knee", "electronic_noise_in2")
    if noise is None:
        raise rd.error("p_knee", "give p_knee or electronic_noise_in2")
    top = rd.one_of("max_lo_power", "snc_at_max_db")
    if top is None:
        raise rd.error("max_lo_power", "give max_lo_power or snc_at_max_db")
    if noise == "p_knee":
        knee = rd.number("p_knee", lo=0.0)
        if top == "max_lo_power":
            p_max = rd.number("max_lo_power", lo=0.0, lo_open=True)
        else:
            p_max = knee * (from_db(rd.number("snc_at_max_db", lo=0.0, lo_open=True)) - 1.0)
            if not p_max > 0:
                raise rd.error("snc_at_max_db", "needs a positive p_knee")
        try:
            spec = ReceiverSpec.calibrated(knee, p_max, **kw)
        except ValueError as exc:
            raise ConfigError(str(exc), rd.path) from None
    else:
        if top != "max_lo_power":
            raise rd.error("snc_at_max_db", "only valid together with p_knee")
        kw["electronic_noise_in2"] = rd.number("electronic_noise_in2", lo=0.0)
        kw["max_lo_power"] = rd.number("max_lo_power", lo=0.0, lo_open=True)
        spec = rd.build(ReceiverSpec, kw)
    rd.finish()
    return spec


def load_receiver(path):
    data, lines = load_yaml(path)
    return _receiver_from_reader(_Reader(data, lines, path))


def load_link(path):
    data, lines = load_yaml(path)
    rd = _Reader(data, lines, path)
    raw_rec = rd.raw("receiver")
    if isinstance(raw_rec, str):
        rec_path = os.path.join(os.path.dirname(os.path.abspath(path)), raw_rec)
        receiver = load_receiver(rec_path)
    elif isinstance(raw_rec, dict):
        sub_lines = lines["receiver"][1] or {}
        receiver = _receiver_from_reader(_Reader(raw_rec, sub_lines, path, prefix="receiver."))
    else:
        raise rd.error("receiver", "expected a mapping or a path to a receiver config")

    kw = {"receiver": receiver}
    kw["bandwidth"] = rd.number("bandwidth", 1.5e9, lo=0.0, lo_open=True)
    kw["wavelength"] = rd.number("wavelength", 1550e-9, lo=0.0, lo_open=True)
    sig = rd.one_of("signal_power", "signal_photons")
    if sig is None:
        raise rd.error("signal_power", "give signal_power or signal_photons")
    if sig == "signal_power":
        kw["signal_power"] = rd.number("signal_power", lo=0.0)
    else:
        n = rd.number("signal_photons", lo=0.0)
        kw["signal_power"] = n * photon_energy(kw["wavelength"]) * kw["bandwidth"]
    kw["lo_power"] = rd.number("lo_power", lo=0.0, lo_open=True)
    sq = rd.one_of("pump_power", "squeezing_r", "squeezing_db")
    if sq == "pump_power":
        kw["pump_power"] = rd.number("pump_power", lo=0.0)
    elif sq == "squeezing_r":
        kw["squeezing_r"] = rd.number("squeezing_r", lo=0.0)
    elif sq == "squeezing_db":
        kw["squeezing_r"] = rd.number("squeezing_db", lo=0.0) / (20.0 / math.log(10.0))
    if rd.has("mu"):
        kw["mu"] = rd.number("mu", lo=0.0, lo_open=True, allow_inf=True)
    if rd.has("eta_opt"):
        kw["eta_opt"] = rd.number("eta_opt", lo=0.0, hi=1.0, lo_open=True)
    if rd.has("clamp_squeezing"):
        kw["clamp_squeezing"] = rd.boolean("clamp_squeezing")
    rd.finish()
    return rd.build(LinkConfig, kw)


def load_trace_config(path):
    data, lines = load_yaml(path)
    rd = _Reader(data, lines, path)
    kw = {}
    for f in fields(TraceConfig):
        if not rd.has(f.name):
            continue
        if f.name == "rng_seed":
            kw[f.name] = rd.integer(f.name, lo=0)
        else:
            kw[f.name] = rd.number(f.name, allow_inf=f.name == "snc_db")
    rd.finish()
    for name in ("squeezing_r", "efficiency_eta"):
        if name not in kw:
            raise ConfigError("required field is missing", path, None, name)
    return rd.build(TraceConfig, kw)
