"""End-to-end squeezed-light link evaluation, sweeps and LO-power optimisation."""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from ._units import r_from_squeezing_db, squeezing_db, to_db
from .capacity import (
    CapacityReport,
    c_holevo,
    c_shannon_1q,
    c_shannon_2q,
    c_squeezed,
    energy_per_bit_coherent,
    energy_per_bit_squeezed,
    photons_per_mode,
    pump_power as _pump_power,
)
from .receiver import ReceiverSpec, SaturationError, detection_efficiency, p_knee, snc

#: Tolerance on the observable-squeezing cap, in dB.
CAP_TOL_DB = 1e-9

INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class InfeasibleError(ValueError):
    """The requested operating point cannot be realised by the receiver."""


class MultimodalWarning(UserWarning):
    """The LO-power objective has more than one local minimum on the scan grid."""


def squeezing_from_pump(pump, mu):
    """Squeezing parameter ``r = μ √P_pump`` (low-conversion limit)."""
    if pump < 0:
        raise ValueError("pump power must be non-negative")
    return mu * math.sqrt(pump)


def pump_from_squeezing(r, mu):
    """Pump power ``(r/μ)²`` needed for squeezing ``r``."""
    if r < 0 or mu <= 0:
        raise ValueError("need r >= 0 and mu > 0")
    return _pump_power(r, mu)


def observable_squeezing_cap(eta):
    """Largest observable squeezing in dB at efficiency ``eta``, ``-10 log10(1-η)``."""
    if not 0.0 <= eta < 1.0:
        raise ValueError("observable squeezing is unbounded at eta = 1; need eta in [0, 1)")
    return -to_db(1.0 - eta)


@dataclass(frozen=True)
class LinkConfig:
    """One transceiver operating point.

    Give either ``pump_power`` (with ``mu``) or ``squeezing_r``; neither means
    coherent light.  ``mu = inf`` models squeezing with no pump cost.
    ``eta_opt`` overrides the receiver's optical efficiency when set.
    """

    signal_power: float
    lo_power: float
    receiver: ReceiverSpec
    bandwidth: float = 1.5e9
    wavelength: float = 1550e-9
    pump_power: Optional[float] = None
    squeezing_r: Optional[float] = None
    mu: Optional[float] = None
    eta_opt: Optional[float] = None
    clamp_squeezing: bool = False

    def __post_init__(self):
        if self.pump_power is not None and self.squeezing_r is not None:
            raise ValueError("specify pump_power or squeezing_r, not both")
        if self.signal_power < 0 or self.lo_power < 0:
            raise ValueError("powers must be non-negative")
        if self.pump_power is not None and self.pump_power < 0:
            raise ValueError("pump power must be non-negative")
        if self.squeezing_r is not None and self.squeezing_r < 0:
            raise ValueError("squeezing_r must be non-negative")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        needs_mu = (self.pump_power or 0.0) > 0 or (self.squeezing_r or 0.0) > 0
        if needs_mu and not (self.mu is not None and self.mu > 0):
            raise ValueError("squeezing requires a positive parametric gain coefficient mu")
        if self.eta_opt is not None and not 0.0 < self.eta_opt <= 1.0:
            raise ValueError("eta_opt must lie in (0, 1]")

    @property
    def requested_r(self):
        if self.pump_power is not None:
            return squeezing_from_pump(self.pump_power, self.mu) if self.pump_power > 0 else 0.0
        return self.squeezing_r or 0.0

    def replace(self, **changes):
        return replace(self, **changes)

    def snapshot(self):
        """JSON-friendly copy of every field."""
        data = asdict(self)
        data["receiver"] = {k: v for k, v in asdict(self.receiver).items()}
        return _jsonable(data)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def link_efficiency(config, lo_power=None):
    lo = config.lo_power if lo_power is None else lo_power
    if lo > config.receiver.max_lo_power * (1.0 + 1e-12):
        raise SaturationError(f"LO power {lo:.4g} W exceeds receiver maximum {config.receiver.max_lo_power:.4g} W")
    try:
        return detection_efficiency(config.receiver, lo, config.eta_opt)
    except ValueError as exc:
        raise InfeasibleError(str(exc)) from None


def _capped_r(r, eta, clamp):
    """Return ``(r_used, truncated)`` under the observable-squeezing cap."""
    r_cap = r_from_squeezing_db(observable_squeezing_cap(eta))
    if squeezing_db(r) <= squeezing_db(r_cap) + CAP_TOL_DB:
        return r, False
    if clamp:
        return r_cap, True
    return r, True


def evaluate_link(config):
    """Capacities, rates and energies per bit at one operating point."""
    eta = link_efficiency(config)
    r, truncated = _capped_r(config.requested_r, eta, config.clamp_squeezing)
    if truncated and not config.clamp_squeezing:
        raise InfeasibleError(
            f"requested squeezing {squeezing_db(r):.3f} dB exceeds the observable cap "
            f"{observable_squeezing_cap(eta):.3f} dB at eta = {eta:.4f}"
        )
    n = photons_per_mode(config.signal_power, config.bandwidth, config.wavelength)
    mu = config.mu if config.mu is not None else math.inf
    pump = _pump_power(r, mu)
    s_s, s_lo, b, lam = config.signal_power, config.lo_power, config.bandwidth, config.wavelength
    return CapacityReport(
        n_photons=n,
        squeezing_r=r,
        eta=eta,
        bandwidth=b,
        c_s1=c_shannon_1q(n),
        c_s2=c_shannon_2q(n),
        c_sq=c_squeezed(n, r, eta),
        c_hol=c_holevo(n),
        e_b_coh=energy_per_bit_coherent(s_s, s_lo, b, lam) if n > 0 else math.inf,
        e_b_sq=energy_per_bit_squeezed(s_s, s_lo, r, mu, eta, b, lam) if n > 0 else math.inf,
        p_total=s_s + s_lo + pump,
        pump_power=pump,
        snc_db=snc(config.receiver, s_lo),
    )


class Variant(NamedTuple):
    """A squeezer setting: parametric gain ``mu`` (W^-1/2) and pump power (W)."""

    mu: float
    pump_power: float

    @property
    def label(self):
        return f"mu{self.mu:g}"


#: The three squeezer settings drawn against signal power.
DEFAULT_SIGNAL_VARIANTS = (Variant(10.0, 1e-3), Variant(72.0, 1e-3), Variant(224.0, 1.05e-4))
DEFAULT_PUMP_MUS = (10.0, 72.0, 224.0)


def default_signal_grid(points=61):
    return np.logspace(math.log10(10e-9), math.log10(10e-3), points)


def default_pump_grid(points=81):
    return np.logspace(-6, -2, points)


@dataclass
class SweepResult:
    """Columns of a parameter sweep, keyed by name with units."""

    axis_name: str
    axis_unit: str
    axis: np.ndarray
    columns: dict = field(default_factory=dict)
    units: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def add(self, name, unit, values):
        values = np.asarray(values, dtype=float)
        if values.shape != self.axis.shape:
            raise ValueError(f"column {name!r} has {values.size} rows for {self.axis.size} axis points")
        self.columns[name] = values
        self.units[name] = unit

    @property
    def rows(self):
        return [
            {self.axis_name: float(x), **{k: float(v[i]) for k, v in self.columns.items()}}
            for i, x in enumerate(self.axis)
        ]

    def header(self):
        return [f"{self.axis_name} ({self.axis_unit})"] + [f"{k} ({self.units[k]})" for k in self.columns]

    def write_csv(self, path, comments=()):
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header())
            for i, x in enumerate(self.axis):
                writer.writerow([repr(float(x))] + [repr(float(v[i])) for v in self.columns.values()])

    def write_metadata(self, path):
        with open(path, "w") as fh:
            json.dump(_jsonable(self.metadata), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("sweep grid must be a non-empty 1-D sequence")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("sweep grid must be strictly increasing")
    if np.any(grid < 0):
        raise ValueError("sweep grid values must be non-negative")
    return grid


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _variant_point(config, eta, n, mu, pump):
    """``(c_sq, e_b_sq, squeezing_db, truncated)`` for one squeezer setting."""
    r = squeezing_from_pump(pump, mu)
    r_used, truncated = _capped_r(r, eta, config.clamp_squeezing)
    if truncated and not config.clamp_squeezing:
        return math.nan, math.nan, squeezing_db(r), True
    c = c_squeezed(n, r_used, eta)
    e_b = energy_per_bit_squeezed(
        config.signal_power, config.lo_power, r_used, mu, eta, config.bandwidth, config.wavelength
    )
    return c, e_b, squeezing_db(r_used), truncated


def _cutoff_metadata(config, eta, mus):
    cap_db = observable_squeezing_cap(eta)
    r_cap = r_from_squeezing_db(cap_db)
    return {
        "eta": eta,
        "observable_squeezing_cap_db": cap_db,
        "cutoff_pump_power_W": {f"mu{mu:g}": pump_from_squeezing(r_cap, mu) for mu in mus},
    }


def sweep_signal_power(config, grid=None, variants=DEFAULT_SIGNAL_VARIANTS, workers=None):
    """Rates versus signal power for coherent light, each squeezer variant and the Holevo bound."""
    grid = _check_grid(default_signal_grid() if grid is None else grid)
    eta = link_efficiency(config)

    def point(s_s):
        cfg = config.replace(signal_power=float(s_s), pump_power=None, squeezing_r=None)
        n = photons_per_mode(cfg.signal_power, cfg.bandwidth, cfg.wavelength)
        base = [c_shannon_1q(n), c_shannon_2q(n), c_holevo(n)]
        base.append(energy_per_bit_coherent(cfg.signal_power, cfg.lo_power, cfg.bandwidth, cfg.wavelength))
        return base, [_variant_point(cfg, eta, n, v.mu, v.pump_power) for v in variants]

    results = _map(point, grid, workers)
    out = SweepResult("signal_power", "W", grid)
    _fill_base(out, config.bandwidth, [r[0] for r in results])
    for j, v in enumerate(variants):
        _fill_variant(out, v.label, config.bandwidth, [r[1][j] for r in results])
    out.metadata = {
        "sweep": "signal_power",
        "config": config.snapshot(),
        "variants": [{"mu": v.mu, "pump_power_W": v.pump_power} for v in variants],
        **_cutoff_metadata(config, eta, [v.mu for v in variants]),
    }
    return out


def sweep_pump_power(config, grid=None, mus=DEFAULT_PUMP_MUS, workers=None):
    """Rate and energy per bit versus pump power for each ``mu``; rows past the cap are truncated."""
    grid = _check_grid(default_pump_grid() if grid is None else grid)
    eta = link_efficiency(config)
    cfg = config.replace(pump_power=None, squeezing_r=None)
    n = photons_per_mode(cfg.signal_power, cfg.bandwidth, cfg.wavelength)
    base = [c_shannon_1q(n), c_shannon_2q(n), c_holevo(n)]
    base.append(energy_per_bit_coherent(cfg.signal_power, cfg.lo_power, cfg.bandwidth, cfg.wavelength))

    def point(pump):
        return [_variant_point(cfg, eta, n, mu, float(pump)) for mu in mus]

    results = _map(point, grid, workers)
    out = SweepResult("pump_power", "W", grid)
    _fill_base(out, config.bandwidth, [base] * grid.size)
    for j, mu in enumerate(mus):
        _fill_variant(out, f"mu{mu:g}", config.bandwidth, [r[j] for r in results])
    meta = _cutoff_metadata(config, eta, mus)
    r_cap = r_from_squeezing_db(meta["observable_squeezing_cap_db"])
    meta["cutoff_squeezing_db"] = {f"mu{mu:g}": squeezing_db(r_cap) for mu in mus}
    out.metadata = {"sweep": "pump_power", "config": config.snapshot(), "mus": list(mus), **meta}
    return out


def _fill_base(out, bandwidth, rows):
    rows = np.array(rows, dtype=float)
    out.add("c_s1", "bit/mode", rows[:, 0])
    out.add("rate_s1", "bit/s", bandwidth * rows[:, 0])
    out.add("c_s2", "bit/mode", rows[:, 1])
    out.add("rate_s2", "bit/s", bandwidth * rows[:, 1])
    out.add("c_hol", "bit/mode", rows[:, 2])
    out.add("rate_hol", "bit/s", bandwidth * rows[:, 2])
    out.add("e_b_coh", "J/bit", rows[:, 3])


def _fill_variant(out, label, bandwidth, rows):
    rows = np.array(rows, dtype=float)
    out.add(f"c_sq_{label}", "bit/mode", rows[:, 0])
    out.add(f"rate_sq_{label}", "bit/s", bandwidth * rows[:, 0])
    out.add(f"e_b_sq_{label}", "J/bit", rows[:, 1])
    out.add(f"squeezing_{label}", "dB", rows[:, 2])
    out.add(f"truncated_{label}", "flag", rows[:, 3])


class LoOptimum(NamedTuple):
    s_lo: float
    e_b: float
    multimodal: bool
    evaluations: int


def golden_section(fn, lo, hi, xtol):
    """Minimise a unimodal ``fn`` on ``[lo, hi]`` to absolute tolerance ``xtol``.

    Returns the best evaluated ``(x, f(x), evaluations)``; with an infeasible
    (``inf``) region next to the minimum the bracket midpoint may itself be
    infeasible, so it is only a candidate.
    """
    a, b = lo, hi
    c = b - INV_GOLDEN * (b - a)
    d = a + INV_GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    best = min((fc, c), (fd, d))
    nfev = 2
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_GOLDEN * (b - a)
            fc = fn(c)
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + INV_GOLDEN * (b - a)
            fd = fn(d)
            best = min(best, (fd, d))
        nfev += 1
    x = 0.5 * (a + b)
    best = min(best, (fn(x), x))
    return best[1], best[0], nfev + 1


def _count_local_minima(values):
    finite = np.isfinite(values)
    count = 0
    for i in range(1, len(values) - 1):
        if finite[i - 1 : i + 2].all() and values[i] < values[i - 1] and values[i] < values[i + 1]:
            count += 1
    return count


def optimize_lo_power(config, bounds=None, xtol=1e-9, n_scan=64):
    """LO power minimising the squeezed energy per bit.

    A log-spaced scan brackets the minimum (and flags multimodality), then
    golden-section search refines it to ``xtol`` watts.
    """
    rec = config.receiver
    knee = p_knee(rec)
    lo_b, hi_b = bounds if bounds is not None else (knee, rec.max_lo_power)
    lo_b = max(lo_b, knee * (1.0 + 1e-9), np.finfo(float).tiny)
    hi_b = min(hi_b, rec.max_lo_power)
    if not hi_b > lo_b:
        raise InfeasibleError(f"empty LO power interval ({lo_b:.4g}, {hi_b:.4g}) W")
    mu = config.mu if config.mu is not None else math.inf
    r_req = config.requested_r

    def energy(s_lo):
        eta = link_efficiency(config, s_lo)
        r, truncated = _capped_r(r_req, eta, config.clamp_squeezing)
        if truncated and not config.clamp_squeezing:
            return math.inf
        return energy_per_bit_squeezed(
            config.signal_power, s_lo, r, mu, eta, config.bandwidth, config.wavelength
        )

    scan = np.geomspace(lo_b, hi_b, n_scan)
    values = np.array([energy(x) for x in scan])
    if not np.isfinite(values).any():
        raise InfeasibleError("no LO power in the interval supports the requested squeezing")
    multimodal = _count_local_minima(values) > 1
    if multimodal:
        warnings.warn("energy per bit is multimodal in LO power; returning the best basin", MultimodalWarning)
    i = int(np.nanargmin(values))
    a = scan[max(i - 1, 0)]
    b = scan[min(i + 1, n_scan - 1)]
    x, fx, nfev = golden_section(energy, a, b, xtol)
    if values[i] < fx:
        x, fx = float(scan[i]), float(values[i])
    return LoOptimum(float(x), float(fx), multimodal, nfev + n_scan)
