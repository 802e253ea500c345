"""Ramped-phase homodyne noise traces and squeezing-level estimation.

Samples are noise powers normalised to the shot-noise level measured with the
same receiver (vacuum plus electronic floor), so a coherent input sits at 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple, Optional

import numpy as np
from scipy import optimize, signal, special, stats

from ._units import from_db, to_db

DB = 10.0 / math.log(10.0)
MIN_PERIODS = 3
#: Smallest level separation (dB) treated as resolved ramp structure.
MIN_RESOLVED_DB = 0.05
#: Separation must exceed this many bootstrap deviations to count as resolved.
RESOLVE_SIGMAS = 3.0
#: Default KDE bandwidth floor as a fraction of the per-sample dB noise.
NOISE_BANDWIDTH_FRACTION = 0.5


class DegenerateTraceError(ValueError):
    """The trace carries no variation to estimate from."""


class NoSqueezingResolved(ValueError):
    """The estimator cannot separate squeezed and antisqueezed levels."""


class TraceFormatError(ValueError):
    """A trace file row or header could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class TraceConfig:
    squeezing_r: float
    efficiency_eta: float
    snc_db: float = math.inf
    ramp_frequency: float = 1.0
    sample_rate: float = 1.0e5
    duration: float = 10.0
    resolution_bandwidth: float = 8.0e6
    video_bandwidth: float = 1.0e5
    rng_seed: int = 0

    def __post_init__(self):
        if self.squeezing_r < 0:
            raise ValueError("squeezing_r must be non-negative")
        if not 0.0 <= self.efficiency_eta <= 1.0:
            raise ValueError("efficiency_eta must lie in [0, 1]")
        if math.isnan(self.snc_db) or self.snc_db <= 0:
            raise ValueError("snc_db must be positive")
        if not self.ramp_frequency > 0:
            raise ValueError("ramp_frequency must be positive")
        if not self.sample_rate > 2.0 * self.ramp_frequency:
            raise ValueError("sample_rate must exceed twice the ramp frequency")
        if self.duration * self.ramp_frequency < MIN_PERIODS:
            raise ValueError(f"duration must cover at least {MIN_PERIODS} ramp periods")
        if not 0 < self.video_bandwidth <= self.resolution_bandwidth:
            raise ValueError("need 0 < video_bandwidth <= resolution_bandwidth")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")

    @property
    def n_samples(self):
        return int(round(self.duration * self.sample_rate))

    @property
    def degrees_of_freedom(self):
        """Video-averaging degrees of freedom ``max(2, round(2 RBW/VBW))``."""
        return max(2, int(round(2.0 * self.resolution_bandwidth / self.video_bandwidth)))

    @property
    def electronic_floor(self):
        """Electronic noise relative to shot noise, ``10^(-SNC/10)``."""
        return 0.0 if math.isinf(self.snc_db) else from_db(-self.snc_db)

    def replace(self, **changes):
        data = asdict(self)
        data.update(changes)
        return TraceConfig(**data)


def phase_variance_ratio(theta, r, eta):
    """Quadrature variance at LO angle ``theta`` relative to vacuum."""
    c2 = np.cos(theta) ** 2
    return eta * (math.exp(-2.0 * r) * c2 + math.exp(2.0 * r) * (1.0 - c2)) + 1.0 - eta


def normalized_level(ratio, floor):
    """Noise power referenced to the measured shot-noise level (vacuum + floor)."""
    return (np.asarray(ratio) + floor) / (1.0 + floor)


def expected_levels_db(r, eta, snc_db=math.inf):
    """``(squeezed, antisqueezed)`` levels in dB that a trace should show."""
    floor = 0.0 if math.isinf(snc_db) else from_db(-snc_db)
    lo = normalized_level(eta * math.exp(-2.0 * r) + 1.0 - eta, floor)
    hi = normalized_level(eta * math.exp(2.0 * r) + 1.0 - eta, floor)
    return to_db(float(lo)), to_db(float(hi))


@dataclass(frozen=True, eq=False)
class NoiseTrace:
    samples: np.ndarray
    timestamps: np.ndarray
    config: Optional[TraceConfig] = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        t = np.asarray(self.timestamps, dtype=float)
        if s.ndim != 1 or s.shape != t.shape:
            raise ValueError("samples and timestamps must be 1-D and the same length")
        if s.size == 0:
            raise ValueError("empty trace")
        if not np.all(s > 0):
            raise ValueError("noise-power samples must be positive")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "timestamps", t)

    def __len__(self):
        return self.samples.size

    @property
    def samples_db(self):
        return DB * np.log(self.samples)


def simulate_trace(config):
    """Chi-squared noise-power samples following the ramped LO phase."""
    n = config.n_samples
    t = np.arange(n) / config.sample_rate
    theta = 2.0 * math.pi * config.ramp_frequency * t
    mean = normalized_level(
        phase_variance_ratio(theta, config.squeezing_r, config.efficiency_eta), config.electronic_floor
    )
    k = config.degrees_of_freedom
    rng = np.random.default_rng(int(config.rng_seed))
    samples = mean * rng.chisquare(k, size=n) / k
    return NoiseTrace(samples, t, config)


class NoiseLevels(NamedTuple):
    squeezed_db: float
    antisqueezed_db: float
    uncertainty_db: float


class SqueezingInversion(NamedTuple):
    r: float
    eta: float

    @property
    def system_loss_db(self):
        return -to_db(self.eta)


def invert_squeezing(levels):
    """Recover ``(r, η)`` from squeezed and antisqueezed levels in dB."""
    sq, anti = levels[0], levels[1]
    if not sq < 0.0 < anti:
        raise ValueError("need squeezed level below 0 dB and antisqueezed level above 0 dB")
    a, b = from_db(sq), from_db(anti)
    if a + b <= 2.0:
        raise ValueError("inconsistent levels: a + b <= 2 cannot come from a lossy squeezed state")
    coth = (b - a) / (a + b - 2.0)
    r = 0.5 * math.log((coth + 1.0) / (coth - 1.0))
    eta = (b - a) / (2.0 * math.sinh(2.0 * r))
    if eta > 1.0 + 1e-9:
        raise ValueError(f"inconsistent levels: implied efficiency {eta:.4g} exceeds 1")
    return SqueezingInversion(r, eta)


# --- estimation -----------------------------------------------------------


def silverman_bandwidth(x):
    x = np.asarray(x)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    spread = min(np.std(x, ddof=1), iqr / 1.349) if iqr > 0 else np.std(x, ddof=1)
    return 0.9 * spread * x.size ** (-0.2)


def estimate_dof(samples_db):
    """Chi-squared degrees of freedom from adjacent-sample differences.

    Neighbouring samples share nearly the same mean, so their dB difference
    has variance ``2 (10/ln10)^2 ψ1(k/2)``.
    """
    d = np.diff(np.asarray(samples_db))
    target = 0.5 * np.var(d) / DB**2
    if target <= 0:
        raise DegenerateTraceError("trace has no sample-to-sample variation")
    # trigamma is decreasing; k/2 between 1e-3 and 1e7
    fn = lambda logh: math.log(special.polygamma(1, math.exp(logh))) - math.log(target)
    lo, hi = math.log(1e-3), math.log(1e7)
    if fn(hi) > 0:
        return 2e7
    if fn(lo) < 0:
        return 2.0
    return max(2.0, 2.0 * math.exp(optimize.brentq(fn, lo, hi)))


class _Grid(NamedTuple):
    x: np.ndarray
    dx: float


def _gauss_kernel(h, dx, order):
    half = int(math.ceil(5.0 * h / dx))
    u = np.arange(-half, half + 1) * dx
    g = np.exp(-0.5 * (u / h) ** 2) / (h * math.sqrt(2.0 * math.pi))
    return g if order == 0 else -u / h**2 * g


def _noise_kernel(k, dx):
    """Density of ``10 log10(χ²_k / k)`` sampled on offsets of step ``dx``."""
    sd = DB * math.sqrt(special.polygamma(1, k / 2.0))
    half = int(math.ceil(8.0 * sd / dx))
    z = np.arange(-half, half + 1) * dx
    x = k * np.exp(z / DB)
    pdf = np.exp(stats.chi2.logpdf(x, k)) * x / DB
    return pdf * dx


def _extremum(values, x, pick, min_frac):
    """Sub-bin position of the outermost significant maximum of ``values``.

    Significance is relative to the largest maximum of this signed curve, so
    the weak squeezed-side shoulder of a strongly skewed dB distribution is
    not judged against the antisqueezed pile-up.
    """
    scale = np.max(values)
    if not scale > 0:
        return None
    peaks, _ = signal.find_peaks(values, prominence=min_frac * scale, height=0.0)
    if peaks.size == 0:
        return None
    i = peaks[0] if pick == "first" else peaks[-1]
    if 0 < i < values.size - 1:
        y0, y1, y2 = values[i - 1 : i + 2]
        denom = y0 - 2.0 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        return x[i] + np.clip(shift, -0.5, 0.5) * (x[1] - x[0])
    return x[i]


def _features(density_or_slope, grid, feature, min_frac):
    """Outermost features: derivative extrema (shoulders) or density peaks."""
    if feature == "derivative":
        left = _extremum(density_or_slope, grid.x, "first", min_frac)
        right = _extremum(-density_or_slope, grid.x, "last", min_frac)
    else:
        left = _extremum(density_or_slope, grid.x, "first", min_frac)
        right = _extremum(density_or_slope, grid.x, "last", min_frac)
    return left, right


def _arcsine_masses(lo_db, hi_db, grid):
    """Bin masses of ``10 log10(a + (b-a) sin²θ)`` for uniform θ."""
    edges = np.concatenate([grid.x - 0.5 * grid.dx, [grid.x[-1] + 0.5 * grid.dx]])
    if hi_db - lo_db < 1e-6:
        # collapse to a point mass split linearly between neighbours
        pos = (0.5 * (lo_db + hi_db) - grid.x[0]) / grid.dx
        i = int(np.clip(math.floor(pos), 0, grid.x.size - 2))
        w = np.clip(pos - i, 0.0, 1.0)
        m = np.zeros(grid.x.size)
        m[i], m[i + 1] = 1.0 - w, w
        return m
    a, b = from_db(lo_db), from_db(hi_db)
    u = (np.power(10.0, edges / 10.0) - a) / (b - a)
    cdf = (2.0 / math.pi) * np.arcsin(np.sqrt(np.clip(u, 0.0, 1.0)))
    return np.diff(cdf)


class _ForwardModel:
    """Predicted KDE features for given true levels, including sample noise and kernel width."""

    def __init__(self, grid, k, h, feature, min_frac):
        self.grid = grid
        self.feature = feature
        self.min_frac = min_frac
        kern = _gauss_kernel(h, grid.dx, 1 if feature == "derivative" else 0)
        noise = _noise_kernel(k, grid.dx)
        self.kernel = np.convolve(noise, kern)

    def features(self, lo_db, hi_db):
        m = _arcsine_masses(lo_db, hi_db, self.grid)
        curve = signal.fftconvolve(m, self.kernel, mode="same")
        return _features(curve, self.grid, self.feature, self.min_frac)


def _kde_curve(y, grid, h, feature):
    counts, _ = np.histogram(y, bins=grid.x.size, range=(grid.x[0] - 0.5 * grid.dx, grid.x[-1] + 0.5 * grid.dx))
    kern = _gauss_kernel(h, grid.dx, 1 if feature == "derivative" else 0)
    return signal.fftconvolve(counts / y.size, kern, mode="same")


def _solve_levels(model, observed, guess):
    """Find true ``(lo, hi)`` whose predicted features match the observed ones."""
    c0 = 0.5 * (guess[0] + guess[1])
    w0 = max(0.5 * (guess[1] - guess[0]), 1e-3)

    def resid(p):
        f = model.features(p[0] - p[1], p[0] + p[1])
        if f[0] is None or f[1] is None:
            return np.array([1e3, 1e3])
        return np.array([f[0] - observed[0], f[1] - observed[1]])

    sol = optimize.least_squares(
        resid, [c0, w0], bounds=([-np.inf, 0.0], [np.inf, np.inf]), diff_step=1e-3, xtol=1e-10, ftol=1e-12
    )
    c, w = sol.x
    return c - w, c + w


class _Estimator:
    def __init__(self, y, k, bandwidth, feature, min_frac, grid_points):
        self.k = k
        self.feature = feature
        self.min_frac = min_frac
        noise_sd = DB * math.sqrt(special.polygamma(1, k / 2.0))
        if bandwidth is None:
            # structure finer than the per-sample noise is not recoverable, so
            # narrower kernels only add variance to the derivative
            self.h = max(silverman_bandwidth(y), NOISE_BANDWIDTH_FRACTION * noise_sd)
        else:
            self.h = float(bandwidth)
        if not self.h > 0:
            raise DegenerateTraceError("zero KDE bandwidth")
        pad = 6.0 * (self.h + noise_sd)
        lo, hi = float(np.min(y)) - pad, float(np.max(y)) + pad
        x = np.linspace(lo, hi, grid_points)
        self.grid = _Grid(x, x[1] - x[0])
        self.model = _ForwardModel(self.grid, k, self.h, feature, min_frac)
        self._offsets = self.model.features(0.0, 0.0)

    def raw_features(self, y):
        curve = _kde_curve(y, self.grid, self.h, self.feature)
        return _features(curve, self.grid, self.feature, self.min_frac)

    def levels(self, y):
        left, right = self.raw_features(y)
        if left is None or right is None or not right > left:
            raise NoSqueezingResolved("fewer than two KDE features found")
        guess = (left - self._offsets[0], right - self._offsets[1])
        return _solve_levels(self.model, (left, right), guess)


def estimate_noise_levels(
    trace,
    n_samples=100_000,
    seed=0,
    bandwidth=None,
    feature="derivative",
    n_bootstrap=50,
    dof=None,
    min_prominence=0.10,
    grid_points=2048,
):
    """Squeezed and antisqueezed levels (dB) from a ramped-phase trace.

    A seeded subsample is turned into a Gaussian KDE on the dB axis; the
    outermost extrema of its derivative mark the level shoulders.  Their
    positions are mapped back to true levels through a forward model of the
    arcsine level distribution blurred by chi-squared sample noise and the
    kernel.  ``uncertainty_db`` is the larger bootstrap standard deviation of
    the two levels.
    """
    if feature not in ("derivative", "density"):
        raise ValueError("feature must be 'derivative' or 'density'")
    y_all = trace.samples_db
    if n_samples > y_all.size:
        raise ValueError(f"n_samples {n_samples} exceeds trace length {y_all.size}")
    if np.ptp(y_all) == 0.0:
        raise DegenerateTraceError("trace is constant")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(y_all.size, size=n_samples, replace=False))
    y = y_all[idx]
    if dof is None:
        dof = trace.config.degrees_of_freedom if trace.config is not None else estimate_dof(y_all)
    est = _Estimator(y, dof, bandwidth, feature, min_prominence, grid_points)
    lo, hi = est.levels(y)
    if hi - lo < MIN_RESOLVED_DB:
        raise NoSqueezingResolved(f"level separation {hi - lo:.3g} dB is below {MIN_RESOLVED_DB} dB")
    spread = math.nan
    if n_bootstrap > 1:
        boot = []
        for _ in range(n_bootstrap):
            yb = y[rng.integers(0, y.size, size=y.size)]
            try:
                boot.append(est.levels(yb))
            except NoSqueezingResolved:
                continue
        if len(boot) < 2:
            raise NoSqueezingResolved("bootstrap resamples do not resolve two levels")
        boot = np.array(boot)
        spread = float(np.max(np.std(boot, axis=0, ddof=1)))
        # the features respond to the squared separation, so test it there
        sep_sq = np.diff(boot, axis=1)[:, 0] ** 2
        if (hi - lo) ** 2 < RESOLVE_SIGMAS * np.std(sep_sq, ddof=1):
            raise NoSqueezingResolved(f"level separation {hi - lo:.3g} dB is not significant under bootstrap")
    return NoiseLevels(float(lo), float(hi), spread)


# --- CSV i/o --------------------------------------------------------------

_HEADER = ("time (s)", "noise_power (SNL)")


def write_trace_csv(trace, path, extra_comments=()):
    with open(path, "w", newline="") as fh:
        for line in extra_comments:
            fh.write(f"# {line}\n")
        if trace.config is not None:
            for f in fields(TraceConfig):
                fh.write(f"# {f.name}: {getattr(trace.config, f.name)!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_HEADER)
        for t, s in zip(trace.timestamps, trace.samples):
            w.writerow([repr(float(t)), repr(float(s))])


def _parse_comment_config(pairs):
    names = {f.name for f in fields(TraceConfig)}
    kw = {}
    for key, (value, line) in pairs.items():
        if key not in names:
            continue
        try:
            kw[key] = int(value) if key == "rng_seed" else float(value)
        except ValueError:
            raise TraceFormatError(f"bad value for {key}: {value!r}", line) from None
    required = {"squeezing_r", "efficiency_eta"}
    if not required <= kw.keys():
        return None
    try:
        return TraceConfig(**kw)
    except ValueError as exc:
        raise TraceFormatError(f"embedded config invalid: {exc}") from None


def read_trace_csv(path):
    """Read a trace file; ``# key: value`` comment lines restore the config."""
    pairs, times, samples = {}, [], []
    header_seen = False
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, _, value = body.partition(":")
                    pairs[key.strip()] = (value.strip(), lineno)
                continue
            cells = [c.strip() for c in line.split(",")]
            if not header_seen:
                header_seen = True
                try:
                    [float(c) for c in cells]
                except ValueError:
                    if len(cells) != 2:
                        raise TraceFormatError(f"expected 2 header columns, got {len(cells)}", lineno) from None
                    continue
            if len(cells) != 2:
                raise TraceFormatError(f"expected 2 columns, got {len(cells)}", lineno)
            try:
                t, s = float(cells[0]), float(cells[1])
            except ValueError:
                raise TraceFormatError(f"non-numeric value in {line!r}", lineno) from None
            if not (math.isfinite(t) and math.isfinite(s)) or s <= 0:
                raise TraceFormatError(f"noise power must be finite and positive, got {cells[1]}", lineno)
            times.append(t)
            samples.append(s)
    if not samples:
        raise TraceFormatError("no data rows")
    return NoiseTrace(np.array(samples), np.array(times), _parse_comment_config(pairs))
