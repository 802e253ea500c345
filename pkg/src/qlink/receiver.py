"""Balanced coherent receiver: coupler imbalance, photodetection, electronic noise.

RF powers are in consistent arbitrary units (W^2 of optical-power-equivalent
photocurrent); optical powers are in watts.  The detection bandwidth ``B``
sets the integration time ``T = 1/B`` used in ``ħω/T``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from ._units import VACUUM_VARIANCE, to_db
from .gaussian import GaussianState, PhotonFluxContext, mean_photon_number, quadrature_mean, quadrature_variance

#: LO-to-signal power ratio below which the high-LO approximation is flagged.
HIGH_LO_RATIO = 100.0


class HighLOWarning(UserWarning):
    """The high-LO approximation is being used outside its regime."""


class SaturationError(ValueError):
    """LO power above the receiver's maximum."""


@dataclass(frozen=True)
class CouplerParams:
    """Coupler ``U = [[α, β], [-β, α]] / √2`` with ``|α|²+|β|² = 2``, ``Im(α*β) = 0``."""

    alpha: complex = 1.0
    beta: complex = 1.0

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        if abs(abs(a) ** 2 + abs(b) ** 2 - 2.0) > 1e-9:
            raise ValueError(f"|alpha|^2 + |beta|^2 must equal 2, got {abs(a) ** 2 + abs(b) ** 2:.12g}")
        if abs((a.conjugate() * b).imag) > 1e-9:
            raise ValueError("Im{alpha* beta} must vanish for a lossless coupler")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def from_split(cls, alpha_power, phase=0.0):
        """Coupler sending ``|α|² = alpha_power`` (out of 2) to the + port."""
        a = math.sqrt(alpha_power) * cmath.exp(1j * phase)
        b = math.sqrt(2.0 - alpha_power) * cmath.exp(1j * phase)
        return cls(a, b)

    @classmethod
    def from_cmrr(cls, cmrr):
        """Real coupler whose imbalance gives exactly ``cmrr`` (linear)."""
        if cmrr < 1.0:
            raise ValueError("CMRR must be >= 1")
        sigma = 0.0 if math.isinf(cmrr) else 2.0 / math.sqrt(cmrr)
        return cls.from_split(1.0 + sigma / 2.0)

    @property
    def sigma(self):
        return abs(self.alpha) ** 2 - abs(self.beta) ** 2

    @property
    def pi(self):
        return 2.0 * abs(self.alpha) * abs(self.beta)

    def unitary(self):
        a, b = self.alpha, self.beta
        return np.array([[a, b], [-b, a]]) / math.sqrt(2.0)


@dataclass(frozen=True)
class FieldTone:
    """Classical optical tone.

    ``rin`` is the relative intensity noise spectral density in 1/Hz, so the
    power variance over ``T = 1/B`` is ``power^2 * rin * B``.  ``None`` means
    shot-noise limited (``rin = ħω / power``).
    """

    power: float
    rin: Optional[float] = None
    phase: float = 0.0

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("tone power must be non-negative")
        if self.rin is not None and self.rin < 0:
            raise ValueError("RIN must be non-negative")

    def intensity_variance(self, ctx):
        shot = self.power * ctx.power_per_photon
        if self.rin is None:
            return shot
        excess = self.power**2 * self.rin / ctx.integration_time
        if excess < shot * (1.0 - 1e-9):
            raise ValueError("RIN below the shot-noise floor ħω/P is unphysical for a classical tone")
        return excess

    def noise_per_watt(self, ctx):
        """``<Δs²>/s``; equals ħω/T for a shot-noise-limited (or dark) tone."""
        if self.power == 0.0 or self.rin is None:
            return ctx.power_per_photon
        return self.intensity_variance(ctx) / self.power

    def amplitude_variance(self, ctx):
        """Amplitude-quadrature variance of the equivalent Gaussian state."""
        return VACUUM_VARIANCE * self.noise_per_watt(ctx) / ctx.power_per_photon


@dataclass(frozen=True)
class ReceiverSpec:
    """Figures of merit of a balanced receiver.

    ``electronic_noise_in2`` is the output-referred electronic noise variance in
    the same units as ``Π²L²(ħω/T)s_LO``.  ``noise_shape`` optionally lists
    ``(frequency, multiplier)`` pairs applied to it; between points the
    multiplier is interpolated linearly, beyond them it is held constant.
    """

    electronic_noise_in2: float
    max_lo_power: float
    wavelength: float = 1550e-9
    bandwidth: float = 1.0e9
    optical_efficiency_eta_opt: float = 1.0
    responsivity_L: float = 1.0
    dc_gain_f3db: float = math.inf
    cmrr_linear: float = math.inf
    rolloff_order: int = 1
    noise_shape: Optional[tuple] = field(default=None)

    def __post_init__(self):
        if self.electronic_noise_in2 < 0:
            raise ValueError("electronic_noise_in2 must be non-negative")
        for name in ("max_lo_power", "wavelength", "bandwidth", "dc_gain_f3db"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("optical_efficiency_eta_opt", "responsivity_L"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        if not self.cmrr_linear >= 1.0:
            raise ValueError("cmrr_linear must be >= 1")
        if self.rolloff_order not in (1, 2):
            raise ValueError("rolloff_order must be 1 or 2")
        if self.noise_shape is not None:
            shape = tuple((float(f), float(m)) for f, m in self.noise_shape)
            freqs = [f for f, _ in shape]
            if any(b <= a for a, b in zip(freqs, freqs[1:])) or any(m <= 0 for _, m in shape):
                raise ValueError("noise_shape needs increasing frequencies and positive multipliers")
            object.__setattr__(self, "noise_shape", shape)

    @classmethod
    def calibrated(cls, p_knee, max_lo_power, **kwargs):
        """Spec whose electronic noise reproduces the given knee power."""
        proto = cls(electronic_noise_in2=0.0, max_lo_power=max_lo_power, **kwargs)
        in2 = p_knee * proto.shot_noise_gain(0.0) * (1.0 - 1.0 / proto.cmrr_linear)
        return cls(electronic_noise_in2=in2, max_lo_power=max_lo_power, **kwargs)

    @property
    def flux(self):
        return PhotonFluxContext.from_wavelength(self.wavelength, self.bandwidth)

    def coupler(self):
        return CouplerParams.from_cmrr(self.cmrr_linear)

    def gain(self, f=0.0):
        """Current-domain efficiency ``L(f)``; ``L(f_3dB) = L(0)/2``."""
        if math.isinf(self.dc_gain_f3db):
            return self.responsivity_L
        n = self.rolloff_order
        corner = self.dc_gain_f3db / 3.0 ** (1.0 / (2 * n))
        return self.responsivity_L / math.sqrt(1.0 + (f / corner) ** (2 * n))

    def electronic_noise(self, f=0.0):
        if self.noise_shape is None:
            return self.electronic_noise_in2
        freqs, mults = zip(*self.noise_shape)
        return self.electronic_noise_in2 * float(np.interp(f, freqs, mults))

    def shot_noise_gain(self, f=0.0):
        """``Π² L(f)² ħω/T``: RF noise per watt of LO from signal-port vacuum."""
        pi_sq = 4.0 * (1.0 - 1.0 / self.cmrr_linear)
        return pi_sq * self.gain(f) ** 2 * self.flux.power_per_photon


class BalancedOutput(NamedTuple):
    signal_power: float
    noise_power: float
    #: neglected high-LO terms relative to ``noise_power`` (not included)
    dropped_fraction: float


class FrequencyPoint(NamedTuple):
    gain: float
    snc_db: float
    nep: float


def cmrr_from_coupler(coupler):
    """Theoretical CMRR ``(Σ²+Π²)/Σ²``; ``inf`` for a perfectly balanced coupler."""
    sigma_sq = coupler.sigma**2
    if sigma_sq == 0.0:
        return math.inf
    return (sigma_sq + coupler.pi**2) / sigma_sq


def cmrr_measured(p_unbalanced, p_balanced, lo_step_db=0.0):
    """Experimental CMRR in dB, ``10 log10(P_unb / 4 P_bal)``.

    ``lo_step_db`` is the optical LO power increase applied during the balanced
    measurement; RF power scales quadratically with it, so twice its value is
    added back.
    """
    if p_unbalanced <= 0 or p_balanced <= 0:
        raise ValueError("RF powers must be positive")
    return to_db(p_unbalanced / (4.0 * p_balanced)) + 2.0 * lo_step_db


def _check_high_lo(s_sig, s_lo):
    if s_sig > 0 and s_lo < HIGH_LO_RATIO * s_sig:
        warnings.warn(
            f"LO/signal power ratio {s_lo / s_sig:.3g} < {HIGH_LO_RATIO:g}: high-LO approximation is loose",
            HighLOWarning,
            stacklevel=3,
        )


def balanced_output(signal, lo, coupler, spec):
    """Semi-classical RF signal and noise powers at the balanced output.

    Noise is ``Π²L²(<Δs_LO²>/CMRR + s_LO <Δs_s²>/s_s) + i_n²``: signal shot
    noise, LO intensity noise leaking through the finite CMRR, and electronics.
    """
    ctx = spec.flux
    _check_high_lo(signal.power, lo.power)
    pl2 = coupler.pi**2 * spec.responsivity_L**2
    inv_cmrr = 1.0 / cmrr_from_coupler(coupler)
    var_lo = lo.intensity_variance(ctx)
    beat = math.cos(signal.phase - lo.phase) ** 2
    p_sig = 4.0 * pl2 * signal.power * lo.power * beat
    p_noise = pl2 * (var_lo * inv_cmrr + lo.power * signal.noise_per_watt(ctx)) + spec.electronic_noise_in2
    dropped = pl2 * (inv_cmrr * signal.intensity_variance(ctx) + signal.power * lo.noise_per_watt(ctx))
    return BalancedOutput(p_sig, p_noise, dropped / p_noise if p_noise > 0 else 0.0)


def quantum_balanced_output(signal, lo, coupler, spec):
    """Quantum RF signal and noise powers; the noise uses the signal's own quadrature variance.

    The LO phase selects the measured signal quadrature.  With
    ``q_LO² = s_LO T/ħω`` the noise is
    ``4Π²L²(ħω/T)² q_LO² (V_LO/CMRR + V_s(θ)) + i_n²``.
    """
    if not isinstance(signal, GaussianState):
        raise TypeError("signal must be a GaussianState")
    ctx = spec.flux
    hw_t = ctx.power_per_photon
    n_sig = mean_photon_number(signal)
    _check_high_lo(n_sig * hw_t, lo.power)
    pl2 = coupler.pi**2 * spec.responsivity_L**2
    inv_cmrr = 1.0 / cmrr_from_coupler(coupler)
    q_lo_sq = lo.power / hw_t
    v_lo = lo.amplitude_variance(ctx)
    q_s = quadrature_mean(signal, lo.phase)
    v_s = quadrature_variance(signal, lo.phase)
    scale = 4.0 * pl2 * hw_t**2
    p_sig = scale * q_lo_sq * q_s * q_s
    p_noise = scale * q_lo_sq * (v_lo * inv_cmrr + v_s) + spec.electronic_noise_in2
    dropped = scale * n_sig * (inv_cmrr * v_s + v_lo)
    return BalancedOutput(p_sig, p_noise, dropped / p_noise if p_noise > 0 else 0.0)


def p_knee(spec, f=0.0):
    """LO power at which signal shot noise equals all other noise (3 dB SNC)."""
    if spec.cmrr_linear <= 1.0:
        raise ValueError("P_knee is undefined for CMRR <= 1")
    return spec.electronic_noise(f) / (spec.shot_noise_gain(f) * (1.0 - 1.0 / spec.cmrr_linear))


def _snc_from_knee(lo_power, knee):
    if knee == 0.0:
        return math.inf if lo_power > 0 else 0.0
    return to_db(lo_power / knee + 1.0)


def snc(spec, lo_power):
    """Shot noise clearance in dB, ``10 log10(s_LO / P_knee + 1)``."""
    if lo_power < 0:
        raise ValueError("LO power must be non-negative")
    if lo_power > spec.max_lo_power * (1.0 + 1e-12):
        raise SaturationError(f"LO power {lo_power:.4g} W exceeds receiver maximum {spec.max_lo_power:.4g} W")
    return _snc_from_knee(lo_power, p_knee(spec))


def detection_efficiency(spec, lo_power, eta_opt=None):
    """``η = η_opt (1 - P_knee/s_LO)``."""
    eta_opt = spec.optical_efficiency_eta_opt if eta_opt is None else eta_opt
    knee = p_knee(spec)
    if lo_power <= knee:
        raise ValueError(f"LO power {lo_power:.4g} W is not above P_knee = {knee:.4g} W")
    return eta_opt * (1.0 - knee / lo_power)


def measured_variance(r, eta):
    """Quadrature variance of a squeezed state seen through efficiency ``eta``."""
    if r < 0 or not 0.0 <= eta <= 1.0:
        raise ValueError("need r >= 0 and eta in [0, 1]")
    return VACUUM_VARIANCE * (eta * math.exp(-2.0 * r) + 1.0 - eta)


def frequency_response(spec, f):
    """``(L(f), SNC(f) at P_max in dB, NEP(f) in W)``.

    NEP is the signal power giving ``P_sig = P_noise`` with the LO at ``P_max``.
    """
    if f < 0:
        raise ValueError("frequency must be non-negative")
    gain = spec.gain(f)
    knee = p_knee(spec, f)
    lo = spec.max_lo_power
    shot = spec.shot_noise_gain(f)
    noise = shot * lo * (1.0 + 1.0 / spec.cmrr_linear) + spec.electronic_noise(f)
    # P_sig per watt of signal: 4 Π² L² s_LO = 4 s_LO shot / (ħω/T)
    nep = noise / (4.0 * lo * shot / spec.flux.power_per_photon)
    return FrequencyPoint(gain, _snc_from_knee(lo, knee), nep)


def f_3db(spec):
    return spec.dc_gain_f3db


def f_shot(spec, f_max=1e12):
    """Frequency where SNC at P_max falls to 3 dB (``P_knee(f) = P_max``)."""
    target = spec.max_lo_power

    def excess(f):
        return math.log(p_knee(spec, f) / target)

    if p_knee(spec, 0.0) == 0.0:
        return math.inf
    if excess(0.0) >= 0.0:
        return 0.0
    if excess(f_max) < 0.0:
        return math.inf
    return brentq(excess, 0.0, f_max, xtol=1.0, rtol=1e-12)


def phase_error_variance(r, dphi):
    """Variance seen when the LO is misaligned from the squeezed axis by ``dphi``."""
    if r < 0:
        raise ValueError("r must be non-negative")
    c2, s2 = math.cos(dphi) ** 2, math.sin(dphi) ** 2
    return VACUUM_VARIANCE * (math.exp(-2.0 * r) * c2 + math.exp(2.0 * r) * s2)


def squeezing_retention(r, dphi):
    """Fraction of the ideal dB squeezing kept under phase error ``dphi``."""
    ideal = to_db(math.exp(-2.0 * r))
    return to_db(phase_error_variance(r, dphi) / VACUUM_VARIANCE) / ideal


def noise_vs_lo(spec, lo_powers, coupler=None):
    """Model RF noise power at each LO power (shot-noise-limited LO, dark signal port)."""
    coupler = spec.coupler() if coupler is None else coupler
    dark = FieldTone(0.0)
    return np.array([balanced_output(dark, FieldTone(p), coupler, spec).noise_power for p in lo_powers])


def simulate_lo_sweep(spec, lo_powers, n_averages, rng):
    """Noisy spectrum-analyzer readings of the noise power at each LO power.

    Each reading averages ``n_averages`` independent periodogram bins, so it is
    the model value times ``chi2(2n)/2n``.  Returns ``(readings, floor_reading)``
    where the floor is measured with the LO off.
    """
    model = noise_vs_lo(spec, lo_powers)
    k = 2 * n_averages
    readings = model * rng.chisquare(k, size=model.shape) / k
    floor = spec.electronic_noise_in2 * rng.chisquare(k) / k
    return readings, floor


def fit_shot_noise_slope(lo_powers, readings, floor):
    """Log-log slope of electronic-noise-subtracted noise power versus LO power."""
    excess = np.asarray(readings) - floor
    if np.any(excess <= 0):
        raise ValueError("noise readings do not clear the electronic floor")
    slope, _ = np.polyfit(np.log10(lo_powers), np.log10(excess), 1)
    return float(slope)
