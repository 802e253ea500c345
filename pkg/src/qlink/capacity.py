"""Per-mode channel capacities and energy-per-bit figures.

All capacities are in bits per mode.  ``N`` is the mean signal photon number
per mode, ``N = s_s / (ħω B)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._units import photon_energy

LN2 = math.log(2.0)


def _check_n(n):
    if n < 0 or math.isnan(n):
        raise ValueError(f"mean photon number must be non-negative, got {n!r}")


def photons_per_mode(signal_power, bandwidth, wavelength):
    return signal_power / (photon_energy(wavelength) * bandwidth)


def c_shannon_1q(n):
    """Homodyne (one-quadrature) Shannon capacity ``½ log2(1 + 4N)``."""
    _check_n(n)
    return 0.5 * math.log1p(4.0 * n) / LN2


def c_shannon_2q(n):
    """Heterodyne (two-quadrature) Shannon capacity ``log2(1 + N)``."""
    _check_n(n)
    return math.log1p(n) / LN2


def c_holevo(n):
    """Holevo capacity ``g(N) = (N+1) log2(N+1) - N log2 N``; ``g(0) = 0``."""
    _check_n(n)
    if n == 0.0:
        return 0.0
    # g(N) = log2(1+N) + N log2(1 + 1/N), accurate at both ends
    return (math.log1p(n) + n * math.log1p(1.0 / n)) / LN2


def noise_factor(r, eta):
    """Measured squeezed variance relative to vacuum, ``η e^{-2r} + 1 - η``."""
    if r < 0 or not 0.0 <= eta <= 1.0:
        raise ValueError("need r >= 0 and eta in [0, 1]")
    # -expm1(-2r) keeps precision for small r
    return 1.0 + eta * math.expm1(-2.0 * r)


def snr_squeezed(n, r, eta):
    _check_n(n)
    return 4.0 * n / noise_factor(r, eta)


def c_squeezed(n, r, eta):
    """Coherent detection of a displaced squeezed state, ``½ log2(1 + 4N/(ηe^{-2r}+1-η))``."""
    return 0.5 * math.log1p(snr_squeezed(n, r, eta)) / LN2


def improvement_factor(n):
    """Holevo-over-Shannon improvement factor ``1 - ln N`` at low photon number."""
    if n <= 0:
        raise ValueError("improvement factor needs N > 0")
    return 1.0 - math.log(n)


_CAPACITIES = {"s1": c_shannon_1q, "s2": c_shannon_2q, "holevo": c_holevo}


def signal_energy_per_bit(n, wavelength, capacity="s2"):
    """Per-mode signal-only energy per bit ``ħω N / C(N)`` in J/bit.

    ``N -> 0`` returns the exact limit: ``ħω/log2(e)`` for ``"s2"``,
    ``ħω/(2 log2(e))`` for ``"s1"`` and 0 for ``"holevo"``.
    """
    cap = _CAPACITIES[capacity]
    hw = photon_energy(wavelength)
    if n == 0.0:
        floor = {"s1": hw * LN2 / 2.0, "s2": hw * LN2, "holevo": 0.0}
        return floor[capacity]
    return hw * n / cap(n)


def energy_per_bit_coherent(s_s, s_lo, bandwidth, wavelength):
    """Link energy per bit with coherent light, ``(s_s + s_LO) / (B C_S1)``."""
    if s_s < 0 or s_lo < 0 or bandwidth <= 0:
        raise ValueError("powers must be non-negative and bandwidth positive")
    cap = c_shannon_1q(photons_per_mode(s_s, bandwidth, wavelength))
    if cap == 0.0:
        raise ZeroDivisionError("zero capacity: no signal photons")
    return (s_s + s_lo) / (bandwidth * cap)


def pump_power(r, mu):
    return 0.0 if r == 0.0 else (r / mu) ** 2


def energy_per_bit_squeezed(s_s, s_lo, r, mu, eta, bandwidth, wavelength):
    """Link energy per bit with squeezing, ``(s_s + s_LO + (r/μ)²) / (B C_sq)``."""
    if mu <= 0:
        raise ValueError("parametric gain coefficient must be positive")
    if s_s < 0 or s_lo < 0 or bandwidth <= 0:
        raise ValueError("powers must be non-negative and bandwidth positive")
    cap = c_squeezed(photons_per_mode(s_s, bandwidth, wavelength), r, eta)
    if cap == 0.0:
        raise ZeroDivisionError("zero capacity: no signal photons")
    return (s_s + s_lo + pump_power(r, mu)) / (bandwidth * cap)


@dataclass(frozen=True)
class CapacityReport:
    """Capacities (bit/mode), rates (bit/s) and energies per bit (J/bit) at one link point."""

    n_photons: float
    squeezing_r: float
    eta: float
    bandwidth: float
    c_s1: float
    c_s2: float
    c_sq: float
    c_hol: float
    e_b_coh: float
    e_b_sq: float
    p_total: float
    pump_power: float = 0.0
    snc_db: float = math.nan

    @property
    def rate_s1(self):
        return self.bandwidth * self.c_s1

    @property
    def rate_s2(self):
        return self.bandwidth * self.c_s2

    @property
    def rate_sq(self):
        return self.bandwidth * self.c_sq

    @property
    def rate_hol(self):
        return self.bandwidth * self.c_hol

    @property
    def exceeds_holevo(self):
        """True where the squeezed capacity tops the signal-photon Holevo bound."""
        return self.c_sq > self.c_hol

    def rows(self):
        """``(label, value, unit)`` triples for tabular output."""
        return [
            ("mean photons per mode", self.n_photons, "photons"),
            ("squeezing r", self.squeezing_r, ""),
            ("pump power", self.pump_power, "W"),
            ("detection efficiency", self.eta, ""),
            ("SNC", self.snc_db, "dB"),
            ("C_S1", self.c_s1, "bit/mode"),
            ("C_S2", self.c_s2, "bit/mode"),
            ("C_sq", self.c_sq, "bit/mode"),
            ("C_Hol", self.c_hol, "bit/mode"),
            ("rate S1", self.rate_s1, "bit/s"),
            ("rate S2", self.rate_s2, "bit/s"),
            ("rate sq", self.rate_sq, "bit/s"),
            ("rate Hol", self.rate_hol, "bit/s"),
            ("P_total", self.p_total, "W"),
            ("E_b coherent", self.e_b_coh, "J/bit"),
            ("E_b squeezed", self.e_b_sq, "J/bit"),
        ]
