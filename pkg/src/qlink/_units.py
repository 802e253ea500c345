"""Physical constants and dB helpers shared across modules."""

import math

from scipy.constants import c as SPEED_OF_LIGHT, hbar as HBAR

#: Quadrature variance of vacuum with the ``a = q + ip`` convention.
VACUUM_VARIANCE = 0.25

DB_PER_NEPER_POWER = 10.0 / math.log(10.0)


def angular_frequency(wavelength):
    """Optical angular frequency (rad/s) for a vacuum wavelength in metres."""
    if wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength!r}")
    return 2.0 * math.pi * SPEED_OF_LIGHT / wavelength


def photon_energy(wavelength):
    """Photon energy ħω in joules."""
    return HBAR * angular_frequency(wavelength)


def to_db(ratio):
    return 10.0 * math.log10(ratio)


def from_db(db):
    return 10.0 ** (db / 10.0)


def squeezing_db(r):
    """Squeezing in dB for squeezing parameter ``r`` (variance ratio e^{-2r})."""
    return 2.0 * r * DB_PER_NEPER_POWER


def r_from_squeezing_db(db):
    return db / (2.0 * DB_PER_NEPER_POWER)
