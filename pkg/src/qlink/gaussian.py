"""Single- and two-mode Gaussian states of light.

Quadratures follow ``a = q + i p`` so that the vacuum has variance 1/4 in
every direction and ``<N> = q^2 + p^2 + var_q + var_p - 1/2``.  All states
are immutable; every operation returns a new state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._units import HBAR, VACUUM_VARIANCE, angular_frequency

EIG_TOL = 1e-12


def _rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _check_positive_definite(cov, what):
    if not np.allclose(cov, cov.T, rtol=0.0, atol=EIG_TOL):
        raise ValueError(f"{what} covariance is not symmetric")
    eig = np.linalg.eigvalsh(cov)
    if eig.min() <= EIG_TOL:
        raise ValueError(f"{what} covariance is not positive definite (min eigenvalue {eig.min():.3e})")


@dataclass(frozen=True)
class GaussianState:
    """Single-mode Gaussian state: mean quadratures and 2x2 covariance."""

    mean_q: float = 0.0
    mean_p: float = 0.0
    var_q: float = VACUUM_VARIANCE
    var_p: float = VACUUM_VARIANCE
    cov_qp: float = 0.0

    def __post_init__(self):
        _check_positive_definite(self.cov, "state")
        # uncertainty principle with [q, p] = i/2
        if self.determinant < VACUUM_VARIANCE**2 * (1.0 - 1e-9):
            raise ValueError(f"covariance determinant {self.determinant:.6g} violates the uncertainty bound 1/16")

    @classmethod
    def from_moments(cls, mean, cov):
        mean = np.asarray(mean, dtype=float)
        cov = np.asarray(cov, dtype=float)
        # symmetrize away round-off from congruence transforms
        cov = 0.5 * (cov + cov.T)
        return cls(float(mean[0]), float(mean[1]), float(cov[0, 0]), float(cov[1, 1]), float(cov[0, 1]))

    @property
    def mean(self):
        return np.array([self.mean_q, self.mean_p])

    @property
    def cov(self):
        return np.array([[self.var_q, self.cov_qp], [self.cov_qp, self.var_p]])

    @property
    def determinant(self):
        return self.var_q * self.var_p - self.cov_qp**2

    @property
    def is_pure(self):
        return math.isclose(self.determinant, VACUUM_VARIANCE**2, rel_tol=1e-9)


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Two Gaussian modes plus the 2x2 cross-covariance block.

    The full covariance is ordered ``(q_a, p_a, q_b, p_b)``.
    """

    mode_a: GaussianState
    mode_b: GaussianState
    cross_cov: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))

    def __post_init__(self):
        cross = np.asarray(self.cross_cov, dtype=float).reshape(2, 2)
        object.__setattr__(self, "cross_cov", cross)
        _check_positive_definite(self.cov, "two-mode")

    @classmethod
    def product(cls, mode_a, mode_b):
        return cls(mode_a, mode_b, np.zeros((2, 2)))

    @classmethod
    def from_moments(cls, mean, cov):
        mean = np.asarray(mean, dtype=float)
        cov = np.asarray(cov, dtype=float)
        cov = 0.5 * (cov + cov.T)
        a = GaussianState.from_moments(mean[:2], cov[:2, :2])
        b = GaussianState.from_moments(mean[2:], cov[2:, 2:])
        return cls(a, b, cov[:2, 2:])

    @property
    def mean(self):
        return np.concatenate([self.mode_a.mean, self.mode_b.mean])

    @property
    def cov(self):
        return np.block([[self.mode_a.cov, self.cross_cov], [self.cross_cov.T, self.mode_b.cov]])


@dataclass(frozen=True)
class PhotonFluxContext:
    """Converts photon numbers to optical power: ``S = (ħω/T) N``."""

    angular_frequency: float
    integration_time: float

    def __post_init__(self):
        if not (self.angular_frequency > 0 and self.integration_time > 0):
            raise ValueError("angular_frequency and integration_time must both be positive")

    @classmethod
    def from_wavelength(cls, wavelength, bandwidth):
        """Context for a detection bandwidth ``B`` with ``T = 1/B``."""
        return cls(angular_frequency(wavelength), 1.0 / bandwidth)

    @property
    def power_per_photon(self):
        return HBAR * self.angular_frequency / self.integration_time


def vacuum():
    return GaussianState()


def coherent(q, p=0.0):
    return displace(vacuum(), q, p)


def displace(state, dq, dp):
    return GaussianState(state.mean_q + dq, state.mean_p + dp, state.var_q, state.var_p, state.cov_qp)


def squeeze(state, r, theta=0.0):
    """Squeeze the quadrature at angle ``theta`` by ``e^{-2r}`` in variance.

    The conjugate quadrature (``theta + pi/2``) is amplified by ``e^{2r}``.
    """
    if r < 0:
        raise ValueError("squeezing parameter must be non-negative; rotate theta instead")
    rot = _rotation(theta)
    sym = rot @ np.diag([math.exp(-r), math.exp(r)]) @ rot.T
    return GaussianState.from_moments(sym @ state.mean, sym @ state.cov @ sym.T)


def rotate(state, phi):
    """Rotate phase space by ``phi`` (the mean moves counter-clockwise)."""
    rot = _rotation(phi)
    return GaussianState.from_moments(rot @ state.mean, rot @ state.cov @ rot.T)


def apply_loss(state, eta):
    """Pure-loss channel: mix with vacuum at a beamsplitter of transmission ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"efficiency must lie in [0, 1], got {eta!r}")
    cov = eta * state.cov + (1.0 - eta) * VACUUM_VARIANCE * np.eye(2)
    return GaussianState.from_moments(math.sqrt(eta) * state.mean, cov)


def coupler_symplectic(unitary):
    """Real 4x4 transform on ``(q_a, p_a, q_b, p_b)`` for a 2x2 mode unitary."""
    u = np.asarray(unitary, dtype=complex)
    m = np.empty((4, 4))
    for j in range(2):
        for k in range(2):
            re, im = u[j, k].real, u[j, k].imag
            m[2 * j : 2 * j + 2, 2 * k : 2 * k + 2] = [[re, -im], [im, re]]
    return m


def coupler_transform(state, coupler):
    """Send ``(signal, LO)`` through the coupler ``U = [[α, β], [-β, α]]/√2``.

    ``coupler`` is any object exposing ``unitary()``, normally
    :class:`qlink.receiver.CouplerParams`, which validates the constraints.
    """
    m = coupler_symplectic(coupler.unitary())
    return TwoModeState.from_moments(m @ state.mean, m @ state.cov @ m.T)


def quadrature_variance(state, theta):
    c, s = math.cos(theta), math.sin(theta)
    return c * c * state.var_q + s * s * state.var_p + 2.0 * s * c * state.cov_qp


def quadrature_mean(state, theta):
    return math.cos(theta) * state.mean_q + math.sin(theta) * state.mean_p


def mean_photon_number(state):
    return state.mean_q**2 + state.mean_p**2 + state.var_q + state.var_p - 0.5


def intensity_noise_variance(state, ctx):
    """Power-fluctuation variance ``<Δs^2>`` (W^2) of a Gaussian state.

    In the frame where the displacement lies along ``q`` and the covariance is
    diagonal this is ``(ħω/T)^2 [4 q^2 Vq + 2 Vq^2 + 2 Vp^2 - 1/4]``.  The
    rotation-invariant form ``4 dᵀCd + 2 Tr(C²) - 1/4`` is used so that any
    orientation works without an explicit change of frame.
    """
    d, c = state.mean, state.cov
    bracket = 4.0 * d @ c @ d + 2.0 * np.trace(c @ c) - 0.25
    return ctx.power_per_photon**2 * float(bracket)


def mean_power(state, ctx):
    return ctx.power_per_photon * mean_photon_number(state)


def direct_detection_snr(state, ctx):
    s = mean_power(state, ctx)
    if s <= 0.0:
        raise ValueError("direct detection SNR needs a state with positive mean power")
    noise = intensity_noise_variance(state, ctx)
    if noise <= 0.0:
        raise ZeroDivisionError("intensity noise variance is zero")
    return s * s / noise
