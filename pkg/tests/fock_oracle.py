"""Brute-force Fock-basis moments of displaced squeezed states.

Independent of the Gaussian covariance code: states are built as
``D(alpha) S(xi) |0>`` by matrix exponentials in a large Fock space and then
truncated to ``n <= n_max``.
"""

import numpy as np
from scipy.linalg import expm


def ladder(dim):
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def displaced_squeezed(alpha, r, theta, n_max=60, work_dim=200):
    """Fock amplitudes of ``D(alpha) S(r e^{2i theta}) |0>`` for ``n <= n_max``.

    With ``a = q + i p`` this squeezes the quadrature at angle ``theta`` and
    displaces the mean to ``(Re alpha, Im alpha)``.
    """
    a = ladder(work_dim)
    ad = a.conj().T
    xi = r * np.exp(2j * theta)
    s_op = expm(0.5 * (np.conj(xi) * a @ a - xi * ad @ ad))
    d_op = expm(alpha * ad - np.conj(alpha) * a)
    vac = np.zeros(work_dim, dtype=complex)
    vac[0] = 1.0
    psi = (d_op @ (s_op @ vac))[: n_max + 1]
    return psi


def photon_moments(psi):
    """``(<N>, Var N, captured norm)`` of a truncated state."""
    p = np.abs(psi) ** 2
    norm = p.sum()
    n = np.arange(p.size)
    mean = (n * p).sum() / norm
    var = (n * n * p).sum() / norm - mean**2
    return mean, var, norm


def quadrature_moments(psi):
    """Means and covariance of ``q = (a + a†)/2`` and ``p = (a - a†)/2i``."""
    dim = psi.size
    a = ladder(dim)
    ad = a.conj().T
    q = (a + ad) / 2
    p = (a - ad) / 2j
    psi = psi / np.linalg.norm(psi)

    def ev(op):
        return np.vdot(psi, op @ psi)

    mq, mp = ev(q).real, ev(p).real
    vq = ev(q @ q).real - mq**2
    vp = ev(p @ p).real - mp**2
    cqp = (0.5 * ev(q @ p + p @ q)).real - mq * mp
    return np.array([mq, mp]), np.array([[vq, cqp], [cqp, vp]])
