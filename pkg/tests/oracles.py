"""Independent reference computations used by the tests."""

import numpy as np
from scipy.integrate import quad
from scipy.special import eval_legendre


def beam_quad(field, a, v, k):
    """``int_0^inf f(a + r v) r^k dr`` by adaptive quadrature per ball chord."""
    a = np.asarray(a, float)
    v = np.asarray(v, float)
    total = 0.0
    for c, rad, amp in field.terms:
        d = a - c
        b = d @ v
        disc = b * b - (d @ d - rad * rad)
        if disc <= 0:
            continue
        lo, hi = max(0.0, -b - np.sqrt(disc)), -b + np.sqrt(disc)
        if hi <= lo:
            continue

        def integrand(r, c=c, rad=rad, amp=amp):
            rho2 = np.sum((a + r * v - c) ** 2) / rad ** 2
            return amp * np.exp(1 - 1 / (1 - rho2)) * r ** k if rho2 < 1 else 0.0

        total += quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return total


def w_quad(field, a_bar, p_bar, k):
    """``int f(a + x p, x) x^k dx`` over ``x > 0`` by adaptive quadrature."""
    a_bar = np.atleast_1d(np.asarray(a_bar, float))
    p_bar = np.atleast_1d(np.asarray(p_bar, float))
    hi = float(np.max(field.centers[:, -1] + field.radii))

    def integrand(x):
        return float(field.eval(np.concatenate([a_bar + x * p_bar, [x]]))) * x ** k

    return quad(integrand, 0.0, hi, epsabs=1e-14, epsrel=1e-12, limit=400)[0]


def sst_of_harmonic(n, m, beta, s):
    """Section transform of a pure harmonic.

    n=2: ``g = cos(m theta)`` gives ``2 cos(m theta_beta) T_m(s)``.
    n=3: ``g = P_m(z)`` (zonal) gives ``2 pi sqrt(1-s^2) P_m(s) P_m(beta_z)``
    by Funk-Hecke.
    """
    beta = np.asarray(beta, float)
    s = np.asarray(s, float)
    if n == 2:
        th = np.arctan2(beta[..., 1], beta[..., 0])
        return 2 * np.cos(m * th)[..., None] * np.cos(m * np.arccos(s))[None, :]
    return (2 * np.pi * np.sqrt(1 - s * s) * eval_legendre(m, s))[None, :] * \
        eval_legendre(m, beta[..., 2])[..., None]
