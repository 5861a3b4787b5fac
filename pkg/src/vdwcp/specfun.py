"""Spherical Bessel and Hankel functions of complex argument.

Values are carried as ``mantissa * exp(exponent)`` with a real exponent so
that Mie ratios can be formed on the imaginary axis, where ``j_n`` grows and
``h_n^(1)`` decays exponentially.

``j_n`` uses Miller's downward recurrence normalised against ``j_0`` or
``j_1``; ``h_n^(1)`` uses the upward recurrence, which is stable for the
dominant solution.  The array routines are vectorised over the argument and
loop over order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteArgument, OrderOutOfRange, ZeroArgument

MAX_ORDER = 200
_RESCALE = 1e100


@dataclass(frozen=True)
class ScaledHankel:
    """A complex number stored as ``value * exp(scale_exponent)``."""

    value: complex
    scale_exponent: float

    def unscaled(self) -> complex:
        if self.value == 0:
            return 0j
        return complex(self.value * math.exp(self.scale_exponent))

    def log_abs(self) -> float:
        return math.log(abs(self.value)) + self.scale_exponent


def _check_order(n):
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise OrderOutOfRange(f"order must be an integer, got {n!r}")
    if n < 0 or n > MAX_ORDER:
        raise OrderOutOfRange(f"order {n} outside supported range 0..{MAX_ORDER}")


def _check_arg(z):
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise NonFiniteArgument(f"argument {z!r} is not finite")
    return z


def _normalise(mant, expo):
    """Pull the modulus of ``mant`` into ``expo`` (zeros are left alone)."""
    mag = np.abs(mant)
    nz = mag > 0
    safe = np.where(nz, mag, 1.0)
    return np.where(nz, mant / safe, 0j), np.where(nz, expo + np.log(safe), expo)


def hankel1_scaled(nmax, z):
    """``h_n^(1)(z)`` for ``n = -1 .. nmax`` as (mantissa, exponent) arrays.

    Row ``i`` of the result holds order ``i - 1``.  ``z`` may be an array;
    it must be nonzero.
    """
    z = np.asarray(z, dtype=complex)
    # h_{-1} = e^{iz}/z, h_0 = -i e^{iz}/z; the common factor lives in expo
    absz = np.abs(z)
    phase = np.exp(1j * z.real) * (absz / z)
    base_exp = -z.imag - np.log(absz)
    mant = np.empty((nmax + 2,) + z.shape, dtype=complex)
    expo = np.empty((nmax + 2,) + z.shape, dtype=float)
    m_prev = phase
    m_cur = -1j * phase
    e_run = base_exp.copy()
    mant[0], expo[0] = m_prev, e_run
    mant[1], expo[1] = m_cur, e_run
    for n in range(0, nmax):
        m_next = (2 * n + 1) / z * m_cur - m_prev
        big = np.abs(m_next) > _RESCALE
        if np.any(big):
            s = np.where(big, np.abs(m_next), 1.0)
            m_next = m_next / s
            m_cur = m_cur / s
            e_run = e_run + np.log(s)
        m_prev, m_cur = m_cur, m_next
        mant[n + 2], expo[n + 2] = m_cur, e_run
    return _normalise(mant, expo)


def _scaled_sin_cos(z):
    """sin z and cos z divided by exp(|Im z|)."""
    y = np.abs(z.imag)
    ep = np.exp(1j * z - y)
    em = np.exp(-1j * z - y)
    return (ep - em) / 2j, (ep + em) / 2.0


def bessel_j_scaled(nmax, z):
    """``j_n(z)`` for ``n = 0 .. nmax`` as (mantissa, exponent) arrays.

    ``z`` must be nonzero.  Miller's algorithm: the downward recurrence is
    started well above ``max(nmax, |z|)`` and normalised against whichever
    of ``j_0``, ``j_1`` is better conditioned at each argument.
    """
    z = np.asarray(z, dtype=complex)
    zmax = float(np.max(np.abs(z))) if z.size else 0.0
    big_n = max(nmax, 1) + int(zmax) + 30 + int(2.0 * math.sqrt(max(nmax, 1) + zmax))
    mant = np.empty((nmax + 1,) + z.shape, dtype=complex)
    expo = np.empty((nmax + 1,) + z.shape, dtype=float)
    m_next = np.zeros(z.shape, dtype=complex)
    m_cur = np.full(z.shape, 1e-30, dtype=complex)
    e_run = np.zeros(z.shape)
    low = np.zeros(z.shape, dtype=complex)  # order-1 mantissa, kept even when nmax == 0
    e_low = np.zeros(z.shape)
    for n in range(big_n, 0, -1):
        # m_cur holds order n; produce order n-1
        m_prev = (2 * n + 1) / z * m_cur - m_next
        big = np.abs(m_prev) > _RESCALE
        if np.any(big):
            s = np.where(big, np.abs(m_prev), 1.0)
            m_prev = m_prev / s
            m_cur = m_cur / s
            e_run = e_run + np.log(s)
        m_next, m_cur = m_cur, m_prev
        k = n - 1
        if k <= nmax:
            mant[k], expo[k] = m_cur, e_run
        if k == 1:
            low, e_low = m_cur.copy(), e_run.copy()

    s_t, c_t = _scaled_sin_cos(z)
    j0_t = s_t / z
    j1_t = s_t / z**2 - c_t / z
    use_j1 = (np.abs(z) >= 1.0) & (np.abs(j1_t) > np.abs(j0_t))
    ref_true = np.where(use_j1, j1_t, j0_t)
    ref_m = np.where(use_j1, low, mant[0])
    ref_e = np.where(use_j1, e_low, expo[0])
    ratio = ref_true / ref_m
    out_m = mant * ratio
    out_e = expo - ref_e + np.abs(z.imag)
    return _normalise(out_m, out_e)


def _unscale(mant, expo):
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        return np.where(mant == 0, 0j, mant * np.exp(expo))


def riccati_j_prime_scaled(nmax, z):
    """``d/dz [z j_n(z)]`` for ``n = 0 .. nmax`` plus the ``j_n`` arrays.

    Returns ``(jm, je, pm, pe)``.  Uses ``[z j_n]' = z j_{n-1} - n j_n`` and
    ``[z j_0]' = cos z``.
    """
    z = np.asarray(z, dtype=complex)
    jm, je = bessel_j_scaled(max(nmax, 1), z)
    pm = np.empty_like(jm)
    pe = np.empty_like(je)
    _, c_t = _scaled_sin_cos(z)
    pm[0], pe[0] = c_t, np.abs(z.imag)
    for n in range(1, jm.shape[0]):
        ref = je[n]
        pm[n] = z * jm[n - 1] * np.exp(je[n - 1] - ref) - n * jm[n]
        pe[n] = ref
    pm, pe = _normalise(pm, pe)
    return jm[: nmax + 1], je[: nmax + 1], pm[: nmax + 1], pe[: nmax + 1]


def riccati_h_prime_scaled(nmax, z):
    """``d/dz [z h_n(z)]`` for ``n = 0 .. nmax`` plus the ``h_n`` arrays.

    Returns ``(hm, he, qm, qe)`` with ``hm[n]`` the order-``n`` Hankel value.
    """
    z = np.asarray(z, dtype=complex)
    hm, he = hankel1_scaled(nmax, z)
    qm = np.empty((nmax + 1,) + z.shape, dtype=complex)
    qe = np.empty((nmax + 1,) + z.shape, dtype=float)
    for n in range(0, nmax + 1):
        ref = he[n + 1]
        qm[n] = z * hm[n] * np.exp(he[n] - ref) - n * hm[n + 1]
        qe[n] = ref
    qm, qe = _normalise(qm, qe)
    return hm[1:], he[1:], qm, qe


# -- scalar public API ------------------------------------------------------


def sph_bessel_j(n: int, z: complex) -> complex:
    """Spherical Bessel function of the first kind ``j_n(z)``."""
    _check_order(n)
    z = _check_arg(z)
    if z == 0:
        return 1.0 + 0j if n == 0 else 0j
    m, e = bessel_j_scaled(n, z)
    return complex(_unscale(m[n], e[n]))


def sph_hankel1(n: int, z: complex) -> ScaledHankel:
    """Spherical Hankel function ``h_n^(1)(z)`` in scaled form, ``Im z >= 0``."""
    _check_order(n)
    z = _check_arg(z)
    if z == 0:
        raise ZeroArgument("h_n^(1) is singular at z = 0")
    if z.imag < 0:
        raise NonFiniteArgument(f"Im z must be >= 0, got {z!r}")
    m, e = hankel1_scaled(n, z)
    return ScaledHankel(complex(m[n + 1]), float(e[n + 1]))


def riccati_j_prime(n: int, z: complex) -> complex:
    """``d/dz [z j_n(z)]``."""
    _check_order(n)
    z = _check_arg(z)
    if z == 0:
        return 1.0 + 0j if n == 0 else 0j
    _, _, pm, pe = riccati_j_prime_scaled(n, z)
    return complex(_unscale(pm[n], pe[n]))


def riccati_h_prime(n: int, z: complex) -> ScaledHankel:
    """``d/dz [z h_n^(1)(z)]`` in scaled form, ``Im z >= 0``."""
    _check_order(n)
    z = _check_arg(z)
    if z == 0:
        raise ZeroArgument("h_n^(1) is singular at z = 0")
    if z.imag < 0:
        raise NonFiniteArgument(f"Im z must be >= 0, got {z!r}")
    _, _, qm, qe = riccati_h_prime_scaled(n, z)
    return ScaledHankel(complex(qm[n]), float(qe[n]))
