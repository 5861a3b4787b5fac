"""Dyadic Green tensors: free space and the scattering part outside a sphere.

Both take complex frequencies in the closed upper half plane.  On the
imaginary axis every tensor entry is real, which is what makes the
imaginary-frequency potential integrals real.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import PhysicalConstants
from .errors import CoincidentPoints, InsideSphere, ZeroFrequency
from .specfun import MAX_ORDER, riccati_h_prime_scaled, riccati_j_prime_scaled

SERIES_RTOL = 1e-12
SERIES_PATIENCE = 3


@dataclass(frozen=True)
class PermittivityModel:
    """Drude-Lorentz permittivity ``eps_inf + sum wp2 / (w0^2 - w^2 - i g w)``.

    ``oscillators`` holds ``(wp2, w0, gamma)`` triples.  ``eps_inf``
    defaults to 1; a constant ``eps_inf`` with no oscillators models a
    nondispersive medium.
    """

    oscillators: tuple = ()
    eps_inf: float = 1.0

    def __post_init__(self):
        osc = tuple(tuple(float(x) for x in o) for o in self.oscillators)
        for wp2, w0, g in osc:
            if not (w0 > 0 and g >= 0 and np.isfinite(wp2)):
                raise ValueError(f"invalid oscillator {(wp2, w0, g)}")
        object.__setattr__(self, "oscillators", osc)

    @classmethod
    def vacuum(cls):
        return cls()

    @classmethod
    def constant(cls, eps: float):
        return cls((), float(eps))

    @property
    def is_vacuum(self) -> bool:
        return self.eps_inf == 1.0 and all(o[0] == 0.0 for o in self.oscillators)

    def susceptibility(self, omega):
        """``eps - 1``, summed directly so weak media keep full precision."""
        w = np.asarray(omega, dtype=complex)
        chi = np.full(w.shape, self.eps_inf - 1.0, dtype=complex)
        for wp2, w0, g in self.oscillators:
            chi = chi + wp2 / (w0**2 - w**2 - 1j * g * w)
        return complex(chi) if np.ndim(omega) == 0 else chi

    def __call__(self, omega):
        chi = self.susceptibility(omega)
        return 1.0 + chi

    evaluate = __call__


@dataclass(frozen=True)
class SphereSpec:
    radius: float
    material: PermittivityModel = field(default_factory=PermittivityModel)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")


def _p(x):
    return 1.0 + x + x * x


def _q(x):
    return 3.0 + 3.0 * x + x * x


def free_space_green(r_A, r_B, omega, constants: PhysicalConstants):
    """Vacuum Green tensor ``G0(r_A, r_B, omega)``.

    Returns a ``(3, 3)`` complex array, or ``omega.shape + (3, 3)`` for
    array ``omega``.
    """
    rA = np.asarray(r_A, dtype=float)
    rB = np.asarray(r_B, dtype=float)
    sep = rB - rA
    ell = float(np.linalg.norm(sep))
    if ell == 0.0:
        raise CoincidentPoints("free-space Green tensor needs distinct points")
    w = np.asarray(omega, dtype=complex)
    if np.any(w == 0):
        raise ZeroFrequency("free-space Green tensor is singular at omega = 0")
    c = constants.c
    e = sep / ell
    x = -1j * ell * w / c
    pref = -(c**2) * np.exp(1j * w * ell / c) / (4.0 * np.pi * w**2 * ell**3)
    eye = np.eye(3)
    ee = np.outer(e, e)
    G = pref[..., None, None] * (_p(x)[..., None, None] * eye - _q(x)[..., None, None] * ee)
    return G


def free_space_axis_components(r, omega, constants: PhysicalConstants):
    """``(G_xx, G_yy)`` for separation ``r`` along x: longitudinal and transverse parts."""
    w = np.asarray(omega, dtype=complex)
    c = constants.c
    eta = r * w / c
    ph = np.exp(1j * eta)
    gxx = c**2 / (2.0 * np.pi * w**2 * r**3) * (1.0 - 1j * eta) * ph
    gyy = -(c**2) / (4.0 * np.pi * w**2 * r**3) * (1.0 - 1j * eta - eta**2) * ph
    return gxx, gyy


@dataclass(frozen=True)
class FreeSpaceGreen:
    """Green-source wrapper around :func:`free_space_green`."""

    constants: PhysicalConstants
    kind: str = "full"

    def evaluate(self, r1, r2, omega):
        return free_space_green(r1, r2, omega, self.constants)


# -- Mie coefficients --------------------------------------------------------


def _sqrt_upper(x):
    s = np.sqrt(x)
    return np.where(s.imag < 0, -s, s)


def _log_derivative_step(d, z0, h, nvec, steps=4):
    """Increment of ``D_n(z) = [z j_n]' / j_n`` from ``z0`` to ``z0 + h``.

    Integrates ``D' = (D + n(n+1) - D^2)/z - z`` with classical RK4 along
    the straight segment.  Only used when ``h`` is tiny, where forming
    ``D(z1) - D(z0)`` by subtraction would cancel.
    """
    nn = nvec * (nvec + 1)
    dt = h / steps

    def rhs(z, y):
        return (y + nn - y * y) / z - z

    y = d.copy()
    z = z0.astype(complex)
    for _ in range(steps):
        k1 = rhs(z, y)
        k2 = rhs(z + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(z + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(z + dt, y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        z = z + dt
    return y - d


SMALL_CONTRAST = 1e-3


def mie_scaled(nmax, omega, sphere: SphereSpec, constants: PhysicalConstants):
    """Mie coefficients for orders ``0 .. nmax`` in scaled form.

    Returns ``(bm_m, bm_e, bn_m, bn_e)``; ``B = mant * exp(expo)``.  Row 0
    is meaningless and left at zero.

    With ``D(z) = [z j_n(z)]' / j_n(z)``, ``J = j_n(z0) / h_n(z0)`` and
    ``X = [z0 h_n(z0)]' / h_n(z0)``::

        B^N = -J (delta D(z0) - dD) / (eps X - D(z1))
        B^M =  J dD / (X - D(z1))

    where ``delta = eps - 1`` and ``dD = D(z1) - D(z0)``.  Only ``J``
    carries an exponential scale, so growth of ``j`` and decay of ``h`` on
    the imaginary axis never meet in unscaled form, and the material
    contrast enters as an explicit factor instead of a cancellation.
    """
    w = np.asarray(omega, dtype=complex)
    if np.any(w == 0):
        raise ZeroFrequency("Mie coefficients need omega != 0")
    shape = (nmax + 1,) + w.shape
    if sphere.material.is_vacuum:
        zero_m = np.zeros(shape, dtype=complex)
        zero_e = np.zeros(shape)
        return zero_m, zero_e, zero_m.copy(), zero_e.copy()
    delta = np.asarray(sphere.material.susceptibility(w), dtype=complex)
    eps = 1.0 + delta
    z0 = sphere.radius * w / constants.c
    z1 = _sqrt_upper(eps) * z0
    jm0, je0, pm0, pe0 = riccati_j_prime_scaled(nmax, z0)
    hm0, he0, qm0, qe0 = riccati_h_prime_scaled(nmax, z0)
    jm1, je1, pm1, pe1 = riccati_j_prime_scaled(nmax, z1)
    nvec = np.arange(nmax + 1).reshape((-1,) + (1,) * w.ndim)

    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        d0 = pm0 / jm0 * np.exp(pe0 - je0)
        d1 = pm1 / jm1 * np.exp(pe1 - je1)
        j_m, j_e = jm0 / hm0, je0 - he0
        x_ratio = qm0 / hm0 * np.exp(qe0 - he0)
        d_diff = d1 - d0
        small = np.abs(delta) < SMALL_CONTRAST
        if np.any(small):
            stepped = _log_derivative_step(d0, np.broadcast_to(z0, d0.shape), np.broadcast_to(z1 - z0, d0.shape), nvec)
            d_diff = np.where(np.broadcast_to(small, d0.shape), stepped, d_diff)
        bn_m = -j_m * (delta * d0 - d_diff) / (eps * x_ratio - d1)
        bm_m = j_m * d_diff / (x_ratio - d1)
    bn_m[0] = 0.0
    bm_m[0] = 0.0
    bn_m, bn_e = _renorm(bn_m, j_e.copy())
    bm_m, bm_e = _renorm(bm_m, j_e.copy())
    return bm_m, bm_e, bn_m, bn_e


def _renorm(m, e):
    mag = np.abs(m)
    ok = (mag > 0) & np.isfinite(mag)
    safe = np.where(ok, mag, 1.0)
    return np.where(ok, m / safe, np.where(np.isfinite(mag), 0j, m)), np.where(ok, e + np.log(safe), e)


def _unscaled(m, e):
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        return np.where(m == 0, 0j, m * np.exp(e))


def _check_mie_args(n, omega):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_ORDER:
        raise ValueError(f"Mie order must be an integer in 1..{MAX_ORDER}, got {n!r}")
    if np.any(np.asarray(omega).imag < 0):
        raise ValueError("Mie coefficients are defined for Im omega >= 0")


def mie_B_M(n: int, omega, sphere: SphereSpec, constants: PhysicalConstants):
    """Magnetic (TE) reflection coefficient ``B_n^M(omega)``."""
    _check_mie_args(n, omega)
    bm_m, bm_e, _, _ = mie_scaled(n, omega, sphere, constants)
    out = _unscaled(bm_m[n], bm_e[n])
    return complex(out) if np.ndim(omega) == 0 else out


def mie_B_N(n: int, omega, sphere: SphereSpec, constants: PhysicalConstants):
    """Electric (TM) reflection coefficient ``B_n^N(omega)``."""
    _check_mie_args(n, omega)
    _, _, bn_m, bn_e = mie_scaled(n, omega, sphere, constants)
    out = _unscaled(bn_m[n], bn_e[n])
    return complex(out) if np.ndim(omega) == 0 else out


def mie_small_sphere_B1N(omega, sphere: SphereSpec, constants: PhysicalConstants):
    """Leading small-sphere form ``(2i/3) (eps-1)/(eps+2) z0^3`` of ``B_1^N``."""
    w = np.asarray(omega, dtype=complex)
    chi = sphere.material.susceptibility(w)
    z0 = sphere.radius * w / constants.c
    out = (2j / 3.0) * chi / (chi + 3.0) * z0**3
    return complex(out) if np.ndim(omega) == 0 else out


# -- equal-position scattering tensor -----------------------------------------


def sphere_series_terms(nmax, r, omega, sphere, constants):
    """Per-order pieces of the equal-point scattering tensor.

    Returns ``(tn, tm, hsq, qsq)`` arrays indexed by order, where (at
    ``z = r omega / c``)

    * ``tn[n] = B_n^N [n(n+1) h_n(z)^2 + ([z h_n(z)]')^2]``
    * ``tm[n] = B_n^M h_n(z)^2``
    * ``hsq[n] = B_n^N h_n(z)^2``
    * ``qsq[n] = B_n^N ([z h_n(z)]')^2``

    Row 0 is zero.  All exponential scales are combined before unscaling.
    """
    w = np.asarray(omega, dtype=complex)
    z = r * w / constants.c
    bm_m, bm_e, bn_m, bn_e = mie_scaled(nmax, w, sphere, constants)
    hm, he, qm, qe = riccati_h_prime_scaled(nmax, z)
    n = np.arange(nmax + 1).reshape((-1,) + (1,) * w.ndim)
    hsq = _unscaled(bn_m * hm**2, bn_e + 2 * he)
    qsq = _unscaled(bn_m * qm**2, bn_e + 2 * qe)
    tm = _unscaled(bm_m * hm**2, bm_e + 2 * he)
    tn = n * (n + 1) * hsq + qsq
    return tn, tm, hsq, qsq


def sphere_terms_adaptive(r, omega, sphere, constants, n_max=None):
    """Series pieces with the order cut off adaptively.

    With ``n_max=None`` the order is doubled from 8 until the last
    ``SERIES_PATIENCE`` orders each contribute below ``SERIES_RTOL`` of the
    partial sum at every frequency, capped at ``MAX_ORDER``.
    Returns ``(tn, tm, hsq, qsq, n_used)``.
    """
    if n_max is not None:
        if not 1 <= n_max <= MAX_ORDER:
            raise ValueError(f"n_max must be in 1..{MAX_ORDER}")
        return (*sphere_series_terms(n_max, r, omega, sphere, constants), n_max)
    w = np.asarray(omega, dtype=complex)
    z_ratio = r * w / constants.c
    nmax = 8
    while True:
        tn, tm, hsq, qsq = sphere_series_terms(nmax, r, w, sphere, constants)
        weight = (2 * np.arange(nmax + 1) + 1).reshape((-1,) + (1,) * w.ndim)
        contrib = np.abs(weight * tn) + np.abs(weight * z_ratio**2 * tm)
        total = np.abs(np.sum(weight * tn, axis=0)) + np.abs(np.sum(weight * z_ratio**2 * tm, axis=0))
        scale = np.where(total > 0, total, 1.0)
        tail = contrib[-SERIES_PATIENCE:] <= SERIES_RTOL * scale
        if np.all(tail) or nmax >= MAX_ORDER:
            # trim trailing orders that are already below tolerance
            small = np.all(contrib <= SERIES_RTOL * scale, axis=tuple(range(1, contrib.ndim)))
            used = nmax
            while used > 1 and small[used] and small[used - 1]:
                used -= 1
            return tn[: used + 1], tm[: used + 1], hsq[: used + 1], qsq[: used + 1], used
        nmax = min(2 * nmax, MAX_ORDER)


def sphere_scattering_green_diag(r, omega, sphere: SphereSpec, constants: PhysicalConstants,
                                 n_max=None, full_output=False):
    """Scattering Green tensor at ``r_1 = r_2`` outside a sphere.

    Returns the radial entry ``G_rr`` and the (equal) tangential entries
    ``G_tt = G_theta_theta = G_phi_phi``.  ``n_max=None`` truncates the
    multipole series adaptively; with ``full_output`` the number of orders
    used is returned as a third element.
    """
    if not r > sphere.radius:
        raise InsideSphere(f"r = {r!r} is not outside the sphere of radius {sphere.radius!r}")
    w = np.asarray(omega, dtype=complex)
    if np.any(w == 0):
        raise ZeroFrequency("scattering Green tensor needs omega != 0")
    c = constants.c
    tn, tm, hsq, qsq, used = sphere_terms_adaptive(r, w, sphere, constants, n_max)
    n = np.arange(used + 1).reshape((-1,) + (1,) * w.ndim)
    w2r2 = (w * r / c) ** 2
    # radial: n(n+1)(2n+1) B^N h^2; tangential: (2n+1)[B^M h^2 + B^N (zh)'^2 / z^2]
    g_rr = 1j * c / (4 * np.pi * w * r**2) * np.sum(n * (n + 1) * (2 * n + 1) * hsq, axis=0)
    g_tt = 1j * w / (8 * np.pi * c) * np.sum((2 * n + 1) * (tm + qsq / w2r2), axis=0)
    if np.ndim(omega) == 0:
        g_rr, g_tt = complex(g_rr), complex(g_tt)
    if full_output:
        return g_rr, g_tt, used
    return g_rr, g_tt
