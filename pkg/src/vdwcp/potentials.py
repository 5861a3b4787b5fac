"""Two-atom van der Waals and atom-sphere Casimir-Polder potentials.

Resonant parts come in two prescriptions and are always tagged:

``principal_value``
    real-axis poles taken as principal values; oscillates with distance.
``power``
    poles displaced off the axis; built from ``sum_ij |G_ij|^2`` and
    monotone in distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .atoms import (
    AtomSpec,
    TransitionChannel,
    channels,
    downward_channels,
    polarizability,
    polarizability_imag,
)
from .constants import PhysicalConstants
from .errors import InsideSphere, PlasmonResonance, UnconvergedQuadrature
from .greens import (
    SphereSpec,
    free_space_axis_components,
    sphere_terms_adaptive,
)
from .quadrature import QuadratureResult, integrate_semi_infinite

PV = "principal_value"
POWER = "power"
METHODS = (PV, POWER)
IMAG_RESIDUE_TOL = 1e-12
PLASMON_GUARD = 1e-8


@dataclass(frozen=True)
class QuadSettings:
    rel_tol: float = 1e-10
    abs_floor: float = 0.0
    max_evaluations: int = 1_000_000
    raise_unconverged: bool = True


@dataclass(frozen=True)
class ResonantTerm:
    channel: TransitionChannel
    atom: str  # "A" or "B": which atom emits
    method: str
    energy: float
    flags: tuple = ()


@dataclass
class PotentialBreakdown:
    off_resonant: float
    resonant: list = field(default_factory=list)
    converged: bool = True

    def resonant_total(self, method: str) -> float:
        return float(sum(t.energy for t in self.resonant if t.method == method))

    def total(self, method: str) -> float:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        return self.off_resonant + self.resonant_total(method)

    def to_dict(self):
        return {
            "off_resonant": self.off_resonant,
            "resonant": [
                {
                    "atom": t.atom,
                    "from_state": t.channel.from_state,
                    "to_state": t.channel.to_state,
                    "omega": t.channel.emission_frequency,
                    "method": t.method,
                    "energy": t.energy,
                    "flags": list(t.flags),
                }
                for t in self.resonant
            ],
            "total": {m: self.total(m) for m in METHODS},
            "converged": self.converged,
        }


def _real(value, what="potential"):
    """Drop an imaginary part that must vanish, checking that it does."""
    v = complex(value)
    if abs(v.imag) > IMAG_RESIDUE_TOL * max(abs(v), 1e-300) and abs(v.imag) > 0:
        raise ArithmeticError(f"{what} has imaginary residue {v.imag:.3e} (real part {v.real:.3e})")
    return v.real


def _finish(res: QuadratureResult, quad: QuadSettings):
    if not res.converged and quad.raise_unconverged:
        raise UnconvergedQuadrature(res)
    return res


def _decay_scale(r, constants, *atoms):
    """Map length for imaginary-frequency integrals: c/(2r) capped by atomic scales."""
    scale = constants.c / (2.0 * r)
    freqs = [abs(ch.omega) for atom in atoms for ch in channels(atom, constants)]
    if freqs:
        scale = min(scale, min(freqs))
    return scale


def f_retardation(x):
    """``exp(-2x) (3 + 6x + 5x^2 + 2x^3 + x^4)``; f(0) = 3."""
    x = np.asarray(x, dtype=float)
    return np.exp(-2 * x) * (3 + x * (6 + x * (5 + x * (2 + x))))


def oscillatory_bracket(eta):
    """``(3 - 5 eta^2 + eta^4) cos 2 eta + (6 eta - 2 eta^3) sin 2 eta``."""
    eta = np.asarray(eta, dtype=float)
    e2 = eta * eta
    return (3 - 5 * e2 + e2 * e2) * np.cos(2 * eta) + (6 * eta - 2 * eta * e2) * np.sin(2 * eta)


def bracket_envelope(eta):
    """Amplitude of :func:`oscillatory_bracket` as a function of ``eta``."""
    eta = np.asarray(eta, dtype=float)
    e2 = eta * eta
    return np.hypot(3 - 5 * e2 + e2 * e2, 6 * eta - 2 * eta * e2)


def power_factor(eta):
    """``3 + eta^2 + eta^4``, the power-form counterpart of the bracket."""
    eta = np.asarray(eta, dtype=float)
    return 3 + eta**2 + eta**4


# -- generic body-assisted two-atom potentials --------------------------------


def _green_on(green, r1, r2, omega):
    return np.asarray(green.evaluate(r1, r2, omega), dtype=complex)


def _pos(geometry):
    r_A, r_B = geometry
    return np.asarray(r_A, dtype=float), np.asarray(r_B, dtype=float)


def vdw_off_resonant_general(atomA: AtomSpec, k: int, atomB: AtomSpec, l: int, green, geometry,
                             quad: QuadSettings, constants: PhysicalConstants) -> float:
    """Off-resonant two-atom potential for any full Green tensor.

    ``-(hbar mu0^2 / 2 pi) int du u^4 alpha_A(iu) alpha_B(iu)
    tr[G(rA, rB, iu) G(rB, rA, iu)]`` with isotropic polarisabilities.
    """
    rA, rB = _pos(geometry)
    A, B = atomA.in_state(k), atomB.in_state(l)
    sep = float(np.linalg.norm(rB - rA))
    hbar, mu0 = constants.hbar, constants.mu0

    def integrand(u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        live = u * sep / constants.c < 350.0
        if not np.any(live):
            return out
        uu = u[live]
        aA = polarizability_imag(A, None, uu, constants)
        aB = polarizability_imag(B, None, uu, constants)
        G1 = _green_on(green, rA, rB, 1j * uu)
        G2 = _green_on(green, rB, rA, 1j * uu)
        tr = np.einsum("...ij,...ji->...", G1, G2).real
        out[live] = uu**4 * aA * aB * tr
        return out

    if not channels(A, constants) or not channels(B, constants):
        return 0.0
    res = integrate_semi_infinite(integrand, _decay_scale(sep, constants, A, B), quad.rel_tol,
                                  quad.abs_floor, quad.max_evaluations)
    _finish(res, quad)
    return -hbar * mu0**2 / (2 * np.pi) * float(np.real(res.value))


def vdw_resonant_general(atomA: AtomSpec, k: int, atomB: AtomSpec, l: int, green, geometry,
                         constants: PhysicalConstants, dipoles=None):
    """Principal-value resonant terms for any full Green tensor.

    One term per downward channel of either atom.  With isotropic averaging
    each term is ``-mu0^2 w^4 (|d|^2/3) alpha_other(w) Re tr[G(rA,rB,w)
    G(rB,rA,w)]``.  ``dipoles`` may map ``("A"|"B", m)`` to an explicit
    dipole vector ``d^{km}`` for oriented studies; the partner atom stays
    isotropic.
    """
    rA, rB = _pos(geometry)
    A, B = atomA.in_state(k), atomB.in_state(l)
    mu0 = constants.mu0
    terms = []
    for label, emitter, partner, (r1, r2) in (("A", A, B, (rA, rB)), ("B", B, A, (rB, rA))):
        for ch in downward_channels(emitter, constants):
            w = ch.emission_frequency
            alpha = polarizability(partner, None, w, constants)
            G12 = _green_on(green, r1, r2, w)
            G21 = _green_on(green, r2, r1, w)
            vec = None if dipoles is None else dipoles.get((label, ch.to_state))
            if vec is None:
                amp = ch.dipole**2 / 3.0 * alpha * np.trace(G12 @ G21)
            else:
                d = np.asarray(vec, dtype=complex)
                amp = alpha * (d @ G12 @ G21 @ np.conj(d))
            energy = -(mu0**2) * w**4 * float(np.real(amp))
            # partner excited too: its polarisability has poles on both sides of w
            flags = ("partner_excited",) if partner.prepared_state != 0 else ()
            terms.append(ResonantTerm(ch, label, PV, energy, flags))
    return terms


def vdw_resonant_power(atomA: AtomSpec, k: int, atomB: AtomSpec, green, geometry,
                       constants: PhysicalConstants):
    """Power-prescription resonant terms, atom B in its ground state.

    ``-(mu0^2/3) w^4 |d|^2 alpha_B^0(w) sum_ij |G_ij(rB, rA, w)|^2``.
    """
    rA, rB = _pos(geometry)
    A = atomA.in_state(k)
    B = atomB.in_state(0)
    mu0 = constants.mu0
    terms = []
    for ch in downward_channels(A, constants):
        w = ch.emission_frequency
        alpha = polarizability(B, None, w, constants)
        G = _green_on(green, rB, rA, w)
        s = float(np.sum(np.abs(G) ** 2))
        energy = -(mu0**2) / 3.0 * w**4 * ch.dipole**2 * _real(alpha, "polarizability") * s
        terms.append(ResonantTerm(ch, "A", POWER, energy))
    return terms


# -- free-space closed forms -----------------------------------------------------


def vdw_free_space_off_resonant(atomA: AtomSpec, k: int, atomB: AtomSpec, l: int, r: float,
                                quad: QuadSettings, constants: PhysicalConstants) -> float:
    """``-hbar/(16 pi^3 eps0^2 r^6) int du alpha_A(iu) alpha_B(iu) f(ru/c)``."""
    if not r > 0:
        raise ValueError("separation must be positive")
    A, B = atomA.in_state(k), atomB.in_state(l)
    if not channels(A, constants) or not channels(B, constants):
        return 0.0
    c = constants.c

    def integrand(u):
        return (polarizability_imag(A, None, u, constants) * polarizability_imag(B, None, u, constants)
                * f_retardation(r * u / c))

    res = integrate_semi_infinite(integrand, _decay_scale(r, constants, A, B), quad.rel_tol,
                                  quad.abs_floor, quad.max_evaluations)
    _finish(res, quad)
    pref = -constants.hbar / (16 * np.pi**3 * constants.eps0**2 * r**6)
    return pref * float(res.value)


def vdw_free_space_resonant_pv(atomA: AtomSpec, k: int, atomB: AtomSpec, r: float,
                               constants: PhysicalConstants):
    """Oscillatory resonant terms in free space, atom B in its ground state."""
    if not r > 0:
        raise ValueError("separation must be positive")
    A, B = atomA.in_state(k), atomB.in_state(0)
    terms = []
    for ch in downward_channels(A, constants):
        w = ch.emission_frequency
        alpha = _real(polarizability(B, None, w, constants), "polarizability")
        eta = r * w / constants.c
        energy = (-1.0 / (24 * np.pi**2 * constants.eps0**2 * r**6) * ch.dipole**2 * alpha
                  * float(oscillatory_bracket(eta)))
        terms.append(ResonantTerm(ch, "A", PV, energy))
    return terms


def vdw_free_space_resonant_power(atomA: AtomSpec, k: int, atomB: AtomSpec, r: float,
                                  constants: PhysicalConstants):
    """Monotone resonant terms in free space, ``(1 + eta^-2 + 3 eta^-4) / r^2``."""
    if not r > 0:
        raise ValueError("separation must be positive")
    A, B = atomA.in_state(k), atomB.in_state(0)
    mu0 = constants.mu0
    terms = []
    for ch in downward_channels(A, constants):
        w = ch.emission_frequency
        alpha = _real(polarizability(B, None, w, constants), "polarizability")
        eta = r * w / constants.c
        energy = (-(mu0**2) / (24 * np.pi**2 * r**2) * w**4 * ch.dipole**2 * alpha
                  * (1 + eta**-2 + 3 * eta**-4))
        terms.append(ResonantTerm(ch, "A", POWER, energy))
    return terms


def free_space_breakdown(atomA: AtomSpec, k: int, atomB: AtomSpec, l: int, r: float,
                         constants: PhysicalConstants, quad: QuadSettings = QuadSettings(),
                         methods=METHODS) -> PotentialBreakdown:
    """Off-resonant part plus both resonant prescriptions in free space.

    Atom B's own downward channels (when ``l > 0``) enter the
    principal-value sum through the generic tensor path; the power form is
    only defined for a ground-state partner and raises otherwise.
    """
    try:
        off = vdw_free_space_off_resonant(atomA, k, atomB, l, r, quad, constants)
        ok = True
    except UnconvergedQuadrature as exc:
        off = -constants.hbar / (16 * np.pi**3 * constants.eps0**2 * r**6) * float(np.real(exc.result.value))
        ok = False
    terms = []
    if PV in methods:
        if l == 0:
            terms += vdw_free_space_resonant_pv(atomA, k, atomB, r, constants)
        else:
            from .greens import FreeSpaceGreen

            terms += vdw_resonant_general(atomA, k, atomB, l, FreeSpaceGreen(constants),
                                          ((0.0, 0.0, 0.0), (r, 0.0, 0.0)), constants)
    if POWER in methods:
        if l != 0 and downward_channels(atomB.in_state(l), constants):
            raise ValueError("power form is only defined for a ground-state partner atom")
        terms += vdw_free_space_resonant_power(atomA, k, atomB, r, constants)
    return PotentialBreakdown(off, terms, ok)


def free_space_power_via_tensor(atomA: AtomSpec, k: int, atomB: AtomSpec, r: float,
                                constants: PhysicalConstants):
    """Power form from the axis components: ``sum |G_ij|^2 = |G_xx|^2 + 2 |G_yy|^2``."""
    A, B = atomA.in_state(k), atomB.in_state(0)
    mu0 = constants.mu0
    out = []
    for ch in downward_channels(A, constants):
        w = ch.emission_frequency
        alpha = _real(polarizability(B, None, w, constants), "polarizability")
        gxx, gyy = free_space_axis_components(r, w, constants)
        s = abs(gxx) ** 2 + 2 * abs(gyy) ** 2
        out.append(ResonantTerm(ch, "A", POWER, -(mu0**2) / 3.0 * w**4 * ch.dipole**2 * alpha * s))
    return out


# -- Casimir-Polder potential near a dielectric sphere -----------------------------


def _check_outside(r, sphere):
    if not r > sphere.radius:
        raise InsideSphere(f"atom at r = {r!r} is not outside the sphere (a = {sphere.radius!r})")


def cp_off_resonant_sphere(atom: AtomSpec, k: int, r: float, sphere: SphereSpec,
                           quad: QuadSettings, constants: PhysicalConstants, n_max=None,
                           full_output=False):
    """Off-resonant CP potential from the full multipole series.

    ``hbar mu0 c / (8 pi^2 r^2) sum_n (2n+1) int du u alpha(iu)
    {B^N [n(n+1) h^2 + ((zh)')^2] - (r u / c)^2 B^M h^2}`` at ``z = i r u / c``.
    With ``full_output`` returns ``(energy, n_max_used)``.
    """
    _check_outside(r, sphere)
    A = atom.in_state(k)
    c = constants.c
    used = [0]
    if sphere.material.is_vacuum or not channels(A, constants):
        return (0.0, 0) if full_output else 0.0
    # the integrand carries exp(-2 (r - a) u / c)
    cutoff = 350.0 * c / (r - sphere.radius)

    def integrand(u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        live = u < cutoff
        if not np.any(live):
            return out
        uu = u[live]
        tn, tm, _, _, n_used = sphere_terms_adaptive(r, 1j * uu, sphere, constants, n_max)
        used[0] = max(used[0], n_used)
        n = np.arange(n_used + 1)[:, None]
        series = np.sum((2 * n + 1) * (tn - (r * uu / c) ** 2 * tm), axis=0)
        vals = uu * polarizability_imag(A, None, uu, constants) * series
        bad = np.abs(vals.imag) > 1e-8 * np.maximum(np.abs(vals), 1e-300)
        if np.any(bad):
            raise ArithmeticError("imaginary-axis CP integrand is not real")
        out[live] = vals.real
        return out

    scale = min(c / (2.0 * (r - sphere.radius)), _decay_scale(r, constants, A))
    res = integrate_semi_infinite(integrand, scale, quad.rel_tol, quad.abs_floor, quad.max_evaluations)
    _finish(res, quad)
    energy = constants.hbar * constants.mu0 * c / (8 * np.pi**2 * r**2) * float(res.value)
    return (energy, used[0]) if full_output else energy


def cp_resonant_sphere(atom: AtomSpec, k: int, r: float, sphere: SphereSpec,
                       constants: PhysicalConstants, n_max=None, full_output=False):
    """Resonant CP terms from the full multipole series, one per downward channel.

    ``mu0 c / (12 pi r^2) w |d|^2 sum_n (2n+1) Im{B^N [n(n+1) h^2 + ((zh)')^2]
    + (r w / c)^2 B^M h^2}`` at ``z = r w / c``.
    """
    _check_outside(r, sphere)
    A = atom.in_state(k)
    c = constants.c
    terms = []
    used = 0
    for ch in downward_channels(A, constants):
        w = ch.emission_frequency
        if sphere.material.is_vacuum:
            terms.append(ResonantTerm(ch, "A", PV, 0.0))
            continue
        tn, tm, _, _, n_used = sphere_terms_adaptive(r, complex(w), sphere, constants, n_max)
        used = max(used, n_used)
        n = np.arange(n_used + 1)
        series = complex(np.sum((2 * n + 1) * (tn + (r * w / c) ** 2 * tm)))
        energy = constants.mu0 * c / (12 * np.pi * r**2) * w * ch.dipole**2 * series.imag
        terms.append(ResonantTerm(ch, "A", PV, energy))
    return (terms, used) if full_output else terms


def cm_factor(chi):
    """``(eps - 1)/(eps + 2)`` written in the susceptibility ``chi = eps - 1``."""
    chi = complex(chi)
    if abs(chi + 3.0) < PLASMON_GUARD * max(1.0, abs(chi)):
        raise PlasmonResonance(f"eps = {1 + chi!r} sits on the eps = -2 surface-plasmon pole")
    return chi / (chi + 3.0)


def cp_small_sphere_off_resonant(atom: AtomSpec, k: int, r: float, sphere: SphereSpec,
                                 quad: QuadSettings, constants: PhysicalConstants) -> float:
    """Dipole-limit off-resonant CP potential, ``propto a^3 / r^6``."""
    if not r > 0:
        raise ValueError("distance must be positive")
    A = atom.in_state(k)
    if sphere.material.is_vacuum or not channels(A, constants):
        return 0.0
    c = constants.c

    def integrand(u):
        chi = sphere.material.susceptibility(1j * np.asarray(u)).real
        return polarizability_imag(A, None, u, constants) * chi / (chi + 3) * f_retardation(r * u / c)

    res = integrate_semi_infinite(integrand, _decay_scale(r, constants, A), quad.rel_tol,
                                  quad.abs_floor, quad.max_evaluations)
    _finish(res, quad)
    a = sphere.radius
    return -constants.hbar * a**3 / (4 * np.pi**2 * constants.eps0 * r**6) * float(res.value)


def cp_small_sphere_resonant(atom: AtomSpec, k: int, r: float, sphere: SphereSpec,
                             constants: PhysicalConstants):
    """Dipole-limit resonant CP terms; same oscillatory bracket as the two-atom case."""
    if not r > 0:
        raise ValueError("distance must be positive")
    A = atom.in_state(k)
    a = sphere.radius
    terms = []
    for ch in downward_channels(A, constants):
        w = ch.emission_frequency
        chi = _real(cm_factor(sphere.material.susceptibility(w)), "Clausius-Mossotti factor") if not sphere.material.is_vacuum else 0.0
        eta = r * w / constants.c
        energy = (-(a**3) / (6 * np.pi * constants.eps0 * r**6) * ch.dipole**2 * chi
                  * float(oscillatory_bracket(eta)))
        terms.append(ResonantTerm(ch, "A", PV, energy))
    return terms


def clausius_mossotti_alpha(sphere: SphereSpec, omega, constants: PhysicalConstants) -> complex:
    """Point polarisability ``4 pi eps0 a^3 (eps - 1)/(eps + 2)`` of a small sphere."""
    chi = sphere.material.susceptibility(omega)
    return 4 * np.pi * constants.eps0 * sphere.radius**3 * cm_factor(chi)


def cp_sphere_breakdown(atom: AtomSpec, k: int, r: float, sphere: SphereSpec,
                        constants: PhysicalConstants, quad: QuadSettings = QuadSettings(),
                        n_max=None):
    """Full-series CP potential; returns ``(PotentialBreakdown, n_max_used)``."""
    ok = True
    try:
        off, n1 = cp_off_resonant_sphere(atom, k, r, sphere, quad, constants, n_max, full_output=True)
    except UnconvergedQuadrature as exc:
        off = constants.hbar * constants.mu0 * constants.c / (8 * np.pi**2 * r**2) * float(np.real(exc.result.value))
        n1, ok = 0, False
    terms, n2 = cp_resonant_sphere(atom, k, r, sphere, constants, n_max, full_output=True)
    return PotentialBreakdown(off, terms, ok), max(n1, n2)
