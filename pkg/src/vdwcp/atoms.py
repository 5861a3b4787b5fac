"""Atomic level schemes, transition channels and polarisabilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import PhysicalConstants
from .errors import NearResonance

DETUNE_GUARD = 1e-6


@dataclass(frozen=True)
class AtomSpec:
    """Level energies, transition dipole magnitudes and the prepared state.

    ``dipole_magnitudes[k][m]`` is ``|<k|d|m>|``; orientation is averaged
    isotropically everywhere except where a caller supplies explicit dipole
    vectors.
    """

    energies: tuple
    dipole_magnitudes: tuple
    prepared_state: int = 0

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        d = np.asarray(self.dipole_magnitudes, dtype=float)
        n = e.size
        if e.ndim != 1 or n < 1:
            raise ValueError("energies must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(e)) or np.any(np.diff(e) <= 0):
            raise ValueError("energies must be finite and strictly increasing")
        if d.shape != (n, n):
            raise ValueError(f"dipole matrix must be {n}x{n}, got {d.shape}")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("dipole magnitudes must be finite and >= 0")
        if not np.array_equal(d, d.T):
            raise ValueError("dipole matrix must be symmetric")
        if np.any(np.diag(d) != 0):
            raise ValueError("dipole matrix must have a zero diagonal")
        k = self.prepared_state
        if not isinstance(k, (int, np.integer)) or not 0 <= k < n:
            raise ValueError(f"prepared_state {k!r} out of range for {n} levels")
        object.__setattr__(self, "energies", tuple(float(x) for x in e))
        object.__setattr__(self, "dipole_magnitudes", tuple(tuple(float(x) for x in row) for row in d))
        object.__setattr__(self, "prepared_state", int(k))

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    def in_state(self, k: int) -> "AtomSpec":
        return AtomSpec(self.energies, self.dipole_magnitudes, k)

    @classmethod
    def two_level(cls, omega0: float, dipole: float, excited: bool = False, hbar: float = 1.0):
        return cls((0.0, hbar * omega0), ((0.0, dipole), (dipole, 0.0)), 1 if excited else 0)


@dataclass(frozen=True)
class TransitionChannel:
    """One transition ``k -> m``; ``omega`` is ``(E_m - E_k)/hbar``."""

    from_state: int
    to_state: int
    omega: float
    dipole: float

    @property
    def downward(self) -> bool:
        return self.omega < 0

    @property
    def emission_frequency(self) -> float:
        """``omega^{km} = -omega``, positive for downward channels."""
        return -self.omega


def channels(atom: AtomSpec, constants: PhysicalConstants, k: int | None = None):
    """All channels out of state ``k`` (default: the prepared state) with nonzero dipole."""
    k = atom.prepared_state if k is None else k
    out = []
    for m in range(atom.n_levels):
        d = atom.dipole_magnitudes[k][m]
        if m == k or d == 0.0:
            continue
        omega = (atom.energies[m] - atom.energies[k]) / constants.hbar
        out.append(TransitionChannel(k, m, omega, d))
    return out


def downward_channels(atom, constants, k=None):
    return [ch for ch in channels(atom, constants, k) if ch.downward]


def polarizability(atom: AtomSpec, k: int | None, omega, constants: PhysicalConstants,
                   detune_guard: float = DETUNE_GUARD):
    """Isotropic polarisability ``alpha^k(omega)`` of the atom in state ``k``.

    ``(2/3 hbar) sum_m w_mk |d_km|^2 / (w_mk^2 - omega^2)``, with the
    infinitesimal damping already taken to zero.  ``omega`` may be a scalar
    or an array; real frequencies closer than ``detune_guard * |w_mk|`` to a
    transition raise :class:`NearResonance`.
    """
    w = np.asarray(omega, dtype=complex)
    out = np.zeros(w.shape, dtype=complex)
    for ch in channels(atom, constants, k):
        wmk = ch.omega
        if np.any(w.imag == 0):
            real_w = np.abs(w.real[w.imag == 0])
            gap = np.min(np.abs(real_w - abs(wmk))) if real_w.size else np.inf
            if gap <= detune_guard * abs(wmk):
                raise NearResonance(abs(wmk), gap)
        out += wmk * ch.dipole**2 / (wmk**2 - w**2)
    out *= 2.0 / (3.0 * constants.hbar)
    if np.ndim(omega) == 0:
        return complex(out)
    return out


def polarizability_imag(atom: AtomSpec, k: int | None, u, constants: PhysicalConstants):
    """``alpha^k(iu)`` as a real array."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    for ch in channels(atom, constants, k):
        out += ch.omega * ch.dipole**2 / (ch.omega**2 + u**2)
    return out * (2.0 / (3.0 * constants.hbar))
