"""Unit systems.

Every physics routine takes a :class:`PhysicalConstants` instance explicitly;
there is no module-level default that formulas silently read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# CODATA 2018
INV_FINE_STRUCTURE = 137.035999084
HBAR_SI = 1.054571817e-34
C_SI = 2.99792458e8
EPS0_SI = 8.8541878128e-12

HARTREE_EV = 27.211386245988
HARTREE_J = 4.3597447222071e-18
BOHR_M = 5.29177210903e-11
EA0_CM = 8.4783536255e-30  # atomic unit of electric dipole moment
DEBYE_CM = 3.33564095198152e-30
ELEMENTARY_CHARGE = 1.602176634e-19


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float
    c: float
    eps0: float
    name: str = "custom"
    mu0: float = field(init=False)

    def __post_init__(self):
        for key in ("hbar", "c", "eps0"):
            v = getattr(self, key)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{key} must be finite and positive, got {v!r}")
        object.__setattr__(self, "mu0", 1.0 / (self.eps0 * self.c**2))


def atomic_units() -> PhysicalConstants:
    """Hartree atomic units: hbar = 1, 4*pi*eps0 = 1, c = 1/alpha."""
    return PhysicalConstants(
        hbar=1.0, c=INV_FINE_STRUCTURE, eps0=1.0 / (4.0 * math.pi), name="atomic"
    )


def si_units() -> PhysicalConstants:
    return PhysicalConstants(hbar=HBAR_SI, c=C_SI, eps0=EPS0_SI, name="si")


def by_name(name: str) -> PhysicalConstants:
    if name == "atomic":
        return atomic_units()
    if name == "si":
        return si_units()
    raise ValueError(f"unknown unit system {name!r}; expected 'atomic' or 'si'")
