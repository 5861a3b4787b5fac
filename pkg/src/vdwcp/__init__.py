"""Body-assisted van der Waals and Casimir-Polder potentials of excited atoms."""

from .constants import PhysicalConstants, atomic_units, si_units
from .atoms import AtomSpec, TransitionChannel, channels, polarizability
from .greens import (
    PermittivityModel,
    SphereSpec,
    FreeSpaceGreen,
    free_space_green,
    mie_B_M,
    mie_B_N,
    sphere_scattering_green_diag,
)
from .potentials import PotentialBreakdown

__all__ = [
    "PhysicalConstants",
    "atomic_units",
    "si_units",
    "AtomSpec",
    "TransitionChannel",
    "channels",
    "polarizability",
    "PermittivityModel",
    "SphereSpec",
    "FreeSpaceGreen",
    "free_space_green",
    "mie_B_M",
    "mie_B_N",
    "sphere_scattering_green_diag",
    "PotentialBreakdown",
]

__version__ = "0.1.0"
