"""Material property table for 3D stack thermal modeling.

Conductivities in W/(m K), volumetric heat capacities in J/(m^3 K).
Values are standard literature defaults; every one of them can be
overridden by constructing a custom Material in the stack config.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Material:
    """Isotropic material unless k_lateral is given (then k is vertical)."""

    name: str
    k: float
    volumetric_heat_capacity: float
    k_lateral: float | None = None

    def __post_init__(self):
        if self.k <= 0.0:
            raise ValueError(f"material {self.name!r}: k must be > 0, got {self.k}")
        if self.volumetric_heat_capacity <= 0.0:
            raise ValueError(
                f"material {self.name!r}: volumetric_heat_capacity must be > 0, "
                f"got {self.volumetric_heat_capacity}"
            )
        if self.k_lateral is not None and self.k_lateral <= 0.0:
            raise ValueError(
                f"material {self.name!r}: k_lateral must be > 0, got {self.k_lateral}"
            )

    @property
    def kxy(self) -> float:
        return self.k if self.k_lateral is None else self.k_lateral

    @property
    def kz(self) -> float:
        return self.k


SILICON = Material("silicon", k=150.0, volumetric_heat_capacity=1.63e6)
COPPER = Material("copper", k=400.0, volumetric_heat_capacity=3.45e6)
TUNGSTEN = Material("tungsten", k=174.0, volumetric_heat_capacity=2.58e6)
SIO2 = Material("sio2", k=1.4, volumetric_heat_capacity=1.8e6)

# BEOL metal/dielectric stack, homogenized: lateral wiring helps spreading,
# vertical path is dielectric-dominated.
BEOL_STACK = Material(
    "beol_stack", k=1.0, volumetric_heat_capacity=1.8e6, k_lateral=2.25
)

# Micro-C4 bumps plus underfill, lumped into one slab.
BOND_UNDERFILL = Material("bond_underfill", k=1.5, volumetric_heat_capacity=1.8e6)

# C4 bump field plus underfill between package and bottom die.
PACKAGE_BUMPS = Material("package_bumps", k=1.5, volumetric_heat_capacity=1.8e6)

# Thermal interface material under the heat sink.
TIM = Material("tim", k=4.0, volumetric_heat_capacity=2.0e6)

DEFAULT_MATERIALS = {
    m.name: m
    for m in (SILICON, COPPER, TUNGSTEN, SIO2, BEOL_STACK, BOND_UNDERFILL,
              PACKAGE_BUMPS, TIM)
}
