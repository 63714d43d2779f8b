"""Species constants, beam geometry and the derived natural scales.

All quantities are SI. The two built-in species are cold neutrons and
"imaginary silver" (silver-atom mass carrying the Ag-107 nuclear moment);
their constants are stored at the precision of the published tables.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

#: Reduced Planck constant (kg m^2 / s), fixed here rather than user input
#: so that the derived scales cannot be fed unit-mangled values.
HBAR = 1.05e-34


class Species(enum.Enum):
    NEUTRON = "neutron"
    IMAGINARY_SILVER = "silver"


@dataclass(frozen=True)
class PhysicalParams:
    """Mass (kg) and signed gyromagnetic ratio (1/T/s) of one species."""

    mass: float
    gamma: float
    hbar: float = HBAR

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be > 0, got {self.hbar}")
        if self.gamma == 0:
            raise ValueError("gamma must be nonzero")


@dataclass(frozen=True)
class FieldConfig:
    """Uniform field b0 (T), gradient b1 (T/m), active slab [y_start, y_end) (m).

    b0 and b1 are stored non-negative; sign effects enter only through gamma.
    """

    b0: float
    b1: float
    y_start: float
    y_end: float

    def __post_init__(self):
        if self.b0 < 0 or self.b1 < 0:
            raise ValueError(f"b0 and b1 must be >= 0, got b0={self.b0}, b1={self.b1}")
        if not self.y_start < self.y_end:
            raise ValueError(f"need y_start < y_end, got [{self.y_start}, {self.y_end}]")

    @property
    def length(self) -> float:
        return self.y_end - self.y_start


@dataclass(frozen=True)
class BeamConfig:
    """Longitudinal speed v_y (m/s) and source spreads sigma_x (m), sigma_v (m/s).

    The spreads apply to the transverse components only; v_y is sharp.
    """

    v_y: float
    sigma_x: float = 0.0
    sigma_v: float = 0.0

    def __post_init__(self):
        if not self.v_y > 0:
            raise ValueError(f"v_y must be > 0, got {self.v_y}")
        if self.sigma_x < 0 or self.sigma_v < 0:
            raise ValueError("sigma_x and sigma_v must be >= 0")


@dataclass(frozen=True)
class Scales:
    """Traversal time t* (s), velocity change v* (m/s), displacement z* (m)."""

    t_star: float
    v_star: float
    z_star: float


@dataclass(frozen=True)
class DimensionlessCoeffs:
    """Coefficients of the dimensionless two-component Hamiltonian.

    a multiplies the quadratic (x^2 + z^2) term, b the gradient-drift terms,
    c the uniform-field spin splitting.
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"coefficient {name} must be finite")


_PRESETS = {
    Species.NEUTRON: (
        PhysicalParams(mass=1.67e-27, gamma=-1.83e8),
        BeamConfig(v_y=395.6),
    ),
    Species.IMAGINARY_SILVER: (
        PhysicalParams(mass=1.79e-25, gamma=-1.09e7),
        BeamConfig(v_y=540.0),
    ),
}


def preset(species: Species) -> tuple[PhysicalParams, BeamConfig]:
    """Return the tabulated constants of one of the two built-in species."""
    try:
        return _PRESETS[species]
    except KeyError:
        raise ValueError(f"unknown species {species!r}") from None


def derive_scales(params: PhysicalParams, field: FieldConfig, beam: BeamConfig) -> Scales:
    """Natural time/velocity/position scales of a traversal of the field slab.

    t* is the time of flight through the slab, v* the transverse velocity
    change of a fully aligned spin-1/2 moment, z* the displacement it has
    accumulated at the exit plane (z* = v* t* / 2 exactly).
    """
    if not beam.v_y > 0:
        raise ValueError(f"v_y must be > 0, got {beam.v_y}")
    t_star = field.length / beam.v_y
    # Same expression order as dimensionless_coeffs so that b = t0*rate/v0
    # cancels to exactly -sign(gamma) when fed these scales.
    rate = params.hbar * params.gamma * field.b1 / (2.0 * params.mass)
    v_star = abs(rate * t_star)
    return Scales(t_star=t_star, v_star=v_star, z_star=v_star * t_star / 2.0)


def dimensionless_coeffs(
    params: PhysicalParams, field: FieldConfig, t0: float, v0: float
) -> DimensionlessCoeffs:
    """Map SI parameters and the chosen scales (t0, v0) onto (a, b, c).

    With t0 = t* and v0 = v* derived from the same params, b is exactly
    -sign(gamma) by construction.
    """
    if not t0 > 0:
        raise ValueError(f"t0 must be > 0, got {t0}")
    if not v0 > 0:
        raise ValueError(f"v0 must be > 0, got {v0}")
    a = params.mass * t0 * v0 * v0 / (2.0 * params.hbar)
    rate = params.hbar * params.gamma * field.b1 / (2.0 * params.mass)
    b = rate * t0 / v0
    c = params.gamma * field.b0 * t0 / 2.0
    return DimensionlessCoeffs(a=a, b=b, c=c)


def free_flight_displacement(v_transverse: float, distance: float, v_y: float) -> float:
    """Straight-line transverse displacement accumulated after the magnet."""
    if not v_y > 0:
        raise ValueError(f"v_y must be > 0, got {v_y}")
    return v_transverse * distance / v_y
