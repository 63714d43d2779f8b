"""Quadrupole-plus-uniform magnetic field and the force it exerts on a moment.

Inside the slab y in [y_start, y_end) the field is
B = (-x*b1, 0, b0 + z*b1); outside it vanishes. The slab membership is
half-open so a particle exactly at y_end counts as outside.
"""
from __future__ import annotations

import numpy as np

from .params import FieldConfig, PhysicalParams

SPIN_NORM_TOL = 1e-12


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([x, y, z], dtype=np.float64)


def in_field_region(y: float, config: FieldConfig) -> bool:
    return config.y_start <= y < config.y_end


def field_at(position: np.ndarray, config: FieldConfig) -> np.ndarray:
    """Magnetic field (T) at a point (m)."""
    x, y, z = position
    if not in_field_region(y, config):
        return np.zeros(3)
    return vec3(-x * config.b1, 0.0, config.b0 + z * config.b1)


def divergence_and_curl_fd(
    position: np.ndarray, config: FieldConfig, h: float
) -> tuple[float, np.ndarray]:
    """Central finite-difference divergence and curl of the field.

    Both vanish identically for this field; the numerical values check the
    implementation. Positions within h of the slab boundaries are rejected
    because the stencil would straddle the discontinuity.
    """
    if not h > 0:
        raise ValueError(f"h must be > 0, got {h}")
    y = position[1]
    if not (config.y_start + h <= y and y + h < config.y_end):
        raise ValueError(
            f"stencil of width {h} around y={y} leaves the field region "
            f"[{config.y_start}, {config.y_end})"
        )

    def partial(component: int, axis: int) -> float:
        dp = position.copy()
        dm = position.copy()
        dp[axis] += h
        dm[axis] -= h
        return (field_at(dp, config)[component] - field_at(dm, config)[component]) / (2 * h)

    div = partial(0, 0) + partial(1, 1) + partial(2, 2)
    curl = vec3(
        partial(2, 1) - partial(1, 2),
        partial(0, 2) - partial(2, 0),
        partial(1, 0) - partial(0, 1),
    )
    return div, curl


def force_on_moment(
    spin: np.ndarray, params: PhysicalParams, config: FieldConfig, inside: bool
) -> np.ndarray:
    """Gradient force on a classical moment, in the gamma*B1 convention.

    Returns gamma*b1*(-S^x, 0, S^z); the caller multiplies by hbar/mass to
    obtain an acceleration. Zero outside the slab. The force is independent
    of position inside the slab.
    """
    norm = float(np.linalg.norm(spin))
    if abs(norm - 0.5) > SPIN_NORM_TOL:
        raise ValueError(f"|spin| must be 1/2, got {norm}")
    if not inside:
        return np.zeros(3)
    g = params.gamma * config.b1
    return vec3(-g * spin[0], 0.0, g * spin[2])
