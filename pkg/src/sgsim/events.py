"""Event-by-event engine: Newtonian dynamics plus one-time spin alignment.

On the first integration step inside the field slab with a nonzero local
field, the spin snaps to +-B/(2||B||) with the Malus-law probability
(1 + cos(xi))/2, realized by a single uniform threshold draw per particle.
Everything else is identical to the Newtonian engine, including the random
streams, so disabling the alignment reproduces it bit for bit.
"""
from __future__ import annotations

import math

import numpy as np

from .newton import ExitRecord, InitSpec, _run_kernel
from .params import BeamConfig, FieldConfig, PhysicalParams


def malus_probability(xi: float, outcome: int) -> float:
    """Probability of the +-1 outcome for an angle xi between spin and field.

    (1 + outcome*cos(xi))/2, i.e. cos^2(xi/2) for +1 and sin^2(xi/2) for -1.
    """
    if outcome not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome}")
    if not 0.0 <= xi <= math.pi:
        raise ValueError(f"xi must lie in [0, pi], got {xi}")
    return 0.5 * (1.0 + outcome * math.cos(xi))


def align_spin_once(spin: np.ndarray, b_field: np.ndarray, r: float) -> np.ndarray:
    """Threshold rule: align S to +B/(2||B||) iff r <= S.B/||B||, else -.

    With r uniform on [-1/2, 1/2] the + outcome occurs with probability
    (1 + cos(xi))/2. Ties count as +. Rejects a zero field.
    """
    b = np.asarray(b_field, dtype=np.float64)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        raise ValueError("cannot align to a zero field")
    sign = 1.0 if r <= float(np.dot(spin, b)) / bnorm else -1.0
    return sign * 0.5 * b / bnorm


def run_event_ensemble(
    n: int,
    init: InitSpec,
    tau: float,
    params: PhysicalParams,
    field_config: FieldConfig,
    beam: BeamConfig,
    seed: int,
    workers: int = 1,
    align: bool = True,
) -> list[ExitRecord]:
    """Event-model ensemble; with align=False it equals run_ensemble exactly."""
    return _run_kernel(n, init, tau, params, field_config, beam, seed, workers, align)
