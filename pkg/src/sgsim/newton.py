"""Newtonian engine: velocity-Verlet ensembles with exact spin precession.

The translational motion is integrated with velocity Verlet (exact for the
piecewise-constant force of this field model) while the spin is advanced by
the exact rotation of the torque equation. Two closed forms serve as
oracles: the constant-force trajectory of z-aligned spins and the strong
uniform-field approximation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .errors import EngineError
from .field import field_at, force_on_moment, in_field_region, vec3
from .params import BeamConfig, FieldConfig, PhysicalParams, derive_scales


@dataclass
class ParticleState:
    """Position (m), velocity (m/s) and classical spin vector (|S| = 1/2)."""

    position: np.ndarray
    velocity: np.ndarray
    spin: np.ndarray


@dataclass(frozen=True)
class ExitRecord:
    """Transverse exit velocity and spin of one particle."""

    particle_id: int
    vx: float
    vz: float
    spin: np.ndarray


@dataclass(frozen=True)
class InitSpec:
    """Initial spin prescription for an ensemble.

    mode 'sphere' draws directions uniformly on the sphere, 'polar' fixes
    the polar angle theta and draws the azimuth, 'fixed' fixes both angles.
    """

    mode: str = "sphere"
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if self.mode not in ("sphere", "polar", "fixed"):
            raise ValueError(f"unknown spin init mode {self.mode!r}")

    def mode_code(self) -> int:
        return {
            "sphere": _kernels.SPIN_MODE_SPHERE,
            "polar": _kernels.SPIN_MODE_POLAR,
            "fixed": _kernels.SPIN_MODE_FIXED,
        }[self.mode]


def rotation_matrix(b_field: np.ndarray, gamma: float, tau: float) -> np.ndarray:
    """Exact spin-precession rotation over a step tau in a constant field.

    Rotation through angle tau*Omega, Omega = |gamma|*||B||, about the axis
    gamma*B/Omega. Orthogonal with determinant +1; identity for zero field.
    """
    bnorm = float(np.linalg.norm(b_field))
    if bnorm == 0.0:
        return np.eye(3)
    omega = abs(gamma) * bnorm
    u = gamma * np.asarray(b_field, dtype=np.float64) / omega
    c = math.cos(tau * omega)
    s = math.sin(tau * omega)
    ucross = np.array(
        [[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]]
    )
    return c * np.eye(3) + (1.0 - c) * np.outer(u, u) - s * ucross


def verlet_step(
    state: ParticleState, tau: float, params: PhysicalParams, field_config: FieldConfig
) -> ParticleState:
    """One five-step velocity-Verlet update: kick, drift, rotate, force, kick.

    The force is re-evaluated from the rotated spin at the new position and
    gated on the field slab. Pure function; the input state is not modified.
    """
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    hm = params.hbar / params.mass
    pos = state.position.astype(np.float64).copy()
    vel = state.velocity.astype(np.float64).copy()
    spin = state.spin.astype(np.float64).copy()

    force = force_on_moment(spin, params, field_config, in_field_region(pos[1], field_config))
    vel += 0.5 * tau * hm * force
    pos += tau * vel
    spin = rotation_matrix(field_at(pos, field_config), params.gamma, tau) @ spin
    force = force_on_moment(spin, params, field_config, in_field_region(pos[1], field_config))
    vel += 0.5 * tau * hm * force
    return ParticleState(position=pos, velocity=vel, spin=spin)


def integrate_in_field(
    state: ParticleState,
    total_time: float,
    tau: float,
    params: PhysicalParams,
    field_config: FieldConfig,
) -> ParticleState:
    """Advance a state by whole tau steps plus one exact residual step.

    Splitting the final step keeps the elapsed time exactly total_time;
    for a constant force the scheme then reproduces the continuum
    trajectory to rounding error.
    """
    n_full, residual = divmod(total_time, tau)
    for _ in range(int(n_full)):
        state = verlet_step(state, tau, params, field_config)
    if residual > 0.0:
        state = verlet_step(state, residual, params, field_config)
    return state


def initial_conditions(
    n: int, init: InitSpec, beam: BeamConfig, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source-plane positions, velocities and spins an ensemble will use.

    Mirrors the integration kernel's initialization from the same
    counter-based streams; useful for comparing exit records against
    per-particle closed forms.
    """
    draws = _kernels.particle_draws(n, seed)
    pos = np.zeros((n, 3))
    pos[:, 0] = beam.sigma_x * draws[:, 1]
    pos[:, 2] = beam.sigma_x * draws[:, 2]
    vel = np.zeros((n, 3))
    vel[:, 0] = beam.sigma_v * draws[:, 3]
    vel[:, 1] = beam.v_y
    vel[:, 2] = beam.sigma_v * draws[:, 4]
    spin = np.empty((n, 3))
    if init.mode == "sphere":
        spin[:, 2] = 0.5 * draws[:, 5]
        rt = np.sqrt(np.maximum(0.25 - spin[:, 2] ** 2, 0.0))
        spin[:, 0] = rt * np.cos(draws[:, 6])
        spin[:, 1] = rt * np.sin(draws[:, 6])
    elif init.mode == "polar":
        spin[:, 2] = 0.5 * math.cos(init.theta)
        st = 0.5 * math.sin(init.theta)
        spin[:, 0] = st * np.cos(draws[:, 6])
        spin[:, 1] = st * np.sin(draws[:, 6])
    else:
        spin[:, 0] = 0.5 * math.sin(init.theta) * math.cos(init.phi)
        spin[:, 1] = 0.5 * math.sin(init.theta) * math.sin(init.phi)
        spin[:, 2] = 0.5 * math.cos(init.theta)
    return pos, vel, spin


def sample_uniform_sphere(rng: np.random.Generator) -> np.ndarray:
    """Spin vector of norm 1/2 with direction uniform on the sphere."""
    u = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * np.pi)
    sz = 0.5 * u
    rt = math.sqrt(max(0.25 - sz * sz, 0.0))
    return vec3(rt * math.cos(phi), rt * math.sin(phi), sz)


def analytic_constant_force(
    t: float, spin_sign: int, params: PhysicalParams, field_config: FieldConfig
) -> tuple[float, float]:
    """Closed-form (v_z, z) for an on-axis spin aligned along +-z (S = 1/2).

    On the z axis the torque vanishes, so the particle feels the constant
    acceleration hbar*gamma*b1*S^z/m for the whole traversal.
    """
    if spin_sign not in (1, -1):
        raise ValueError(f"spin_sign must be +1 or -1, got {spin_sign}")
    acc = spin_sign * params.hbar * params.gamma * field_config.b1 / (2.0 * params.mass)
    return acc * t, 0.5 * acc * t * t


def large_b0_oracle(
    t: float,
    initial_spin: np.ndarray,
    initial_v: np.ndarray,
    params: PhysicalParams,
    field_config: FieldConfig,
) -> tuple[float, float, float]:
    """Strong-uniform-field closed form for (v_x, x, v_z).

    Valid for trajectories with |x*b1| << b0: the spin precesses at the
    uniform-field rate, S^z is conserved, and the transverse motion follows

      v_x(t) = v_x(0) + beta*S^x(0)*sin(g0 t) - beta*S^y(0)*(1 - cos(g0 t)),
      x(t)   = x(0) + v_x(0) t - beta*S^y(0) t
               + beta'*S^x(0)*(1 - cos(g0 t)) + beta'*S^y(0)*sin(g0 t),
      v_z(t) = v_z(0) + (hbar*gamma*b1/m)*S^z(0)*t,

    with g0 = gamma*b0, beta = hbar*b1/(m*b0), beta' = beta/(gamma*b0).
    """
    if field_config.b0 <= 0:
        raise ValueError("large-b0 oracle requires b0 > 0")
    g0 = params.gamma * field_config.b0
    beta = params.hbar * field_config.b1 / (params.mass * field_config.b0)
    beta_p = beta / g0
    sx0, sy0, _sz0 = initial_spin
    vx = initial_v[0] + beta * sx0 * math.sin(g0 * t) - beta * sy0 * (1.0 - math.cos(g0 * t))
    x = (
        initial_v[0] * t
        - beta * sy0 * t
        + beta_p * sx0 * (1.0 - math.cos(g0 * t))
        + beta_p * sy0 * math.sin(g0 * t)
    )
    vz = initial_v[2] + (params.hbar * params.gamma * field_config.b1 / params.mass) * initial_spin[2] * t
    return vx, x, vz


def _run_kernel(
    n: int,
    init: InitSpec,
    tau: float,
    params: PhysicalParams,
    field_config: FieldConfig,
    beam: BeamConfig,
    seed: int,
    workers: int,
    align_mode: bool,
) -> list[ExitRecord]:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if field_config.y_start <= 0:
        raise ValueError("source sits at y = 0; need y_start > 0")

    scales = derive_scales(params, field_config, beam)
    budget = int(4.0 * scales.t_star / tau) + 1
    draws = _kernels.particle_draws(n, seed)
    out_v = np.empty((n, 2), dtype=np.float64)
    out_s = np.empty((n, 3), dtype=np.float64)
    status = np.empty(n, dtype=np.int8)

    with _kernels.worker_threads(workers):
        _kernels.ensemble_kernel(
            draws,
            init.mode_code(),
            init.theta,
            init.phi,
            beam.sigma_x,
            beam.sigma_v,
            beam.v_y,
            field_config.y_start,
            field_config.y_end,
            tau,
            params.gamma,
            field_config.b0,
            field_config.b1,
            params.hbar / params.mass,
            align_mode,
            budget,
            out_v,
            out_s,
            status,
        )

    stuck = int(np.sum(status != 0))
    if stuck:
        raise EngineError(
            f"{stuck} of {n} particles did not cross y_end within {budget} steps"
        )
    return [
        ExitRecord(particle_id=i, vx=out_v[i, 0], vz=out_v[i, 1], spin=out_s[i].copy())
        for i in range(n)
    ]


def run_ensemble(
    n: int,
    init: InitSpec,
    tau: float,
    params: PhysicalParams,
    field_config: FieldConfig,
    beam: BeamConfig,
    seed: int,
    workers: int = 1,
) -> list[ExitRecord]:
    """Integrate n particles through the slab and record their exits.

    Initial transverse positions and velocities are normal with spreads
    sigma_x and sigma_v; spins follow the InitSpec. Deterministic for a
    given seed, independent of the worker count. Raises EngineError if any
    particle fails to exit within the step budget of 4 t*/tau.
    """
    return _run_kernel(n, init, tau, params, field_config, beam, seed, workers, False)
