"""Numba inner loops shared by the Newtonian and event-by-event engines.

The ensemble loop is data-parallel over particles; every per-particle
trajectory is integrated sequentially by one thread and written to its own
output slot, so results are bitwise identical for any worker count.
"""
from __future__ import annotations

import contextlib
import math
import os

# The thread pool size is fixed at import; allow oversubscription so that
# worker counts above the core count remain selectable for determinism tests.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(8, os.cpu_count() or 1)))

import numpy as np
from numba import njit, prange, set_num_threads, get_num_threads

MAX_WORKERS = int(os.environ["NUMBA_NUM_THREADS"])

SPIN_MODE_SPHERE = 0
SPIN_MODE_POLAR = 1
SPIN_MODE_FIXED = 2


@contextlib.contextmanager
def worker_threads(workers: int):
    """Temporarily set the numba thread count."""
    workers = max(1, min(int(workers), MAX_WORKERS))
    previous = get_num_threads()
    set_num_threads(workers)
    try:
        yield
    finally:
        set_num_threads(previous)


def particle_draws(n: int, seed: int) -> np.ndarray:
    """Fixed per-particle random layout from counter-based streams.

    Stream key is (seed, particle_id) so the draws are independent of
    ensemble size, particle order and worker count. Layout per particle:
    [0] alignment threshold r ~ U[-1/2, 1/2] (consumed by the event engine
    only, reserved in all engines so both share initial conditions),
    [1:3] position normals, [3:5] velocity normals,
    [5] u ~ U[-1, 1] (sphere z), [6] phi ~ U[0, 2pi).
    """
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a uint64, got {seed}")
    out = np.empty((n, 7), dtype=np.float64)
    for pid in range(n):
        gen = np.random.Generator(
            np.random.Philox(key=np.array([seed, pid], dtype=np.uint64))
        )
        out[pid, 0] = gen.uniform(-0.5, 0.5)
        out[pid, 1:3] = gen.standard_normal(2)
        out[pid, 3:5] = gen.standard_normal(2)
        out[pid, 5] = gen.uniform(-1.0, 1.0)
        out[pid, 6] = gen.uniform(0.0, 2.0 * np.pi)
    return out


@njit(cache=True)
def _rotate_spin(sx, sy, sz, bx, bz, gamma, gabs, tau):
    """Exact precession of S about gamma*B for one time step (B_y = 0)."""
    bn2 = bx * bx + bz * bz
    if bn2 <= 0.0:
        return sx, sy, sz
    bn = math.sqrt(bn2)
    omega = gabs * bn
    ux = gamma * bx / omega
    uz = gamma * bz / omega
    cs = math.cos(tau * omega)
    sn = math.sin(tau * omega)
    d = ux * sx + uz * sz
    cx = -uz * sy
    cy = uz * sx - ux * sz
    cz = ux * sy
    return (
        cs * sx + (1.0 - cs) * d * ux - sn * cx,
        cs * sy - sn * cy,
        cs * sz + (1.0 - cs) * d * uz - sn * cz,
    )


@njit(parallel=True, cache=True)
def ensemble_kernel(
    draws,
    spin_mode,
    theta,
    phi,
    sigma_x,
    sigma_v,
    v_y,
    y_start,
    y_end,
    tau,
    gamma,
    b0,
    b1,
    hbar_over_m,
    align_mode,
    budget,
    out_v,
    out_s,
    status,
):
    """Velocity-Verlet traversal of the field slab for every particle.

    Each iteration is the five-step scheme: half-kick, drift, exact spin
    rotation, force refresh (gated on the slab), half-kick. The event engine
    differs only in a one-time spin alignment just before the force refresh.
    """
    n = draws.shape[0]
    gabs = abs(gamma)
    half = 0.5 * tau * hbar_over_m
    for i in prange(n):
        x = sigma_x * draws[i, 1]
        z = sigma_x * draws[i, 2]
        vx = sigma_v * draws[i, 3]
        vz = sigma_v * draws[i, 4]

        if spin_mode == SPIN_MODE_SPHERE:
            sz = 0.5 * draws[i, 5]
            rt = math.sqrt(max(0.25 - sz * sz, 0.0))
            ph = draws[i, 6]
            sx = rt * math.cos(ph)
            sy = rt * math.sin(ph)
        elif spin_mode == SPIN_MODE_POLAR:
            ph = draws[i, 6]
            sz = 0.5 * math.cos(theta)
            st = 0.5 * math.sin(theta)
            sx = st * math.cos(ph)
            sy = st * math.sin(ph)
        else:
            sz = 0.5 * math.cos(theta)
            st = 0.5 * math.sin(theta)
            sx = st * math.cos(phi)
            sy = st * math.sin(phi)

        # Exact field-free drift from the source plane to the slab entrance.
        t_pre = y_start / v_y
        x += vx * t_pre
        z += vz * t_pre
        y = y_start

        aligned = False
        r_align = draws[i, 0]
        if align_mode:
            bx = -x * b1
            bz = b0 + z * b1
            bn = math.sqrt(bx * bx + bz * bz)
            if bn > 0.0:
                if r_align <= (sx * bx + sz * bz) / bn:
                    sx = 0.5 * bx / bn
                    sy = 0.0
                    sz = 0.5 * bz / bn
                else:
                    sx = -0.5 * bx / bn
                    sy = 0.0
                    sz = -0.5 * bz / bn
                aligned = True

        fx = -gamma * b1 * sx
        fz = gamma * b1 * sz

        ok = False
        for _ in range(budget):
            vx += half * fx
            vz += half * fz
            x += tau * vx
            y += tau * v_y
            z += tau * vz
            if y_start <= y < y_end:
                bx = -x * b1
                bz = b0 + z * b1
                sx, sy, sz = _rotate_spin(sx, sy, sz, bx, bz, gamma, gabs, tau)
                if align_mode and not aligned:
                    bn = math.sqrt(bx * bx + bz * bz)
                    if bn > 0.0:
                        if r_align <= (sx * bx + sz * bz) / bn:
                            sx = 0.5 * bx / bn
                            sy = 0.0
                            sz = 0.5 * bz / bn
                        else:
                            sx = -0.5 * bx / bn
                            sy = 0.0
                            sz = -0.5 * bz / bn
                        aligned = True
                fx = -gamma * b1 * sx
                fz = gamma * b1 * sz
            else:
                fx = 0.0
                fz = 0.0
            vx += half * fx
            vz += half * fz
            if y >= y_end:
                ok = True
                break

        out_v[i, 0] = vx
        out_v[i, 1] = vz
        out_s[i, 0] = sx
        out_s[i, 1] = sy
        out_s[i, 2] = sz
        status[i] = 0 if ok else 1
