"""Command-line surface: run, sweep, verify, presets.

Exit codes: 0 success, 2 configuration error, 3 engine error,
4 verification failure.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .config import parse_config
from .errors import ConfigError, SgsimError
from .params import (
    FieldConfig,
    Species,
    derive_scales,
    dimensionless_coeffs,
    preset,
)
from .runner import run, sweep_b0

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ENGINE = 3
EXIT_VERIFY = 4


def _load(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("E_PARSE", f"cannot read {path}: {exc}") from None
    return parse_config(text)


def _cmd_run(args) -> int:
    config = _load(args.config)
    result = run(config)
    print(f"model={config.model} species={config.species} B0={config.B0:g}")
    print(f"shape={result.shape.value} p(vz<0)={result.weights[0]:.4f} "
          f"p(vz>0)={result.weights[1]:.4f}")
    for name, path in sorted(result.paths.items()):
        print(f"{name}: {path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load(args.config)
    try:
        values = [float(v) for v in args.b0.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("E_PARSE", f"--b0 expects a comma list of floats, got {args.b0!r}")
    if not values:
        raise ConfigError("E_PARSE", "--b0 list is empty")
    rows = sweep_b0(config, values)
    for row in rows:
        print(f"B0={row['b0']:g}: {row['status']} {row['shape']} {row['error']}".rstrip())
    return EXIT_OK


def _check(name: str, ok: bool, detail: str = "") -> bool:
    tag = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"{tag} {name}{suffix}")
    return ok


def _verify_scales() -> bool:
    ok = True
    expected = {
        Species.NEUTRON: (2.02e-3, 3.50, 3.53e-3),
        Species.IMAGINARY_SILVER: (1.48e-3, 1.42e-3, 1.05e-6),
    }
    for species, (t_ref, v_ref, z_ref) in expected.items():
        params, beam = preset(species)
        field = FieldConfig(b0=1.0, b1=300.0, y_start=1.0, y_end=1.8)
        s = derive_scales(params, field, beam)
        good = (
            abs(s.t_star - t_ref) <= 0.005 * t_ref
            and abs(s.v_star - v_ref) <= 0.005 * v_ref
            and abs(s.z_star - z_ref) <= 0.005 * z_ref
        )
        ok &= _check(
            f"scales[{species.value}]",
            good,
            f"t*={s.t_star:.3e} v*={s.v_star:.3f} z*={s.z_star:.3e}",
        )
    return ok


def _verify_coeffs() -> bool:
    ok = True
    tables = {
        Species.NEUTRON: (2.02e-3, 3.50, 196540.0, -185339.0),
        Species.IMAGINARY_SILVER: (1.48e-3, 1.42e-3, 2.53618, -8053.19),
    }
    for species, (t0, v0, a_ref, c_ref) in tables.items():
        params, beam = preset(species)
        field = FieldConfig(b0=1.0, b1=300.0, y_start=1.0, y_end=1.8)
        co = dimensionless_coeffs(params, field, t0, v0)
        good = abs(co.a - a_ref) <= 0.005 * abs(a_ref) and abs(co.c - c_ref) <= 0.005 * abs(c_ref)
        s = derive_scales(params, field, beam)
        co_star = dimensionless_coeffs(params, field, s.t_star, s.v_star)
        good &= co_star.b == -1.0
        ok &= _check(f"coeffs[{species.value}]", good, f"a={co.a:.6g} c={co.c:.6g} b*={co_star.b:g}")
    return ok


def _verify_rotation() -> bool:
    from .newton import rotation_matrix

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        b = rng.normal(size=3)
        r = rotation_matrix(b, gamma=-1.83e8, tau=rng.uniform(0, 1e-7))
        worst = max(worst, float(np.abs(r.T @ r - np.eye(3)).max()))
        worst = max(worst, abs(float(np.linalg.det(r)) - 1.0))
    return _check("rotation orthogonality", worst < 1e-12, f"max dev {worst:.2e}")


def _verify_constant_force() -> bool:
    from .field import vec3
    from .newton import ParticleState, analytic_constant_force, integrate_in_field

    params, beam = preset(Species.NEUTRON)
    field = FieldConfig(b0=1.0, b1=300.0, y_start=1.0, y_end=1.8)
    t_total = derive_scales(params, field, beam).t_star / 100.0
    state = ParticleState(
        position=vec3(0.0, 1.0, 0.0),
        velocity=vec3(0.0, beam.v_y, 0.0),
        spin=vec3(0.0, 0.0, 0.5),
    )
    final = integrate_in_field(state, t_total, 1e-8, params, field)
    vz_ref, z_ref = analytic_constant_force(t_total, +1, params, field)
    err = max(abs(final.velocity[2] - vz_ref) / abs(vz_ref), abs(final.position[2] - z_ref) / abs(z_ref))
    return _check("constant-force trajectory", err < 1e-9, f"rel err {err:.2e}")


def _verify_malus() -> bool:
    from .events import malus_probability

    good = (
        malus_probability(0.0, +1) == 1.0
        and abs(malus_probability(math.pi / 2, +1) - 0.5) < 1e-15
        and abs(malus_probability(math.pi / 3, +1) - 0.75) < 1e-15
        and abs(malus_probability(math.pi / 3, -1) - 0.25) < 1e-15
    )
    return _check("alignment probability law", good)


def _verify_chebyshev() -> bool:
    from .params import dimensionless_coeffs as dc
    from .pauli import GridSpec, SpinState, chebyshev_propagate, init_state, textbook_closed_form

    params, beam = preset(Species.IMAGINARY_SILVER)
    field = FieldConfig(b0=1e-3, b1=300.0, y_start=1.0, y_end=1.8)
    s = derive_scales(params, field, beam)
    coeffs = dc(params, field, s.t_star, s.v_star)
    spec = GridSpec(points_per_axis=128, half_width=4.0)
    psi0 = init_state(SpinState(theta=np.pi / 2), 0.15, spec)
    numeric = chebyshev_propagate(psi0, coeffs, 0.3, include_sigma_x=False)
    exact = textbook_closed_form(psi0, coeffs, 0.3)
    err = max(
        float(np.abs(numeric.up - exact.up).max()),
        float(np.abs(numeric.down - exact.down).max()),
    )
    drift = abs(numeric.norm() - 1.0)
    return _check("spectral propagator vs closed form", err < 1e-8 and drift < 1e-12,
                  f"max err {err:.2e}, norm drift {drift:.2e}")


def _verify_sphere() -> bool:
    from scipy.stats import kstest

    from .newton import sample_uniform_sphere

    rng = np.random.default_rng(11)
    draws = np.array([sample_uniform_sphere(rng) for _ in range(20000)])
    norms_ok = np.allclose(np.linalg.norm(draws, axis=1), 0.5, atol=1e-12)
    p = kstest(draws[:, 2], lambda v: np.clip(v + 0.5, 0, 1)).pvalue
    return _check("sphere sampling", norms_ok and p > 0.01, f"KS p={p:.3f}")


def _cmd_verify(_args) -> int:
    checks = [
        _verify_scales,
        _verify_coeffs,
        _verify_rotation,
        _verify_constant_force,
        _verify_malus,
        _verify_chebyshev,
        _verify_sphere,
    ]
    ok = True
    for check in checks:
        ok &= check()
    return EXIT_OK if ok else EXIT_VERIFY


def _cmd_presets(_args) -> int:
    field = FieldConfig(b0=1.0, b1=300.0, y_start=1.0, y_end=1.8)
    for species in Species:
        params, beam = preset(species)
        s = derive_scales(params, field, beam)
        print(f"{species.value}:")
        print(f"  mass = {params.mass:g} kg, gamma = {params.gamma:g} /T/s")
        print(f"  v_y = {beam.v_y:g} m/s, sigma_x = {beam.sigma_x:g}, sigma_v = {beam.sigma_v:g}")
        print(f"  at B1 = 300 T/m over 0.8 m: t* = {s.t_star:.3e} s, "
              f"v* = {s.v_star:.3e} m/s, z* = {s.z_star:.3e} m")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sgsim",
        description="Classical, quantum and event-by-event beam-splitting simulations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute one configured run")
    p_run.add_argument("config", help="path to a key = value config file")
    p_run.set_defaults(func=_cmd_run)
    p_sweep = sub.add_parser("sweep", help="run a sweep over uniform-field values")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--b0", required=True, help="comma list of B0 values in tesla")
    p_sweep.set_defaults(func=_cmd_sweep)
    p_verify = sub.add_parser("verify", help="run the analytic-oracle self checks")
    p_verify.set_defaults(func=_cmd_verify)
    p_presets = sub.add_parser("presets", help="print the built-in species tables")
    p_presets.set_defaults(func=_cmd_presets)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SgsimError, ValueError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
