"""Experiment orchestration and bit-stable artifact files.

A run writes, atomically: the exit records (particle models only), the
2D histogram, a 16-bit PGM heatmap, and a manifest that echoes the full
configuration in parseable form so any run can be reproduced from its
own output directory.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .analysis import HistogramGrid, Shape, classify_shape, histogram2d, side_weights
from .config import RunConfig, parse_config, validate
from .errors import SgsimError
from .events import run_event_ensemble
from .newton import run_ensemble
from .params import derive_scales, dimensionless_coeffs
from .pauli import GridSpec, SpinState, chebyshev_propagate, init_state, probability_map


@dataclass
class RunResult:
    config: RunConfig
    out_dir: str
    shape: Shape
    metrics: dict
    weights: tuple[float, float]
    paths: dict


def _atomic_write(path: str, data: bytes) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_records_csv(path: str, records) -> None:
    lines = ["particle_id,vx,vz,sx,sy,sz"]
    for r in records:
        lines.append(
            f"{r.particle_id},{_fmt(r.vx)},{_fmt(r.vz)},"
            f"{_fmt(r.spin[0])},{_fmt(r.spin[1])},{_fmt(r.spin[2])}"
        )
    _atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def write_histogram_csv(path: str, hist: HistogramGrid) -> None:
    nbins = hist.values.shape[0]
    header = f"# axis={hist.unit} bins={nbins} range={_fmt(float(hist.x_edges[-1]))}"
    lines = [header]
    for row in hist.values:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def write_heatmap_pgm(path: str, hist: HistogramGrid) -> None:
    """Plain 16-bit PGM, rows = x bins, columns = z bins, linear in bin/max."""
    vmax = float(hist.values.max())
    if vmax > 0:
        pixels = np.round(hist.values / vmax * 65535).astype(np.int64)
    else:
        pixels = np.zeros_like(hist.values, dtype=np.int64)
    nx, nz = pixels.shape
    lines = ["P2", f"{nz} {nx}", "65535"]
    for row in pixels:
        lines.append(" ".join(str(int(v)) for v in row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def write_manifest(path: str, config: RunConfig, wall_time: float) -> None:
    body = (
        "# sgsim manifest (parseable as a run configuration)\n"
        f"# version = {__version__}\n"
        f"# seed = {config.seed}\n"
        f"# wall_time_s = {wall_time:.3f}\n"
        + config.to_text()
    )
    _atomic_write(path, body.encode("ascii"))


def load_manifest(path: str) -> RunConfig:
    with open(path, "r", encoding="ascii") as fh:
        return parse_config(fh.read())


def run(config: RunConfig, out_dir: str | None = None) -> RunResult:
    """Execute one configured run and write its artifact files."""
    validate(config)
    out = out_dir if out_dir is not None else config.out
    os.makedirs(out, exist_ok=True)
    started = time.perf_counter()
    paths = {
        "histogram": os.path.join(out, "histogram.csv"),
        "heatmap": os.path.join(out, "heatmap.pgm"),
        "manifest": os.path.join(out, "manifest.txt"),
    }

    params = config.physical_params()
    field = config.field_config()
    beam = config.beam_config()
    scales = derive_scales(params, field, beam)

    if config.model in ("newton", "event"):
        runner = run_ensemble if config.model == "newton" else run_event_ensemble
        records = runner(
            config.n,
            config.init_spec(),
            config.tau,
            params,
            field,
            beam,
            config.seed,
            workers=config.workers,
        )
        hist = histogram2d(records, config.bins, config.range, scales.v_star)
        weights = side_weights(records)
        paths["records"] = os.path.join(out, "records.csv")
        write_records_csv(paths["records"], records)
    else:
        t0 = scales.t_star / config.reduction
        v0 = scales.v_star / config.reduction
        coeffs = dimensionless_coeffs(params, field, t0, v0)
        spec = GridSpec(points_per_axis=config.grid_points, half_width=config.half_width)
        psi0 = init_state(SpinState(theta=config.theta, alpha=config.alpha), config.sigma, spec)
        psi = chebyshev_propagate(psi0, coeffs, config.t)
        hist = probability_map(psi)
        weights = side_weights(hist)

    shape, metrics = classify_shape(hist)
    write_histogram_csv(paths["histogram"], hist)
    write_heatmap_pgm(paths["heatmap"], hist)
    write_manifest(paths["manifest"], config, time.perf_counter() - started)
    return RunResult(
        config=config, out_dir=out, shape=shape, metrics=metrics, weights=weights, paths=paths
    )


def sweep_b0(config: RunConfig, values, out_dir: str | None = None) -> list[dict]:
    """One run per uniform-field value plus a summary CSV.

    A failed point is recorded in the summary and does not stop the sweep.
    """
    values = list(values)
    if not values:
        raise ValueError("sweep requires at least one B0 value")
    base_out = out_dir if out_dir is not None else config.out
    os.makedirs(base_out, exist_ok=True)
    rows = []
    for b0 in values:
        point_dir = os.path.join(base_out, f"b0_{b0:g}")
        row = {"b0": b0, "status": "ok", "shape": "", "p_neg": "", "p_pos": "",
               "radial_peak": "", "error": ""}
        try:
            result = run(replace(config, B0=b0, out=point_dir))
            row["shape"] = result.shape.value
            row["p_neg"] = _fmt(result.weights[0])
            row["p_pos"] = _fmt(result.weights[1])
            row["radial_peak"] = _fmt(result.metrics["radial_peak"])
        except (SgsimError, ValueError) as exc:
            row["status"] = "error"
            row["error"] = str(exc).replace(",", ";")
        rows.append(row)
    header = "b0,status,shape,p_neg,p_pos,radial_peak,error"
    lines = [header] + [
        f"{r['b0']:g},{r['status']},{r['shape']},{r['p_neg']},{r['p_pos']},"
        f"{r['radial_peak']},{r['error']}"
        for r in rows
    ]
    _atomic_write(os.path.join(base_out, "summary.csv"), ("\n".join(lines) + "\n").encode())
    return rows
