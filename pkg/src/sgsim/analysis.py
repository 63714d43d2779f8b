"""Histogramming, window projections, spin averages and shape labels.

All axes are expressed in units of the reference transverse velocity
(v* for particle ensembles, v0 for probability maps), so the same metrics
apply to both data sources.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field

import numpy as np


@dataclass
class HistogramGrid:
    """2D mass-per-cell grid over (vx, vz), axes in reference-velocity units.

    values[i, j] is the mass of the cell [x_edges[i], x_edges[i+1]) x
    [z_edges[j], z_edges[j+1]); counts for ensembles, probability for maps.
    """

    values: np.ndarray
    x_edges: np.ndarray
    z_edges: np.ndarray
    unit: str = "v_star"
    overflow: float = 0.0

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValueError("histogram values must be >= 0")
        nx, nz = self.values.shape
        if len(self.x_edges) != nx + 1 or len(self.z_edges) != nz + 1:
            raise ValueError("edge arrays must have one more entry than bins")

    @property
    def x_centers(self) -> np.ndarray:
        return 0.5 * (self.x_edges[:-1] + self.x_edges[1:])

    @property
    def z_centers(self) -> np.ndarray:
        return 0.5 * (self.z_edges[:-1] + self.z_edges[1:])

    def total(self) -> float:
        return float(self.values.sum())

    def normalized(self) -> "HistogramGrid":
        tot = self.total()
        if tot == 0:
            raise ValueError("cannot normalize an empty histogram")
        return HistogramGrid(
            self.values / tot, self.x_edges, self.z_edges, self.unit, self.overflow
        )


class Shape(enum.Enum):
    TWO_SPOTS = "two_spots"
    STRIPE = "stripe"
    RING = "ring"
    OTHER = "other"


@dataclass
class WindowProjection:
    """1D profile along one velocity axis, restricted to a band in the other."""

    axis: str
    window_half_width: float
    edges: np.ndarray
    counts: np.ndarray


@dataclass
class SpinProfile:
    """Per-bin mean exit spin components; nan where a bin holds no records."""

    axis: str
    window_half_width: float
    edges: np.ndarray
    counts: np.ndarray
    s_mean: np.ndarray  # (bins, 3)


def records_to_arrays(records) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(vx, vz, spins) arrays from a list of exit records."""
    vx = np.fromiter((r.vx for r in records), dtype=np.float64, count=len(records))
    vz = np.fromiter((r.vz for r in records), dtype=np.float64, count=len(records))
    spins = np.array([r.spin for r in records], dtype=np.float64).reshape(len(records), 3)
    return vx, vz, spins


def histogram2d(records, bins: int, v_range: float, v_star: float) -> HistogramGrid:
    """Counts over [-v_range, v_range]^2 in v* units; out-of-range tallied."""
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if len(records) == 0:
        edges = np.linspace(-v_range, v_range, bins + 1)
        return HistogramGrid(np.zeros((bins, bins)), edges, edges.copy())
    vx, vz, _ = records_to_arrays(records)
    counts, xe, ze = np.histogram2d(
        vx / v_star,
        vz / v_star,
        bins=bins,
        range=[[-v_range, v_range], [-v_range, v_range]],
    )
    return HistogramGrid(
        values=counts,
        x_edges=xe,
        z_edges=ze,
        overflow=float(len(records) - counts.sum()),
    )


def _select_window(records, axis: str, window_half_width: float, v_star: float):
    if axis not in ("vx", "vz"):
        raise ValueError(f"axis must be 'vx' or 'vz', got {axis!r}")
    if not window_half_width > 0:
        raise ValueError("window_half_width must be > 0")
    vx, vz, spins = records_to_arrays(records)
    profile, gate = (vx, vz) if axis == "vx" else (vz, vx)
    keep = np.abs(gate / v_star) <= window_half_width
    return profile[keep] / v_star, spins[keep]


def window_projection(
    records,
    axis: str,
    window_half_width: float,
    v_star: float,
    bins: int = 201,
    v_range: float = 1.5,
) -> WindowProjection:
    """Moving-window profile: histogram of one axis for records whose
    other-axis value lies within the window (all in v* units)."""
    values, _ = _select_window(records, axis, window_half_width, v_star)
    counts, edges = np.histogram(values, bins=bins, range=(-v_range, v_range))
    return WindowProjection(axis, window_half_width, edges, counts.astype(np.float64))


def conditional_spin_average(
    records,
    axis: str,
    window_half_width: float,
    v_star: float,
    bins: int = 201,
    v_range: float = 1.5,
) -> SpinProfile:
    """Per-bin mean exit spin of the windowed records; empty bins are nan."""
    values, spins = _select_window(records, axis, window_half_width, v_star)
    edges = np.linspace(-v_range, v_range, bins + 1)
    idx = np.digitize(values, edges) - 1
    inside = (idx >= 0) & (idx < bins)
    idx, spins = idx[inside], spins[inside]
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    s_mean = np.full((bins, 3), np.nan)
    for comp in range(3):
        sums = np.bincount(idx, weights=spins[:, comp], minlength=bins)
        nonzero = counts > 0
        s_mean[nonzero, comp] = sums[nonzero] / counts[nonzero]
    return SpinProfile(axis, window_half_width, edges, counts, s_mean)


def side_weights(data) -> tuple[float, float]:
    """(P(vz < 0), P(vz > 0)); mass exactly at zero is split evenly."""
    if isinstance(data, HistogramGrid):
        cz = data.z_centers
        mass = data.values.sum(axis=0)
        neg = mass[cz < 0].sum() + 0.5 * mass[cz == 0].sum()
        pos = mass[cz > 0].sum() + 0.5 * mass[cz == 0].sum()
    else:
        _, vz, _ = records_to_arrays(data)
        neg = np.sum(vz < 0) + 0.5 * np.sum(vz == 0)
        pos = np.sum(vz > 0) + 0.5 * np.sum(vz == 0)
    tot = neg + pos
    if tot == 0:
        raise ValueError("no mass to split")
    return float(neg / tot), float(pos / tot)


# Shape-classification thresholds. The source material labels the regimes by
# eye; these cutoffs separate the synthetic prototypes by a wide margin.
POLE_HALF_ANGLE_DEG = 15.0
TWO_SPOTS_POLE_FRACTION = 0.6
TWO_SPOTS_SEPARATION_RATIO = 4.0
RING_RADIAL_BAND = (0.8, 1.1)
RING_ANGULAR_SPREAD_DEG = 270.0
STRIPE_MAX_X_WIDTH = 0.05
STRIPE_MIN_Z_SPREAD = 1.5
N_ANGULAR_SECTORS = 72
N_RADIAL_BINS = 60


def _weighted_quantile(values, weights, q):
    order = np.argsort(values)
    cum = np.cumsum(weights[order])
    if cum[-1] == 0:
        return float("nan")
    cum /= cum[-1]
    return float(np.interp(q, cum, values[order]))


def shape_metrics(hist: HistogramGrid) -> dict:
    """Scale-free descriptors of a normalized transverse-velocity histogram."""
    h = hist.normalized()
    cx = h.x_centers[:, None]
    cz = h.z_centers[None, :]
    mass = h.values
    total = mass.sum()

    r = np.sqrt(cx**2 + cz**2)
    ang = np.degrees(np.arctan2(np.broadcast_to(cz, mass.shape), np.broadcast_to(cx, mass.shape)))

    pole_dist = np.minimum(np.abs(ang - 90.0), np.abs(ang + 90.0))
    pole_fraction = float(mass[pole_dist <= POLE_HALF_ANGLE_DEG].sum() / total)

    # vz-marginal bimodality: distance between per-side centroids over the
    # pooled in-side spread.
    mz = mass.sum(axis=0)
    zc = h.z_centers
    w_neg, w_pos = mz[zc < 0], mz[zc > 0]
    z_neg, z_pos = zc[zc < 0], zc[zc > 0]
    if w_neg.sum() > 0 and w_pos.sum() > 0:
        mu_neg = float((w_neg * z_neg).sum() / w_neg.sum())
        mu_pos = float((w_pos * z_pos).sum() / w_pos.sum())
        var = (w_neg * (z_neg - mu_neg) ** 2).sum() + (w_pos * (z_pos - mu_pos) ** 2).sum()
        width = math.sqrt(var / (w_neg.sum() + w_pos.sum()))
        separation_ratio = (mu_pos - mu_neg) / width if width > 0 else float("inf")
    else:
        separation_ratio = 0.0

    r_max = float(r.max())
    r_edges = np.linspace(0.0, r_max, N_RADIAL_BINS + 1)
    radial, _ = np.histogram(r.ravel(), bins=r_edges, weights=mass.ravel())
    peak_bin = int(np.argmax(radial))
    radial_peak = float(0.5 * (r_edges[peak_bin] + r_edges[peak_bin + 1]))

    sector = np.floor((ang + 180.0) / (360.0 / N_ANGULAR_SECTORS)).astype(int)
    sector = np.clip(sector, 0, N_ANGULAR_SECTORS - 1)
    sector_mass = np.bincount(sector.ravel(), weights=mass.ravel(), minlength=N_ANGULAR_SECTORS)
    populated = sector_mass > 0.25 * total / N_ANGULAR_SECTORS
    angular_spread = float(populated.sum() * 360.0 / N_ANGULAR_SECTORS)

    mx = mass.sum(axis=1)
    mu_x = float((mx * h.x_centers).sum() / total)
    x_width = float(math.sqrt((mx * (h.x_centers - mu_x) ** 2).sum() / total))
    z_spread = _weighted_quantile(zc, mz, 0.995) - _weighted_quantile(zc, mz, 0.005)

    return {
        "pole_fraction": pole_fraction,
        "separation_ratio": float(separation_ratio),
        "radial_peak": radial_peak,
        "angular_spread_deg": angular_spread,
        "x_width": x_width,
        "z_spread": float(z_spread),
    }


def classify_shape(hist: HistogramGrid) -> tuple[Shape, dict]:
    """Label a histogram as two spots, a stripe, a ring, or other.

    Tested in decreasing specificity: two well-separated polar clusters,
    then an annulus, then a narrow vertical stripe.
    """
    m = shape_metrics(hist)
    if (
        m["pole_fraction"] > TWO_SPOTS_POLE_FRACTION
        and m["separation_ratio"] > TWO_SPOTS_SEPARATION_RATIO
    ):
        return Shape.TWO_SPOTS, m
    if (
        RING_RADIAL_BAND[0] <= m["radial_peak"] <= RING_RADIAL_BAND[1]
        and m["angular_spread_deg"] > RING_ANGULAR_SPREAD_DEG
    ):
        return Shape.RING, m
    if m["x_width"] < STRIPE_MAX_X_WIDTH and m["z_spread"] > STRIPE_MIN_Z_SPREAD:
        return Shape.STRIPE, m
    return Shape.OTHER, m
