"""Flat key = value run configuration with strict validation.

Lines hold one ``key = value`` pair; ``#`` starts a comment; keys are
case-sensitive and unknown keys are hard errors. Every value is checked
against the preconditions of the engine that consumes it before any
compute starts.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError
from .newton import InitSpec
from .params import BeamConfig, FieldConfig, PhysicalParams, Species, preset


@dataclass(frozen=True)
class RunConfig:
    model: str = "newton"
    species: str = "neutron"
    B0: float = 1.0
    B1: float = 300.0
    y_start: float = 1.0
    y_end: float = 1.8
    n: int = 10000
    tau: float = 1e-8
    seed: int = 1
    workers: int = 1
    spin_init: str = "sphere"
    theta: float = 0.0
    phi: float = 0.0
    alpha: float = 0.0
    sigma: float = 0.1
    t: float = 1.0
    grid_points: int = 512
    half_width: float = 4.0
    reduction: float = 1.0
    sigma_x: float = 0.0
    sigma_v: float = 0.0
    bins: int = 201
    range: float = 1.5
    out: str = "out"

    def to_text(self) -> str:
        """Canonical echo, parseable back into an identical config."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float):
                value = f"{value:.17g}"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    # Builders for the engine-facing objects.
    def species_enum(self) -> Species:
        return Species.NEUTRON if self.species == "neutron" else Species.IMAGINARY_SILVER

    def physical_params(self) -> PhysicalParams:
        return preset(self.species_enum())[0]

    def field_config(self) -> FieldConfig:
        return FieldConfig(b0=self.B0, b1=self.B1, y_start=self.y_start, y_end=self.y_end)

    def beam_config(self) -> BeamConfig:
        base = preset(self.species_enum())[1]
        return BeamConfig(v_y=base.v_y, sigma_x=self.sigma_x, sigma_v=self.sigma_v)

    def init_spec(self) -> InitSpec:
        return InitSpec(mode=self.spin_init, theta=self.theta, phi=self.phi)


_TYPES = {
    "model": str, "species": str, "B0": float, "B1": float, "y_start": float,
    "y_end": float, "n": int, "tau": float, "seed": int, "workers": int,
    "spin_init": str, "theta": float, "phi": float, "alpha": float,
    "sigma": float, "t": float, "grid_points": int, "half_width": float,
    "reduction": float, "sigma_x": float, "sigma_v": float, "bins": int,
    "range": float, "out": str,
}


def _range_error(rule: str, owner: str):
    return ConfigError("E_RANGE", f"{rule} (required by {owner})")


def validate(config: RunConfig) -> RunConfig:
    """Check every engine precondition; return the config unchanged."""
    c = config
    if c.model not in ("newton", "event", "quantum"):
        raise _range_error(f"model must be newton|event|quantum, got {c.model!r}", "cli-runner")
    if c.species not in ("neutron", "silver"):
        raise _range_error(f"species must be neutron|silver, got {c.species!r}", "params-and-scales")
    if c.B0 < 0:
        raise _range_error(f"B0 >= 0 convention violated by {c.B0}", "field-model")
    if c.B1 < 0:
        raise _range_error(f"B1 >= 0 convention violated by {c.B1}", "field-model")
    if not c.y_start < c.y_end:
        raise _range_error(f"need y_start < y_end, got [{c.y_start}, {c.y_end}]", "field-model")
    if c.model in ("newton", "event"):
        if c.y_start <= 0:
            raise _range_error("source sits at y = 0 so y_start must be > 0", "newtonian-engine")
        if c.n < 1:
            raise _range_error(f"n >= 1 required, got {c.n}", "newtonian-engine")
        if not c.tau > 0:
            raise _range_error(f"tau > 0 required, got {c.tau}", "newtonian-engine")
    if not 0 <= c.seed < 2**64:
        raise _range_error(f"seed must be a uint64, got {c.seed}", "newtonian-engine")
    if c.workers < 1:
        raise _range_error(f"workers >= 1 required, got {c.workers}", "cli-runner")
    if c.spin_init not in ("sphere", "polar", "fixed"):
        raise _range_error(f"spin_init must be sphere|polar|fixed, got {c.spin_init!r}", "newtonian-engine")
    if not 0.0 <= c.theta <= 3.14159265358979312:
        raise _range_error(f"theta must lie in [0, pi], got {c.theta}", "newtonian-engine")
    if c.sigma_x < 0 or c.sigma_v < 0:
        raise _range_error("sigma_x and sigma_v must be >= 0", "newtonian-engine")
    if c.model == "quantum":
        g = c.grid_points
        if g < 64 or (g & (g - 1)) != 0:
            raise _range_error(f"grid_points must be a power of two >= 64, got {g}", "pauli-solver")
        if not c.half_width > 0:
            raise _range_error(f"half_width > 0 required, got {c.half_width}", "pauli-solver")
        if not c.sigma > 0:
            raise _range_error(f"sigma > 0 required, got {c.sigma}", "pauli-solver")
        delta = 2.0 * c.half_width / g
        if c.sigma < 3.0 * delta:
            raise _range_error(
                f"sigma = {c.sigma} unresolvable on mesh delta = {delta:.3g}", "pauli-solver"
            )
        if c.t < 0:
            raise _range_error(f"t >= 0 required, got {c.t}", "pauli-solver")
        if c.reduction < 1:
            raise _range_error(f"reduction >= 1 required, got {c.reduction}", "pauli-solver")
    if c.bins < 2:
        raise _range_error(f"bins >= 2 required, got {c.bins}", "analysis")
    if not c.range > 0:
        raise _range_error(f"range > 0 required, got {c.range}", "analysis")
    return c


def parse_config(text: str) -> RunConfig:
    """Parse and validate a flat key = value configuration."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("E_PARSE", f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError("E_PARSE", f"line {lineno}: expected 'key = value', got {raw!r}")
        if key not in _TYPES:
            raise ConfigError("E_UNKNOWN_KEY", f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _TYPES[key](value)
        except ValueError:
            raise ConfigError(
                "E_PARSE",
                f"line {lineno}: cannot parse {value!r} as {_TYPES[key].__name__} for {key!r}",
            ) from None
    return validate(RunConfig(**values))
