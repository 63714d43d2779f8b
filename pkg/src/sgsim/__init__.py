"""Desk-scale simulations of a Stern-Gerlach beam experiment.

Three models share one geometry and one comparison observable, the
transverse-velocity distribution at the magnet exit: classical spin-vector
dynamics, the two-component spinor wave equation, and an event-by-event
model with a single stochastic spin alignment.
"""

__version__ = "0.1.0"

from .params import (
    HBAR,
    BeamConfig,
    DimensionlessCoeffs,
    FieldConfig,
    PhysicalParams,
    Scales,
    Species,
    derive_scales,
    dimensionless_coeffs,
    free_flight_displacement,
    preset,
)
from .field import field_at, divergence_and_curl_fd, force_on_moment, vec3
from .newton import (
    ExitRecord,
    InitSpec,
    ParticleState,
    analytic_constant_force,
    initial_conditions,
    integrate_in_field,
    large_b0_oracle,
    rotation_matrix,
    run_ensemble,
    sample_uniform_sphere,
    verlet_step,
)
from .events import align_spin_once, malus_probability, run_event_ensemble
from .pauli import (
    GridSpec,
    SpinState,
    SpinorGrid,
    apply_hamiltonian,
    chebyshev_propagate,
    check_grid_criterion,
    init_state,
    observables,
    probability_map,
    product_formula_propagate,
    textbook_closed_form,
    textbook_propagate,
)
from .analysis import (
    HistogramGrid,
    Shape,
    classify_shape,
    conditional_spin_average,
    histogram2d,
    shape_metrics,
    side_weights,
    window_projection,
)
from .config import RunConfig, parse_config
from .runner import RunResult, load_manifest, run, sweep_b0
