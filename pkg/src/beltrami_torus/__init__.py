"""Spectral uniformization of almost complex structures on the torus."""

__version__ = "0.1.0"

from .spectral import (  # noqa: E402
    InvalidInputError,
    PeriodicField,
    PeriodicGrid,
    SpectralField,
    Symbol,
    apply_symbol,
    multiply_dealiased,
    sobolev_norm,
    to_physical,
    to_spectral,
)
from .solver import (  # noqa: E402
    BeltramiCoefficient,
    ConvergenceError,
    HomotopyConfig,
    SolveReport,
    beltrami_residual,
    dense_oracle_solve,
    neumann_tail_check,
    parameter_analyticity_check,
    solve_homotopy,
    solve_neumann,
)
from .uniformize import (  # noqa: E402
    TorusLattice,
    UniformizingForm,
    build_uniformizing_form,
    evaluate_map,
    jacobian_min,
    lattice,
    local_univalence_check,
)
