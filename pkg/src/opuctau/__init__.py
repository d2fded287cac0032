"""High-precision evaluation of unit-circle Toeplitz determinants and their
recurrence routes, with drivers for CUE gap probabilities, CUE
characteristic-polynomial moments and diagonal Ising correlations."""

from .precision import PrecisionContext
from .weights import ModelKind, WeightParams, equivalent_params, model_moments, toeplitz_moment, weight_eval
from .oracle import (
    CircleQuadrature,
    CoefficientTable,
    MomentSource,
    build_table_oracle,
    caratheodory,
    coefficient_functions,
    opuc_eval,
    reflection_from_dets,
    toeplitz_det,
    verify_identity_suite,
)
from .recurrences import (
    RouteResult,
    initial_conditions,
    run_dpv,
    run_one_one,
    run_tau_L01,
    run_tau_L14,
    run_two_one_pair,
    run_two_two,
    run_two_zero_pair,
    subleading_from_reflections,
    tau_from_reflections,
)
from .genhyp import (
    Partition,
    SeriesControl,
    f21_general,
    f21_limit_shell,
    gen_pochhammer,
    hook_product,
    partitions_of_weight,
    schur_equal_args,
)
from .applications import (
    ApplicationResult,
    cue_charpoly,
    cue_gap,
    ising_diagonal,
    ising_limit_check,
    occupancy_probabilities,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
