"""Truncated-domain fixed-point solver."""

from .config import INITIAL_PRESETS, SLAB_POLICIES, InitialData, SolverConfig
from .contraction import (
    ContractionEstimate,
    contraction_factor,
    estimate_contraction,
    estimate_for_state,
    kernel_sups,
    lambda_factor,
)
from .march import (
    SlabResult,
    StepResult,
    Trajectory,
    build_operator,
    march_analytic_slabs,
    picard_slab_step,
    rk4_step,
    solve,
    solve_rk4,
)
from .operator import (
    DiscreteOperator,
    FragmentTable,
    FragmentWeights,
    TruncatedKernelSet,
    build_fragment_table,
    death_rate,
    discretize_fragments,
    gain_rate,
    truncate_kernel,
)

__all__ = [
    "INITIAL_PRESETS",
    "SLAB_POLICIES",
    "InitialData",
    "SolverConfig",
    "ContractionEstimate",
    "contraction_factor",
    "estimate_contraction",
    "estimate_for_state",
    "kernel_sups",
    "lambda_factor",
    "SlabResult",
    "StepResult",
    "Trajectory",
    "build_operator",
    "march_analytic_slabs",
    "picard_slab_step",
    "rk4_step",
    "solve",
    "solve_rk4",
    "DiscreteOperator",
    "FragmentTable",
    "FragmentWeights",
    "TruncatedKernelSet",
    "build_fragment_table",
    "death_rate",
    "discretize_fragments",
    "gain_rate",
    "truncate_kernel",
]
