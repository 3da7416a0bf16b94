"""Collision-induced fragmentation with singular kernels on truncated domains."""

from . import diagnostics, kernels
from .errors import (
    ConfigError,
    ContractError,
    ContractionError,
    ConvergenceError,
    DomainError,
    FragkinError,
    ModelError,
    ParameterError,
    UnsupportedOperationError,
)
from .grid import GeometricGrid, build_grid, locate_cell, quadrature
from .kernels import (
    CollisionFamily,
    CollisionKernelSpec,
    FragmentationFamily,
    FragmentationKernelSpec,
    evaluate_collision,
    evaluate_fragmentation,
    fragment_count,
    verify_hypotheses,
)
from .solver import (
    ContractionEstimate,
    InitialData,
    SolverConfig,
    Trajectory,
    estimate_contraction,
    picard_slab_step,
    rk4_step,
    solve,
    truncate_kernel,
)
from .state import DensityState, WeightedNormParams, init_from_function, moment, weighted_norm

__version__ = "0.1.0"
