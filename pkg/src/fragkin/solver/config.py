"""Solver configuration and initial-data presets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import ParameterError
from ..grid import GeometricGrid
from ..kernels import CollisionKernelSpec, FragmentationKernelSpec
from ..state import DensityState, WeightedNormParams, init_from_function, moment

__all__ = ["InitialData", "SolverConfig", "INITIAL_PRESETS", "SLAB_POLICIES"]

INITIAL_PRESETS = ("exp", "monodisperse", "powerlaw-cutoff", "custom")
SLAB_POLICIES = ("adaptive", "analytic_t0")


@dataclass(frozen=True)
class InitialData:
    """Initial density preset.

    ``exp``: ``exp(-x / scale)``.  ``monodisperse``: one cell holding unit
    number around ``size``.  ``powerlaw-cutoff``: ``x^-exponent exp(-x / scale)``.
    ``custom``: ``func(x)``.  If ``number`` is set the density is rescaled so
    that the truncated ``N_0`` equals it.
    """

    preset: str = "exp"
    scale: float = 1.0
    size: float = 1.0
    exponent: float = 0.0
    number: Optional[float] = 1.0
    amplitude: float = 1.0
    func: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.preset not in INITIAL_PRESETS:
            raise ParameterError(f"initial preset must be one of {INITIAL_PRESETS}, got {self.preset!r}")
        if not self.scale > 0:
            raise ParameterError(f"initial scale must be positive, got {self.scale}")
        if not self.size > 0:
            raise ParameterError(f"initial size must be positive, got {self.size}")
        if self.number is not None and not self.number >= 0:
            raise ParameterError(f"initial number must be nonnegative, got {self.number}")
        if not self.amplitude >= 0:
            raise ParameterError(f"initial amplitude must be nonnegative, got {self.amplitude}")
        if self.preset == "custom" and self.func is None:
            raise ParameterError("custom initial data requires func")

    def build(self, grid: GeometricGrid) -> DensityState:
        if self.preset == "monodisperse":
            from ..grid import locate_cell

            values = np.zeros(grid.cell_count)
            i = locate_cell(grid, self.size)
            values[i] = 1.0 / grid.widths[i]
            state = DensityState(grid, values)
        elif self.preset == "exp":
            state = init_from_function(grid, lambda x: np.exp(-x / self.scale))
        elif self.preset == "powerlaw-cutoff":
            state = init_from_function(grid, lambda x: x ** (-self.exponent) * np.exp(-x / self.scale))
        else:
            state = init_from_function(grid, self.func)
        scale = self.amplitude
        if self.number is not None:
            n0 = moment(state, 0.0)
            scale = self.number / n0 if n0 > 0 else 0.0
        return state.with_values(state.values * scale)


@dataclass(frozen=True)
class SolverConfig:
    """Everything a solve needs.

    Parameters
    ----------
    collision, fragmentation
        Kernel specs; the collision kernel is truncated at ``n``.
    n, cells_per_decade, taper_fraction
        Truncated domain and its resolution.
    norm
        Parameters of the existence-norm weight.
    T
        Horizon; ``output_times`` defaults to 11 evenly spaced times.
    picard_tol, picard_max_iter
        Absolute stopping rule on the weighted-norm distance of iterates.
    slab_policy
        ``"adaptive"`` grows a trial slab while iterate ratios stay below
        1/2; ``"analytic_t0"`` uses the contraction constants.
    substeps
        Trapezoid sub-steps per slab.
    max_slab
        Largest slab the adaptive policy may take.
    max_slabs
        Guard on the number of slabs in a solve.
    cross_check, rk4_dt
        Run an RK4 twin on the same grid with this step.
    """

    collision: CollisionKernelSpec
    fragmentation: FragmentationKernelSpec
    n: float = 8.0
    cells_per_decade: int = 32
    taper_fraction: float = 0.5
    norm: WeightedNormParams = WeightedNormParams()
    T: float = 0.5
    initial: InitialData = InitialData()
    output_times: Optional[tuple] = None
    picard_tol: float = 1e-11
    picard_max_iter: int = 100
    slab_policy: str = "adaptive"
    substeps: int = 16
    max_slab: float = 0.004
    initial_slab: float = 1e-3
    max_slabs: int = 200_000
    cross_check: bool = False
    rk4_dt: float = 1e-3

    def __post_init__(self):
        problems = []
        if not self.picard_tol > 0:
            problems.append(f"picard_tol must be positive, got {self.picard_tol}")
        if int(self.picard_max_iter) != self.picard_max_iter or self.picard_max_iter < 1:
            problems.append(f"picard_max_iter must be a positive integer, got {self.picard_max_iter}")
        if not (self.T >= 0 and math.isfinite(self.T)):
            problems.append(f"T must be finite and nonnegative, got {self.T}")
        if self.slab_policy not in SLAB_POLICIES:
            problems.append(f"slab_policy must be one of {SLAB_POLICIES}, got {self.slab_policy!r}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            problems.append(f"substeps must be a positive integer, got {self.substeps}")
        for name in ("max_slab", "initial_slab", "rk4_dt"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be positive, got {getattr(self, name)}")
        if not self.max_slabs >= 1:
            problems.append(f"max_slabs must be at least 1, got {self.max_slabs}")
        sb = self.collision.sigma + self.fragmentation.beta
        if sb > self.norm.r + 1e-12:
            problems.append(
                f"sigma + beta must not exceed r (got {self.collision.sigma} + {self.fragmentation.beta} > {self.norm.r})"
            )
        if self.output_times is not None:
            ts = tuple(float(t) for t in self.output_times)
            if any(not 0 <= t <= self.T for t in ts):
                problems.append(f"output times must lie in [0, T = {self.T}]")
            object.__setattr__(self, "output_times", ts)
        if problems:
            raise ParameterError("; ".join(problems))

    @property
    def times(self) -> tuple:
        """Sorted snapshot times, always including 0 and T."""
        if self.output_times is None:
            base = np.linspace(0.0, self.T, 11) if self.T > 0 else [0.0]
        else:
            base = self.output_times
        return tuple(sorted({0.0, float(self.T), *map(float, base)}))
