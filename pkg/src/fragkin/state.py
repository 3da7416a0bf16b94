"""Cell-wise number density on a grid, its moments and weighted norms."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np

from .errors import ContractError, DomainError, ParameterError
from .grid import GeometricGrid, quadrature

__all__ = [
    "DensityState",
    "WeightedNormParams",
    "init_from_function",
    "moment",
    "weighted_norm",
    "norm_weights",
    "uniqueness_weight_norm",
    "uniqueness_weights",
    "snapshots_to_csv",
    "snapshots_from_csv",
]


@dataclass(frozen=True, eq=False)
class DensityState:
    """Number density ``g(t, x)`` sampled per cell (number per unit size)."""

    grid: GeometricGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.cell_count,):
            raise ContractError(f"expected {self.grid.cell_count} values, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def moment(self, p: float) -> float:
        return moment(self, p)

    def with_values(self, values, time=None) -> "DensityState":
        return replace(self, values=values, time=self.time if time is None else time)

    @property
    def is_nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0))


@dataclass(frozen=True)
class WeightedNormParams:
    """Weight ``exp(lam (1 + x)) + exp(2 lam) / x^r`` of the existence norm."""

    lam: float = 1.0
    r: float = 0.6

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")
        if not 0 < self.r < 1:
            raise ParameterError(f"r must lie in (0, 1), got {self.r}")


def init_from_function(grid: GeometricGrid, g0: Callable) -> DensityState:
    """Sample ``g0`` at the pivots; mass outside [1/n, n] is dropped by construction."""
    values = np.asarray(g0(grid.pivots), dtype=float)
    if values.shape == ():
        values = np.full(grid.cell_count, float(values))
    if not np.all(np.isfinite(values)):
        raise DomainError("initial density is not finite at every pivot")
    if np.any(values < 0):
        i = int(np.argmin(values))
        raise DomainError(f"initial density is negative at x = {grid.pivots[i]:.6g}")
    return DensityState(grid, values, 0.0)


def moment(state: DensityState, p: float) -> float:
    """Truncated moment ``N_p = int x^p g dx`` for ``p > -1``."""
    if not p > -1:
        raise DomainError(f"moment order must exceed -1, got {p}")
    return quadrature(state.values, state.grid, p)


def norm_weights(grid: GeometricGrid, params: WeightedNormParams) -> np.ndarray:
    x = grid.pivots
    return np.exp(params.lam * (1.0 + x)) + math.exp(2.0 * params.lam) * x ** (-params.r)


def weighted_norm(state: DensityState, params: WeightedNormParams) -> float:
    """``sum_i w(x_i) |g_i| width_i`` with the existence-norm weight."""
    w = norm_weights(state.grid, params)
    return float(np.sum(w * np.abs(state.values) * state.grid.widths))


def uniqueness_weights(grid: GeometricGrid, lam: float, theta: float) -> np.ndarray:
    x = grid.pivots
    return np.exp(lam * x) + x ** (-theta)


def uniqueness_weight_norm(state: DensityState, lam: float, theta: float, sigma: float = 0.0) -> float:
    """Weight ``exp(lam x) + x^-theta`` applied to ``|g|``; requires ``theta + sigma < 1``."""
    if lam < 0:
        raise ParameterError(f"lambda must be nonnegative, got {lam}")
    if theta < 0 or not theta + sigma < 1:
        raise ParameterError(f"need theta >= 0 and theta + sigma < 1, got theta={theta}, sigma={sigma}")
    w = uniqueness_weights(state.grid, lam, theta)
    return float(np.sum(w * np.abs(state.values) * state.grid.widths))


def _fmt(v: float) -> str:
    # repr is the shortest string that round-trips
    return repr(float(v))


def snapshots_to_csv(states: Iterable[DensityState]) -> str:
    """CSV text: header ``time, <pivot>...`` then one row per snapshot."""
    states = list(states)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if not states:
        return ""
    grid = states[0].grid
    writer.writerow(["time"] + [_fmt(p) for p in grid.pivots])
    for s in states:
        if s.grid is not grid and s.grid != grid:
            raise ContractError("all snapshots must share one grid")
        writer.writerow([_fmt(s.time)] + [_fmt(v) for v in s.values])
    return buf.getvalue()


def snapshots_from_csv(text: str, grid: GeometricGrid) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    pivots = np.array([float(v) for v in header[1:]])
    if len(pivots) != grid.cell_count or not np.allclose(pivots, grid.pivots, rtol=1e-15, atol=0):
        raise ContractError("CSV pivots do not match the grid")
    return [DensityState(grid, np.array([float(v) for v in row[1:]]), float(row[0])) for row in body]
