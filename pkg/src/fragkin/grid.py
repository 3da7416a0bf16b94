"""Log-spaced grid on the truncated size domain [1/n, n]."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError

__all__ = ["GeometricGrid", "build_grid", "quadrature", "locate_cell"]


@dataclass(frozen=True, eq=False)
class GeometricGrid:
    """Cells ``[edges[i], edges[i+1]]`` with pivots at the geometric mean of their edges."""

    n: float
    cells_per_decade: int
    edges: np.ndarray

    def __post_init__(self):
        self.edges.setflags(write=False)
        object.__setattr__(self, "pivots", np.sqrt(self.edges[:-1] * self.edges[1:]))
        object.__setattr__(self, "widths", np.diff(self.edges))
        self.pivots.setflags(write=False)
        self.widths.setflags(write=False)

    @property
    def cell_count(self) -> int:
        return len(self.edges) - 1

    @property
    def ratio(self) -> float:
        return float((self.n * self.n) ** (1.0 / self.cell_count))

    @property
    def cells(self):
        return list(zip(self.edges[:-1], self.edges[1:], self.pivots))

    def __len__(self):
        return self.cell_count

    def __eq__(self, other):
        return (
            isinstance(other, GeometricGrid)
            and self.n == other.n
            and self.cell_count == other.cell_count
            and np.array_equal(self.edges, other.edges)
        )

    def __hash__(self):
        return hash((self.n, self.cell_count))


def build_grid(n: float, cells_per_decade: int) -> GeometricGrid:
    """Grid over ``[1/n, n]`` with ``ceil(cells_per_decade * log10(n^2))`` cells (at least 2)."""
    if not n > 1:
        # n = 1 collapses the domain to the single point {1}
        raise DomainError(f"truncation index n must exceed 1, got {n}")
    if int(cells_per_decade) != cells_per_decade or cells_per_decade < 1:
        raise DomainError(f"cells_per_decade must be a positive integer, got {cells_per_decade}")
    n = float(n)
    count = max(2, math.ceil(cells_per_decade * math.log10(n * n)))
    edges = (1.0 / n) * (n * n) ** (np.arange(count + 1) / count)
    edges[0], edges[-1] = 1.0 / n, n
    return GeometricGrid(n, int(cells_per_decade), edges)


def quadrature(values, grid: GeometricGrid, p: float = 0.0) -> float:
    """Pivot rule for ``int x^p g(x) dx`` over [1/n, n]."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != grid.cell_count:
        raise ContractError(f"expected {grid.cell_count} cell values, got {values.shape[-1]}")
    out = np.sum(grid.pivots**p * values * grid.widths, axis=-1)
    return float(out) if out.ndim == 0 else out


def locate_cell(grid: GeometricGrid, x: float) -> int:
    """Index ``i`` with ``edges[i] <= x < edges[i+1]``; the last cell is closed."""
    lo, hi = grid.edges[0], grid.edges[-1]
    if not lo <= x <= hi:
        raise DomainError(f"size {x} lies outside [{lo}, {hi}]")
    i = int(np.searchsorted(grid.edges, x, side="right")) - 1
    return min(i, grid.cell_count - 1)
