"""Truncated kernels, fragment redistribution and the discrete right-hand side."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ModelError
from ..grid import GeometricGrid, locate_cell
from ..kernels import CollisionKernelSpec, FragmentationFamily, FragmentationKernelSpec
from ..state import DensityState

__all__ = [
    "TruncatedKernelSet",
    "truncate_kernel",
    "FragmentWeights",
    "FragmentTable",
    "discretize_fragments",
    "build_fragment_table",
    "DiscreteOperator",
    "death_rate",
    "gain_rate",
]

# Gauss-Legendre nodes for cell integrals of custom fragmentation kernels
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class TruncatedKernelSet:
    """Cut-off kernel ``C_n``: equal to ``C`` on [1/n, n]^2, ramped to zero outside.

    The ramp is linear in ``log x`` per coordinate over a collar of
    log-width ``taper_fraction`` on each side of the domain.
    """

    base: CollisionKernelSpec
    n: float
    taper_fraction: float = 0.5

    def __post_init__(self):
        if not 0 < self.taper_fraction <= 1:
            raise ValueError(f"taper_fraction must lie in (0, 1], got {self.taper_fraction}")

    @property
    def collar_width(self) -> float:
        return float(self.taper_fraction)

    def taper(self, x):
        lx = np.log(np.asarray(x, dtype=float))
        ln = math.log(self.n)
        excess = np.maximum(lx - ln, 0.0) + np.maximum(-ln - lx, 0.0)
        return np.clip(1.0 - excess / self.collar_width, 0.0, 1.0)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        t = self.taper(x) * self.taper(y)
        with np.errstate(over="ignore", invalid="ignore"):
            c = self.base.rate(x, y)
        return np.where(t > 0, c * t, 0.0)


def truncate_kernel(spec: CollisionKernelSpec, n: float, taper_fraction: float = 0.5) -> TruncatedKernelSet:
    return TruncatedKernelSet(spec, float(n), taper_fraction)


@dataclass
class FragmentWeights:
    """Daughter densities ``W(i | mother)`` on the grid for one breakage event."""

    weights: np.ndarray
    scale: float = 1.0
    lost_mass: float = 0.0

    @property
    def shattering(self) -> bool:
        return self.lost_mass > 0


def _raw_cell_counts(fspec, grid, y, z, m):
    """Number of daughters landing in each cell ``i <= m`` (integration over ``[edge_i, min(edge_i+1, y)]``)."""
    left = grid.edges[: m + 1]
    right = np.minimum(grid.edges[1 : m + 2], y)
    counts = np.zeros(grid.cell_count)
    if fspec.family is FragmentationFamily.POWERLAW:
        counts[: m + 1] = np.where(right > left, fspec.cell_count(left, np.maximum(right, left), y), 0.0)
        return counts
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    xs = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = fspec.density(xs, y, z)
    counts[: m + 1] = np.where(right > left, half * (vals @ _GL_W), 0.0)
    return counts


def discretize_fragments(fspec: FragmentationKernelSpec, grid: GeometricGrid, mother: int, z: int) -> FragmentWeights:
    """Mass-conserving daughter weights for a mother at ``pivots[mother]`` hit by ``pivots[z]``.

    Continuous families: cell-integrated daughter counts rescaled by one
    scalar so that ``sum_i x_i W_i width_i = y`` exactly.  Half-split
    delta: the two cells bracketing ``y/2`` share the daughters so that
    count 2 and mass ``y`` are both exact; daughters below ``1/n`` are
    lost and reported as ``lost_mass``.
    """
    x, w = grid.pivots, grid.widths
    y, zz = float(x[mother]), float(x[z])
    out = np.zeros(grid.cell_count)

    if fspec.is_delta:
        if not bool(fspec.breaks(y, zz)):
            out[mother] = 1.0 / w[mother]
            return FragmentWeights(out)
        half = 0.5 * y
        if half < grid.edges[0]:
            return FragmentWeights(out, lost_mass=y)
        a = locate_cell(grid, half)
        if half < x[a]:
            a -= 1
        if a < 0:
            # between 1/n and the first pivot: keep the mass, count drops below 2
            out[0] = (y / x[0]) / w[0]
            return FragmentWeights(out)
        if half == x[a]:
            out[a] = 2.0 / w[a]
            return FragmentWeights(out)
        b = a + 1
        cb = (y - 2.0 * x[a]) / (x[b] - x[a])
        out[a] += (2.0 - cb) / w[a]
        out[b] += cb / w[b]
        return FragmentWeights(out)

    counts = _raw_cell_counts(fspec, grid, y, zz, mother)
    mass = float(np.sum(x * counts))
    if not mass > 0:
        raise ModelError(f"fragmentation kernel puts no mass on the grid for mother y = {y:.6g}")
    scale = y / mass
    return FragmentWeights(scale * counts / w, scale)


@dataclass
class FragmentTable:
    """All daughter weights of a grid.

    ``weights`` has shape ``(N, N)`` indexed ``[mother, cell]`` when the
    kernel ignores the partner, else ``(N, N, N)`` indexed
    ``[mother, partner, cell]``; ``lost_mass`` drops the last axis.
    """

    weights: np.ndarray
    lost_mass: np.ndarray
    scale: np.ndarray

    @property
    def partner_dependent(self) -> bool:
        return self.weights.ndim == 3

    @property
    def any_loss(self) -> bool:
        return bool(np.any(self.lost_mass > 0))


def build_fragment_table(fspec: FragmentationKernelSpec, grid: GeometricGrid) -> FragmentTable:
    N = grid.cell_count
    if fspec.depends_on_partner:
        W = np.zeros((N, N, N))
        lost = np.zeros((N, N))
        scale = np.ones((N, N))
        for m in range(N):
            for z in range(N):
                fw = discretize_fragments(fspec, grid, m, z)
                W[m, z], lost[m, z], scale[m, z] = fw.weights, fw.lost_mass, fw.scale
    else:
        W = np.zeros((N, N))
        lost = np.zeros(N)
        scale = np.ones(N)
        for m in range(N):
            fw = discretize_fragments(fspec, grid, m, m)
            W[m], lost[m], scale[m] = fw.weights, fw.lost_mass, fw.scale
    return FragmentTable(W, lost, scale)


class DiscreteOperator:
    """Truncated equation on a grid.

    All rate methods accept cell values of shape ``(N,)`` or a stack
    ``(K, N)`` and reduce in a fixed order, so results do not depend on
    threading.
    """

    def __init__(self, grid: GeometricGrid, kernels: TruncatedKernelSet, fspec: FragmentationKernelSpec):
        self.grid = grid
        self.kernels = kernels
        self.fspec = fspec
        x = grid.pivots
        self.C = np.ascontiguousarray(kernels(x[:, None], x[None, :]))
        self.table = build_fragment_table(fspec, grid)

    @property
    def widths(self):
        return self.grid.widths

    def death_rates(self, values):
        """``sum_j C(x_i, x_j) g_j width_j`` per cell."""
        return (np.asarray(values) * self.widths) @ self.C.T

    def _pair_weights(self, values):
        gw = np.asarray(values) * self.widths
        if self.table.partner_dependent:
            return gw[..., :, None] * gw[..., None, :] * self.C
        # collision number rate of each mother, summed over partners
        return gw * (gw @ self.C.T)

    def gain_rates(self, values):
        P = self._pair_weights(values)
        if self.table.partner_dependent:
            return np.einsum("...mz,mzi->...i", P, self.table.weights)
        return P @ self.table.weights

    def rhs(self, values):
        values = np.asarray(values)
        return self.gain_rates(values) - self.death_rates(values) * values

    def loss_rate(self, values):
        """Mass per unit time leaving the grid through the floor (delta kernels)."""
        if not self.table.any_loss:
            shape = np.shape(values)[:-1]
            return np.zeros(shape) if shape else 0.0
        P = self._pair_weights(values)
        if self.table.partner_dependent:
            return np.einsum("...mz,mz->...", P, self.table.lost_mass)
        return P @ self.table.lost_mass

    def survival_map(self, nodes, g_start, h):
        """One application of the fixed-point operator on a slab.

        ``nodes`` holds the iterate at the ``K + 1`` sub-step times of the
        slab.  Returns ``g_start exp(-D_k) + int_0^{t_k} exp(-(D_k - D_s)) gain(s) ds``
        at every node with both time integrals done by the trapezoid rule.
        """
        nodes = np.asarray(nodes)
        K1 = nodes.shape[0]
        d = self.death_rates(nodes)
        D = np.zeros_like(d)
        if K1 > 1:
            D[1:] = np.cumsum(0.5 * h * (d[1:] + d[:-1]), axis=0)
        gain = self.gain_rates(nodes)
        k = np.arange(K1)
        coeff = np.where(k[None, :] <= k[:, None], h, 0.0)
        coeff[:, 0] *= 0.5
        coeff[k, k] *= 0.5
        coeff[0, 0] = 0.0
        lower = k[None, :] <= k[:, None]
        expo = np.where(lower[:, :, None], D[:, None, :] - D[None, :, :], 0.0)
        survive = np.exp(-expo)
        return g_start * np.exp(-D) + np.einsum("kj,kjn,jn->kn", coeff, survive, gain)


def death_rate(state: DensityState, op: DiscreteOperator, cell: int) -> float:
    return float(op.death_rates(state.values)[cell])


def gain_rate(state: DensityState, op: DiscreteOperator, cell: int) -> float:
    return float(op.gain_rates(state.values)[cell])
