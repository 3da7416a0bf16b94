"""A-priori constants of the fixed-point argument: M, L, t', t'', t0 and k."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ..errors import ContractionError
from ..grid import GeometricGrid, build_grid
from ..kernels import FragmentationFamily
from ..state import DensityState, moment, weighted_norm

__all__ = [
    "ContractionEstimate",
    "lambda_factor",
    "kernel_sups",
    "estimate_contraction",
    "estimate_for_state",
    "contraction_factor",
]

# t'' solves h(t) = 1 - _K_MARGIN so that k < 1 strictly at t0
_K_MARGIN = 1e-9
_SAMPLES = 257


@dataclass(frozen=True)
class ContractionEstimate:
    M: float
    L: float
    t_prime: float
    t_double_prime: float
    t0: float
    k: float

    @property
    def B(self) -> float:
        """Radius of the ball the operator maps into itself."""
        return 2.0 * self.L

    def to_dict(self) -> dict:
        return {k: (v if math.isfinite(v) else repr(v)) for k, v in asdict(self).items()}


def lambda_factor(lam: float, r: float, n: float) -> float:
    """``exp(lam (1 + n)) / lam + exp(2 lam) n^(1 - r) / (1 - r)``."""
    return math.exp(lam * (1.0 + n)) / lam + math.exp(2.0 * lam) * n ** (1.0 - r) / (1.0 - r)


def kernel_sups(config, grid: Optional[GeometricGrid] = None, fragment_table=None) -> tuple:
    """Sampled ``(sup C, sup F)`` over the truncated box ``[1/n, n]``.

    Delta fragmentation has no pointwise supremum; the largest discrete
    daughter weight stands in for it.
    """
    c = config.collision
    if c.is_zero:
        return 0.0, 0.0
    n = config.n
    pts = np.geomspace(1.0 / n, n, _SAMPLES)
    supc = float(np.max(c.rate(pts[:, None], pts[None, :])))
    f = config.fragmentation
    if f.is_delta:
        if fragment_table is None:
            from .operator import build_fragment_table

            grid = grid or build_grid(n, config.cells_per_decade)
            fragment_table = build_fragment_table(f, grid)
        supf = float(np.max(fragment_table.weights))
    elif f.family is FragmentationFamily.POWERLAW:
        supf = float(np.max(f.density(pts[:, None], pts[None, :], 1.0)))
    else:
        q = np.geomspace(1.0 / n, n, 33)
        supf = float(np.max(f.density(q[:, None, None], q[None, :, None], q[None, None, :])))
    return supc, supf


def _largest_root(logh, log_target) -> float:
    """Largest ``t`` with ``logh(t) <= log_target`` for increasing ``logh``."""
    f = lambda s: logh(math.exp(s)) - log_target
    hi = 0.0
    while f(hi) < 0:
        hi += 8.0
        if hi > 690:
            return math.inf
    lo = hi - 8.0
    while f(lo) > 0:
        lo -= 8.0
        if lo < -690:
            return 0.0
    return math.exp(brentq(f, lo, hi, xtol=1e-14, rtol=1e-14))


def contraction_factor(t, M, L, g0_norm, K1, Lam) -> float:
    """Left-hand side of the contraction condition at ``t`` with ``B = 2L``."""
    B = 2.0 * L
    return math.exp(t * B * M) * (M * t * g0_norm + K1 * Lam * (M * t * t * B * B + 2.0 * B * t))


def estimate_contraction(
    config,
    g0_norm: float,
    g0_mass: float,
    horizon: Optional[float] = None,
    sups: Optional[tuple] = None,
) -> ContractionEstimate:
    """Contraction constants for a slab starting from data of norm ``g0_norm`` and mass ``g0_mass``.

    Parameters
    ----------
    horizon
        Time ``T`` entering ``L`` and capping ``t0``; defaults to ``config.T``.
    sups
        Precomputed ``kernel_sups(config)``.
    """
    if not (math.isfinite(g0_norm) and math.isfinite(g0_mass)):
        raise ContractionError("initial norms must be finite")
    T = config.T if horizon is None else float(horizon)
    supc, supf = sups if sups is not None else kernel_sups(config)
    M = 0.0 if config.collision.is_zero else max(supc, supf)
    K1 = config.collision.k1 * config.fragmentation.k2
    lam, r = config.norm.lam, config.norm.r
    Lam = lambda_factor(lam, r, config.n)
    L = g0_norm + Lam * M * M * T * g0_mass**2

    if M == 0.0 or L == 0.0:
        tp = tpp = math.inf
    else:
        tp = _largest_root(lambda t: 2.0 * t * M * L + math.log1p(4.0 * L * K1 * t * Lam), math.log(2.0))
        B = 2.0 * L

        def logh(t):
            inner = M * t * g0_norm + K1 * Lam * (M * t * t * B * B + 2.0 * B * t)
            return t * B * M + (math.log(inner) if inner > 0 else -math.inf)

        tpp = _largest_root(logh, math.log1p(-_K_MARGIN))
    t0 = min(tp, tpp, T)
    k = contraction_factor(t0, M, L, g0_norm, K1, Lam) if M > 0 else 0.0
    if not k < 1:
        raise ContractionError(f"contraction factor k = {k} is not below 1 at t0 = {t0}")
    return ContractionEstimate(M, L, tp, tpp, t0, k)


def estimate_for_state(config, state: DensityState, horizon=None, sups=None) -> ContractionEstimate:
    """``estimate_contraction`` with the norm and mass of ``state``."""
    return estimate_contraction(
        config, weighted_norm(state, config.norm), moment(state, 1.0), horizon=horizon, sups=sups
    )
