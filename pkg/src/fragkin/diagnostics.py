"""Numerical checks of conservation, moment bounds, uniqueness and truncation limits."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractError, ParameterError
from .grid import GeometricGrid, build_grid
from .state import DensityState, moment, uniqueness_weights

__all__ = [
    "BLOWUP",
    "BoundReport",
    "mass_drift",
    "mass_balance",
    "riccati_envelope",
    "n0_envelope",
    "moment_bounds_check",
    "uniqueness_distance",
    "uniqueness_sum",
    "gronwall_envelope",
    "GronwallFit",
    "fit_gronwall",
    "sup_relative_difference",
    "RefinementTable",
    "refinement_study",
    "zero_extend",
]

BLOWUP = math.inf
"""Marker returned by envelopes at or after their blow-up time."""


@dataclass
class BoundReport:
    """Observed values against a bound at each snapshot.

    ``passed`` holds iff ``observed <= bound * (1 + tol)`` everywhere.
    ``worst_margin`` is the smallest ``bound - observed``.
    """

    name: str
    times: np.ndarray
    observed: np.ndarray
    bound: np.ndarray
    tol: float = 1e-9
    note: str = ""
    skipped: bool = False

    @property
    def passed(self) -> bool:
        if self.skipped:
            return True
        return bool(np.all(self.observed <= self.bound * (1.0 + self.tol) + 0.0))

    @property
    def worst_margin(self) -> float:
        if self.skipped or len(self.observed) == 0:
            return math.nan
        return float(np.min(self.bound - self.observed))

    @property
    def vacuous_count(self) -> int:
        """Snapshots where the bound is infinite (past an envelope's blow-up)."""
        return int(np.count_nonzero(np.isinf(self.bound)))

    def to_dict(self) -> dict:
        def clean(a):
            return [float(v) if math.isfinite(v) else repr(float(v)) for v in np.asarray(a, dtype=float)]

        wm = self.worst_margin
        return {
            "name": self.name,
            "pass": self.passed,
            "skipped": self.skipped,
            "worst_margin": wm if math.isfinite(wm) else repr(wm),
            "vacuous_snapshots": self.vacuous_count,
            "note": self.note,
            "times": clean(self.times),
            "observed": clean(self.observed),
            "bound": clean(self.bound),
        }


def mass_drift(trajectory) -> float:
    """``max_t |N1(t) - N1(0)| / N1(0)`` (0 when the initial mass vanishes)."""
    n1 = trajectory.moments(1.0)
    if n1[0] == 0:
        return 0.0
    return float(np.max(np.abs(n1 - n1[0])) / n1[0])


def mass_balance(trajectory) -> float:
    """Relative defect of ``N1(t) + lost(t) = N1(0)``; isolates the numerical drift from shattering loss."""
    n1 = trajectory.moments(1.0)
    if n1[0] == 0:
        return 0.0
    lost = np.asarray(trajectory.lost_mass, dtype=float)
    return float(np.max(np.abs(n1 + lost - n1[0])) / n1[0])


def riccati_envelope(B0: float, N1bar: float, N2bar: float, k1: float, k2: float, r: float, t: float) -> float:
    """Solution of ``B' = c (2B + S)^2``, ``B(0) = B0`` with ``c = k1 k2 / (1 - r)`` and ``S = N1bar + N2bar``.

    Returns ``BLOWUP`` at or after the blow-up time ``1 / (2 c u0)``,
    ``u0 = 2 B0 + S``.
    """
    if not 0 < r < 1:
        raise ParameterError(f"r must lie in (0, 1), got {r}")
    if B0 < 0:
        raise ParameterError(f"B0 must be nonnegative, got {B0}")
    c = k1 * k2 / (1.0 - r)
    S = N1bar + N2bar
    u0 = 2.0 * B0 + S
    denom = 1.0 - 2.0 * c * u0 * t
    if denom <= 0:
        return BLOWUP
    return 0.5 * (u0 / denom - S)


def n0_envelope(N0_initial: float, a: float, k1: float, theta_max: float, t: float) -> float:
    """Solution of ``u' = k1 (N - 1) u^2`` with ``u = N0 + a``, returned as ``u - a``.

    ``a = 2^nu Nbar_{-sigma} + Nbar_1`` collects the moments the
    differential inequality treats as constants; ``N = theta_max``.
    """
    c0 = k1 * (theta_max - 1.0)
    u0 = N0_initial + a
    denom = 1.0 - c0 * u0 * t
    if denom <= 0:
        return BLOWUP
    return u0 / denom - a


def moment_bounds_check(trajectory, r: float, tol: float = 1e-9, mass_tol: float = 1e-6) -> list:
    """Reports for ``N1`` conservation, ``N2`` decay, the Riccati bound on ``N_{-r}`` and the ``N0`` envelope."""
    cfg = trajectory.config
    t = trajectory.times
    n1 = trajectory.moments(1.0)
    n2 = trajectory.moments(2.0)
    nr = trajectory.moments(-r)
    n0 = trajectory.moments(0.0)
    lost = np.asarray(trajectory.lost_mass, dtype=float)
    reports = []

    reports.append(
        BoundReport(
            "N1 conserved",
            t,
            np.abs(n1 + lost - n1[0]),
            np.full_like(t, mass_tol * n1[0]),
            0.0,
            note=f"|N1(t) + lost(t) - N1(0)| <= {mass_tol:g} N1(0)",
        )
    )
    reports.append(BoundReport("N2 <= N2(0)", t, n2, np.full_like(t, n2[0]), tol))
    prev = np.concatenate([n2[:1], n2[:-1]])
    reports.append(BoundReport("N2 non-increasing", t, n2, prev, tol))

    k1, k2 = cfg.collision.k1, cfg.fragmentation.k2
    N1bar, N2bar = float(np.max(n1)), float(np.max(n2))
    env = np.array([riccati_envelope(nr[0], N1bar, N2bar, k1, k2, r, s) for s in t])
    reports.append(
        BoundReport(f"N_-{r:g} Riccati envelope", t, nr, env, tol, note="bound is vacuous (inf) past blow-up")
    )

    theta = cfg.fragmentation.theta_max
    if theta is None:
        warnings.warn("fragment count has no uniform bound; N0 envelope check skipped", RuntimeWarning)
        reports.append(BoundReport("N0 envelope", t, n0, np.full_like(t, np.nan), tol, note="no theta_max", skipped=True))
    else:
        sigma, nu = cfg.collision.sigma, cfg.collision.nu
        nsig = float(np.max(trajectory.moments(-sigma)))
        a = 2.0**nu * nsig + N1bar
        env0 = np.array([n0_envelope(n0[0], a, k1, theta, s) for s in t])
        reports.append(BoundReport("N0 envelope", t, n0, env0, tol, note=f"N = theta_max = {theta:g}"))
    return reports


def _check_pair(trajA, trajB):
    if trajA.grid != trajB.grid:
        raise ContractError("trajectories live on different grids")
    if len(trajA.snapshots) != len(trajB.snapshots) or not np.allclose(trajA.times, trajB.times, rtol=0, atol=1e-12):
        raise ContractError("trajectories have different snapshot times")


def uniqueness_distance(trajA, trajB, lam: float, theta: float, sigma: float = 0.0) -> np.ndarray:
    """``Phi(t)``: uniqueness weight applied to ``|gA - gB|`` at each snapshot."""
    _check_pair(trajA, trajB)
    if lam < 0 or theta < 0 or not theta + sigma < 1:
        raise ParameterError(f"need lambda >= 0, theta >= 0 and theta + sigma < 1, got {lam}, {theta}, {sigma}")
    w = uniqueness_weights(trajA.grid, lam, theta) * trajA.grid.widths
    return np.abs(trajA.values - trajB.values) @ w


def uniqueness_sum(trajA, trajB, lam: float, theta: float) -> np.ndarray:
    """``Psi(t)``: the same weight applied to ``gA + gB``."""
    _check_pair(trajA, trajB)
    w = uniqueness_weights(trajA.grid, lam, theta) * trajA.grid.widths
    return (np.abs(trajA.values) + np.abs(trajB.values)) @ w


def gronwall_envelope(C0: float, C2: float, C3: float, t):
    """``(C3 / C2)(exp(C2 t) - 1) + C0 exp(C2 t)``."""
    if not C2 > 0:
        raise ParameterError(f"C2 must be positive, got {C2}")
    e = np.exp(C2 * np.asarray(t, dtype=float))
    out = (C3 / C2) * (e - 1.0) + C0 * e
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GronwallFit:
    C0: float
    C2: float
    C3: float
    method: str

    def envelope(self, t):
        return gronwall_envelope(self.C0, self.C2, self.C3, t)


def fit_gronwall(times, phi, psi=None, rate_scale: Optional[float] = None) -> GronwallFit:
    """Envelope constants from measured distances.

    ``C0 = Phi(0)``, ``C3 = 0``.  With ``psi`` and ``rate_scale`` the
    growth rate is ``C2 = rate_scale * max Psi`` (the linear-in-Phi
    structure of the uniqueness estimate); otherwise the tightest ``C2``
    with ``Phi(t) <= C0 exp(C2 t)`` on the samples.
    """
    times = np.asarray(times, dtype=float)
    phi = np.asarray(phi, dtype=float)
    C0 = float(phi[0])
    if psi is not None and rate_scale is not None:
        return GronwallFit(C0, max(rate_scale * float(np.max(psi)), 1e-300), 0.0, "psi")
    C2 = 1e-12
    if C0 > 0:
        mask = times > 0
        if mask.any():
            C2 = max(C2, float(np.max(np.log(np.maximum(phi[mask], 1e-300) / C0) / times[mask])))
    return GronwallFit(C0, C2, 0.0, "tight")


def sup_relative_difference(trajA, trajB) -> float:
    """``max |gA - gB| / max |gA|`` over all cells of all matched snapshots."""
    _check_pair(trajA, trajB)
    a, b = trajA.values, trajB.values
    scale = np.max(np.abs(a), axis=1, keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(a - b) / scale))


def zero_extend(state: DensityState, points) -> np.ndarray:
    """Piecewise-constant-in-log value of ``state`` at ``points``, zero outside ``[1/n, n]``."""
    points = np.asarray(points, dtype=float)
    grid = state.grid
    idx = np.searchsorted(grid.edges, points, side="right") - 1
    idx = np.minimum(idx, grid.cell_count - 1)
    inside = (points >= grid.edges[0]) & (points <= grid.edges[-1])
    return np.where(inside, np.asarray(state.values)[np.clip(idx, 0, grid.cell_count - 1)], 0.0)


@dataclass
class RefinementTable:
    """Outcome of a truncation refinement study.

    ``sup_differences[i]`` compares runs ``ns[i]`` and ``ns[i + 1]`` on
    the window cells of the finest grid, maximised over snapshot times.
    """

    ns: list
    window: tuple
    times: np.ndarray
    sup_differences: list
    mass: list
    window_mass: list
    drift: list
    moment_differences: list = field(default_factory=list)

    @property
    def cauchy(self) -> bool:
        d = self.sup_differences
        return all(b <= a for a, b in zip(d, d[1:]))

    @property
    def mass_spread(self) -> float:
        m = np.asarray(self.mass)
        if len(m) < 2 or m[0] == 0:
            return 0.0
        return float((m.max() - m.min()) / abs(m[0]))

    def to_dict(self) -> dict:
        return {
            "ns": [float(n) for n in self.ns],
            "window": [float(w) for w in self.window],
            "times": [float(t) for t in self.times],
            "sup_differences": [float(d) for d in self.sup_differences],
            "moment_differences": self.moment_differences,
            "mass": [float(m) for m in self.mass],
            "window_mass": [float(m) for m in self.window_mass],
            "mass_spread": self.mass_spread,
            "drift": [float(d) for d in self.drift],
            "cauchy": self.cauchy,
        }


def refinement_study(
    config,
    n_list: Sequence[float],
    common_window: tuple,
    solve_fn: Optional[Callable] = None,
    workers: int = 1,
) -> RefinementTable:
    """Solve for each ``n`` and compare zero-extended solutions on a common window.

    Every run uses ``config`` with only ``n`` (and the fragmentation
    bound scale, if the kernel is the power-law preset) replaced.  Runs
    are independent and may use ``workers`` threads; results do not
    depend on the thread count.
    """
    from .kernels import FragmentationFamily, powerlaw_k2
    from .solver import solve

    solve_fn = solve_fn or solve
    ns = [float(n) for n in n_list]
    if any(b < a for a, b in zip(ns, ns[1:])):
        raise ParameterError(f"n_list must be non-decreasing, got {ns}")
    lo, hi = common_window
    if not (0 < lo < hi and lo >= 1.0 / ns[0] - 1e-15 and hi <= ns[0] + 1e-12):
        raise ParameterError(f"window {common_window} must lie inside [1/{ns[0]:g}, {ns[0]:g}]")
    fine = build_grid(ns[-1], config.cells_per_decade)
    sel = (fine.pivots >= lo) & (fine.pivots <= hi)
    pts = fine.pivots[sel]
    wid = fine.widths[sel]

    configs = []
    for n in ns:
        frag = config.fragmentation
        if frag.family is FragmentationFamily.POWERLAW:
            frag = replace(frag, k2=max(frag.k2, powerlaw_k2(frag.alpha, frag.beta, n)), validity=(1.0 / n, n))
        configs.append(replace(config, n=n, fragmentation=frag))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(solve_fn, configs))
    else:
        runs = [solve_fn(c) for c in configs]

    times = runs[0].times
    sampled = [np.array([zero_extend(s, pts) for s in tr.snapshots]) for tr in runs]
    sups, mdiffs = [], []
    for a, b in zip(sampled, sampled[1:]):
        sups.append(float(np.max(np.abs(a - b))) if a.size else 0.0)
        mdiffs.append(
            {
                "N0": float(np.max(np.abs((a - b) @ wid))),
                "N1": float(np.max(np.abs((a - b) @ (pts * wid)))),
            }
        )
    mass = [float(tr.moments(1.0)[-1]) for tr in runs]
    wmass = [float((s[-1] * pts) @ wid) for s in sampled]
    drift = [mass_drift(tr) for tr in runs]
    return RefinementTable(ns, (lo, hi), times, sups, mass, wmass, drift, mdiffs)
