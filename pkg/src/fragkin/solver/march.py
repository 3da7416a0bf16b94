"""Slab-by-slab Picard marching and the explicit RK4 oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConvergenceError, ContractError
from ..grid import build_grid
from ..state import DensityState, moment, norm_weights
from .config import SolverConfig
from .contraction import ContractionEstimate, estimate_for_state, kernel_sups
from .operator import DiscreteOperator, truncate_kernel

__all__ = [
    "SlabResult",
    "StepResult",
    "Trajectory",
    "build_operator",
    "picard_slab_step",
    "rk4_step",
    "solve",
    "solve_rk4",
    "march_analytic_slabs",
]

# ratios are only meaningful while the previous difference is above rounding
_RATIO_FLOOR = 1e-13


@dataclass
class SlabResult:
    """Outcome of one Picard slab."""

    state: DensityState
    tau: float
    iterations: int
    differences: list
    ratios: list
    max_norm: float
    negative_count: int
    lost_mass: float
    estimate: Optional[ContractionEstimate] = None

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def record(self, t_start: float) -> dict:
        rec = {
            "type": "slab",
            "t_start": t_start,
            "tau": self.tau,
            "iterations": self.iterations,
            "max_ratio": self.max_ratio,
            "max_norm": self.max_norm,
            "negative_count": self.negative_count,
        }
        if self.estimate is not None:
            rec.update(t0=self.estimate.t0, k=self.estimate.k, ball_radius=self.estimate.B)
        return rec


@dataclass
class StepResult:
    state: DensityState
    clamp: float = 0.0
    lost_mass: float = 0.0


@dataclass
class Trajectory:
    """Snapshots of a solve plus its event log.

    ``lost_mass[i]`` is the mass that left through the floor of the grid
    up to ``snapshots[i].time``.
    """

    config: SolverConfig
    snapshots: list
    events: list = field(default_factory=list)
    lost_mass: list = field(default_factory=list)
    clamp_total: float = 0.0
    integrator: str = "picard"
    twin: Optional["Trajectory"] = None

    @property
    def grid(self):
        return self.snapshots[0].grid

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def values(self) -> np.ndarray:
        return np.array([s.values for s in self.snapshots])

    def moments(self, p: float) -> np.ndarray:
        return np.array([moment(s, p) for s in self.snapshots])

    @property
    def slab_events(self) -> list:
        return [e for e in self.events if e["type"] == "slab"]


def build_operator(config: SolverConfig) -> DiscreteOperator:
    grid = build_grid(config.n, config.cells_per_decade)
    return DiscreteOperator(grid, truncate_kernel(config.collision, config.n, config.taper_fraction), config.fragmentation)


def _weighted(op, config):
    return norm_weights(op.grid, config.norm) * op.grid.widths


def picard_slab_step(
    state: DensityState,
    op: DiscreteOperator,
    config: SolverConfig,
    tau: Optional[float] = None,
    estimate: Optional[ContractionEstimate] = None,
) -> SlabResult:
    """Advance ``state`` by one slab of length ``tau`` (default ``estimate.t0``).

    Iterates ``g <- survival_map(g)`` on the sub-step nodes starting from
    the constant-in-time guess until the sup-in-time weighted-norm
    distance of successive iterates is at most ``config.picard_tol``.
    """
    if tau is None:
        if estimate is None:
            raise ContractError("either tau or an estimate is required")
        tau = estimate.t0
    K = config.substeps
    h = tau / K
    g_start = np.asarray(state.values)
    wts = _weighted(op, config)
    nodes = np.tile(g_start, (K + 1, 1))
    max_norm = float(np.max(nodes @ wts))
    diffs, ratios = [], []
    negatives = 0
    for it in range(1, config.picard_max_iter + 1):
        new = op.survival_map(nodes, g_start, h)
        negatives += int(np.count_nonzero(new < 0))
        diff = float(np.max(np.abs(new - nodes) @ wts))
        max_norm = max(max_norm, float(np.max(new @ wts)))
        if diffs and diffs[-1] > _RATIO_FLOOR * max_norm:
            ratios.append(diff / diffs[-1])
        diffs.append(diff)
        nodes = new
        if diff <= config.picard_tol:
            break
    else:
        k = estimate.k if estimate is not None else float("nan")
        raise ConvergenceError(
            f"Picard iteration did not reach {config.picard_tol:g} in {config.picard_max_iter} iterations "
            f"on a slab of length {tau:g} at t = {state.time:g} (last difference {diffs[-1]:.3e})",
            last_difference=diffs[-1],
            predicted_bound=k ** len(diffs) * diffs[0],
        )
    loss = op.loss_rate(nodes)
    lost = float(0.5 * h * np.sum(loss[1:] + loss[:-1])) if K > 0 else 0.0
    out = state.with_values(nodes[-1], time=state.time + tau)
    return SlabResult(out, tau, it, diffs, ratios, max_norm, negatives, lost, estimate)


def rk4_step(state: DensityState, op: DiscreteOperator, dt: float) -> StepResult:
    """Classical RK4 step of ``g' = gain - death * g``; negatives are clamped to 0."""
    if not dt > 0:
        raise ContractError(f"dt must be positive, got {dt}")
    g = np.asarray(state.values)
    k1 = op.rhs(g)
    s2 = g + 0.5 * dt * k1
    k2 = op.rhs(s2)
    s3 = g + 0.5 * dt * k2
    k3 = op.rhs(s3)
    s4 = g + dt * k3
    k4 = op.rhs(s4)
    new = g + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    lost = 0.0
    if op.table.any_loss:
        rates = [op.loss_rate(s) for s in (g, s2, s3, s4)]
        lost = float(dt / 6.0 * (rates[0] + 2.0 * rates[1] + 2.0 * rates[2] + rates[3]))
    neg = new < 0
    clamp = float(-np.sum(new[neg] * op.grid.widths[neg])) if neg.any() else 0.0
    if clamp:
        new = np.where(neg, 0.0, new)
    return StepResult(state.with_values(new, time=state.time + dt), clamp, lost)


def _initial(config: SolverConfig, op: DiscreteOperator) -> DensityState:
    return config.initial.build(op.grid)


def solve_rk4(config: SolverConfig, op: Optional[DiscreteOperator] = None) -> Trajectory:
    """RK4 trajectory at the configured output times with step at most ``config.rk4_dt``."""
    op = op or build_operator(config)
    state = _initial(config, op)
    traj = Trajectory(config, [state], lost_mass=[0.0], integrator="rk4")
    lost = clamp = 0.0
    for t_out in config.times[1:]:
        span = t_out - state.time
        steps = max(1, math.ceil(span / config.rk4_dt - 1e-9))
        dt = span / steps
        for _ in range(steps):
            res = rk4_step(state, op, dt)
            state, lost, clamp = res.state, lost + res.lost_mass, clamp + res.clamp
            if res.clamp:
                traj.events.append({"type": "clamp", "t": state.time, "magnitude": res.clamp})
        state = state.with_values(state.values, time=t_out)
        traj.snapshots.append(state)
        traj.lost_mass.append(lost)
    traj.clamp_total = clamp
    return traj


def solve(config: SolverConfig, op: Optional[DiscreteOperator] = None) -> Trajectory:
    """March ``[0, T]`` slab by slab, re-estimating the contraction constants at every slab start."""
    op = op or build_operator(config)
    state = _initial(config, op)
    traj = Trajectory(config, [state], lost_mass=[0.0])
    if config.T == 0:
        return traj
    sups = kernel_sups(config, op.grid, op.table)
    analytic = config.slab_policy == "analytic_t0"
    tau = min(config.initial_slab, config.max_slab)
    lost = 0.0
    slabs = 0
    eps = 1e-12 * config.T
    for t_out in config.times[1:]:
        while state.time < t_out - eps:
            remaining = t_out - state.time
            est = estimate_for_state(config, state, horizon=config.T - state.time, sups=sups)
            if analytic:
                if est.t0 <= 0 or (config.T - state.time) / est.t0 > config.max_slabs - slabs:
                    raise ConvergenceError(
                        f"analytic slab t0 = {est.t0:.3e} at t = {state.time:g} would need more than "
                        f"max_slabs = {config.max_slabs} slabs"
                    )
                step = min(est.t0, remaining)
            else:
                step = min(tau, remaining)
            try:
                res = picard_slab_step(state, op, config, step, est)
            except ConvergenceError as exc:
                if analytic or step < 1e-12 * max(config.T, 1.0):
                    raise
                traj.events.append({"type": "slab_retry", "t_start": state.time, "tau": step, "last_difference": exc.last_difference})
                tau = 0.5 * step
                continue
            slabs += 1
            if slabs > config.max_slabs:
                raise ConvergenceError(f"solve exceeded max_slabs = {config.max_slabs}")
            traj.events.append(res.record(state.time))
            if res.lost_mass > 0:
                traj.events.append({"type": "shattering", "t": res.state.time, "lost_mass": res.lost_mass})
            if not analytic:
                if res.max_ratio < 0.5 and step >= tau:
                    tau = min(2.0 * tau, config.max_slab)
                elif res.max_ratio >= 0.5:
                    tau = 0.5 * step
            lost += res.lost_mass
            state = res.state
        state = state.with_values(state.values, time=t_out)
        traj.snapshots.append(state)
        traj.lost_mass.append(lost)
    if config.cross_check:
        traj.twin = solve_rk4(config, op)
    return traj


def march_analytic_slabs(config: SolverConfig, slabs: int, op: Optional[DiscreteOperator] = None) -> list:
    """Run ``slabs`` consecutive slabs of analytic length ``t0`` from the initial data.

    Returns the list of ``SlabResult``; used where a full analytic solve
    would need an impractical number of slabs.
    """
    op = op or build_operator(config)
    state = _initial(config, op)
    sups = kernel_sups(config, op.grid, op.table)
    out = []
    for _ in range(slabs):
        est = estimate_for_state(config, state, horizon=config.T - state.time, sups=sups)
        if est.t0 <= 0:
            break
        res = picard_slab_step(state, op, config, est.t0, est)
        out.append(res)
        state = res.state
    return out
