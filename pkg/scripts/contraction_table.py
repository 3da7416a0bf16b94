#!/usr/bin/env python3
"""Tabulate the contraction constants (M, L, t', t'', t0, k) against n and k1.

Uses the exponential initial data with unit number and the uniform
power-law daughter distribution.
"""

import argparse

from fragkin import kernels as K
from fragkin.solver import SolverConfig, build_operator, estimate_for_state, kernel_sups
from fragkin.state import WeightedNormParams


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", default="2,4,8,16", help="comma-separated truncation indices")
    p.add_argument("--k1", default="0.5,1,2", help="comma-separated collision scales")
    p.add_argument("--T", type=float, default=0.5)
    p.add_argument("--cpd", type=int, default=16, help="cells per decade")
    args = p.parse_args()

    print(f"{'n':>6} {'k1':>6} {'M':>10} {'L':>10} {'t_prime':>10} {'t_dprime':>10} {'t0':>10} {'k':>10}")
    for n in (float(v) for v in args.n.split(",")):
        for k1 in (float(v) for v in args.k1.split(",")):
            cfg = SolverConfig(
                K.constant(k1), K.powerlaw(0.0, 0.0, n), n=n, cells_per_decade=args.cpd, T=args.T,
                norm=WeightedNormParams(1.0, 0.6),
            )
            op = build_operator(cfg)
            est = estimate_for_state(cfg, cfg.initial.build(op.grid), sups=kernel_sups(cfg, op.grid, op.table))
            print(
                f"{n:6g} {k1:6g} {est.M:10.3e} {est.L:10.3e} {est.t_prime:10.3e} "
                f"{est.t_double_prime:10.3e} {est.t0:10.3e} {est.k:10.6f}"
            )


if __name__ == "__main__":
    main()
