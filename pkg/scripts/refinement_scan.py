#!/usr/bin/env python3
"""Truncation refinement study for a scenario file, printed as a table."""

import argparse

from fragkin import diagnostics as D
from fragkin.config import load_scenario


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("config", help="scenario file")
    p.add_argument("--n-list", default="4,8,16")
    p.add_argument("--window", default=None, help="lo,hi (default: scenario window or [1/n_min, n_min])")
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()

    cfg = load_scenario(args.config)
    ns = [float(v) for v in args.n_list.split(",")]
    window = tuple(float(v) for v in args.window.split(",")) if args.window else (cfg.window or (1 / ns[0], ns[0]))
    table = D.refinement_study(cfg.solver_config(cross_check=False), ns, window, workers=args.threads)

    print(f"window [{window[0]:g}, {window[1]:g}], snapshots at t = {', '.join(f'{t:g}' for t in table.times)}")
    print(f"{'n':>6} {'N1(T)':>12} {'window N1':>12} {'drift':>10}")
    for n, m, w, d in zip(table.ns, table.mass, table.window_mass, table.drift):
        print(f"{n:6g} {m:12.6f} {w:12.6f} {d:10.2e}")
    for (a, b), s in zip(zip(table.ns, table.ns[1:]), table.sup_differences):
        print(f"sup |g_{a:g} - g_{b:g}| on window: {s:.4e}")
    print(f"consecutive differences non-increasing: {table.cauchy}")


if __name__ == "__main__":
    main()
