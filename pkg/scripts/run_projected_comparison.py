"""Krylov-iteration comparison: projected Newton vs secant-updated Tikhonov.

Both methods grow the same bidiagonal subspace; they differ in how the
regularization parameter is driven to the discrepancy level. The tally
of interest is outer (Krylov) iterations and agreement of final alpha.

Usage: python scripts/run_projected_comparison.py [--m 2100] [--n 1500] [--reps 5]
"""

import argparse
import time

from tikmor import (
    GbitConfig,
    PntmConfig,
    StepRule,
    gbit_solve,
    pntm_solve,
    random_uniform_problem,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--m", type=int, default=2100)
    ap.add_argument("--n", type=int, default=1500)
    ap.add_argument("--noise", type=float, default=0.10)
    ap.add_argument("--seed", type=int, default=2000)
    args = ap.parse_args()

    print(f"{'seed':>6s} {'PNTM outer':>11s} {'PNTM inner':>11s} {'GBiT outer':>11s} "
          f"{'alpha PNTM':>12s} {'alpha GBiT':>12s} {'agree':>8s}")
    t0 = time.time()
    for rep in range(args.reps):
        seed = args.seed + rep
        problem = random_uniform_problem(args.m, args.n, args.noise, seed)
        p = pntm_solve(problem, PntmConfig(step_rule=StepRule(variant="case2")))
        g = gbit_solve(problem, GbitConfig())
        agree = abs(p.alpha - g.alpha) / g.alpha
        print(f"{seed:>6d} {p.n_outer:>11d} {p.n_inner_total:>11d} {g.n_outer:>11d} "
              f"{p.alpha:>12.4f} {g.alpha:>12.4f} {agree:>8.2%}")
    print(f"total {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
