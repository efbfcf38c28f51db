#!/usr/bin/env python3
"""Iteration-complexity benchmark over a family of random nonconvex QPs.

Runs the smoothed proximal ALM in practical mode on generated instances,
fits the decay rate of the best-so-far stationarity residual, and checks
that the envelope constant sup_t t*eps(t)^2 is uniform across the family
(every instance within 3x of the family median).

Usage:
    python scripts/run_rate_benchmark.py --instances 20 --n 20 --m 5 \
        --iters 100000 --out rate_summary.json
"""

import argparse
import json
import time

import numpy as np

from sproxalm.bench import fit_rate
from sproxalm.constants import plan_stepsizes
from sproxalm.problem import generate_nonconvex_qp
from sproxalm.solvers import sprox_alm_run


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--m", type=int, default=5)
    ap.add_argument("--neg-eigs", type=int, default=5)
    ap.add_argument("--iters", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=5000)
    ap.add_argument("--slope-threshold", type=float, default=-0.4)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    rows = []
    t_start = time.time()
    for i in range(args.instances):
        inst = generate_nonconvex_qp(n=args.n, m=args.m, neg_eigs=args.neg_eigs,
                                     rng_seed=args.seed + i)
        params, report = plan_stepsizes(inst, "practical")
        params.max_iters = args.iters
        params.target_eps = 0.0
        res = sprox_alm_run(inst, params)
        fit = fit_rate(res.trace)
        rows.append({
            "seed": args.seed + i,
            "slope": fit.slope,
            "r_squared": fit.r_squared,
            "predicted_B": fit.predicted_B,
            "max_tB": fit.max_tB,
            "best_eps": res.best.eps,
        })
        print(f"[rate] seed={args.seed + i} slope={fit.slope:.3f} "
              f"best_eps={res.best.eps:.3e} max_tB={fit.max_tB:.3e}")

    slopes = np.array([r["slope"] for r in rows], dtype=float)
    max_tBs = np.array([r["max_tB"] for r in rows])
    n_ok = int(np.sum(slopes <= args.slope_threshold))
    family_ratio = float(np.max(max_tBs) / np.median(max_tBs))
    summary = {
        "instances": args.instances,
        "slope_ok": n_ok,
        "worst_slope": float(slopes.max()),
        "family_max_over_median_tB": family_ratio,
        "elapsed_s": time.time() - t_start,
        "runs": rows,
    }
    print(f"[rate] slopes <= {args.slope_threshold} on {n_ok}/{args.instances}; "
          f"family max/median of sup_t t*eps^2 = {family_ratio:.2f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(summary, fh, indent=1)
        print(f"[rate] wrote {args.out}")
    ok = n_ok >= int(np.ceil(0.9 * args.instances)) and family_ratio <= 3.0
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
