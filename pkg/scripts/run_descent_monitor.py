#!/usr/bin/env python3
"""Monitored solver runs with certified theoretical step sizes.

Every checked iteration must satisfy the potential decrease inequality

    phi_t - phi_{t+1} >= ||dx||^2/(4c) + (alpha/2)||A x(y+, z) - b||^2
                         + p/(3 beta) ||dz||^2

and the potential must stay above the exact lower bound of f over the
feasible set (computed by box-face enumeration).

Usage:
    python scripts/run_descent_monitor.py --instances 5 --iters 2000
"""

import argparse
import dataclasses
import time

from sproxalm.constants import plan_stepsizes
from sproxalm.oracles import exact_lower_bound_box_qp
from sproxalm.problem import generate_nonconvex_qp
from sproxalm.solvers import sprox_alm_run


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--instances", type=int, default=5)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--neg-eigs", type=int, default=3)
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--check-every", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1000)
    args = ap.parse_args()

    total_violations = 0
    for i in range(args.instances):
        t0 = time.time()
        inst = generate_nonconvex_qp(n=args.n, m=args.m, neg_eigs=args.neg_eigs,
                                     rng_seed=args.seed + i)
        f_exact, _ = exact_lower_bound_box_qp(inst)
        inst = dataclasses.replace(inst, lower_bound=f_exact, lower_bound_kind="exact")
        params, report = plan_stepsizes(inst, "theoretical",
                                        exact_limit=args.n + 2 * args.n)
        params.max_iters = args.iters
        params.target_eps = 0.0
        params.trace_every = args.check_every
        params.monitor_level = "full"
        res = sprox_alm_run(inst, params)
        mon = res.monitor
        total_violations += mon["phi_monotone_violations"] + mon["lemma34_violations"]
        print(f"[descent] seed={args.seed + i} checks={mon['checks']} "
              f"descent_viol={mon['phi_monotone_violations']} "
              f"lower_bound_viol={mon['lemma34_violations']} "
              f"theta={report.theta_bar:.3e} beta={params.beta:.3e} "
              f"({time.time() - t0:.1f}s)")
    print(f"[descent] total violations: {total_violations}")
    return 0 if total_violations == 0 else 1


if __name__ == "__main__":
    raise SystemExit(main())
