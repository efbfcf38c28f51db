#!/usr/bin/env python3
"""Sweep of the dual error-bound and polyhedral distance-bound verifiers.

For each generated instance the sampled ratio ||x(y,z) - xbar*(z)|| /
||A x(y,z) - b|| is compared against the computed constant sigma5_bar
(exact Hoffman enumeration), and random small polyhedral systems are
checked against dist(x, S)^2 <= theta * residual^2.

Usage:
    python scripts/verify_error_bounds.py --instances 4 --samples 100
"""

import argparse

import numpy as np

from sproxalm.constants import hoffman_theta_exact, plan_stepsizes
from sproxalm.diagnostics import verify_dual_error_bound, verify_hoffman
from sproxalm.problem import generate_nonconvex_qp


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--instances", type=int, default=4)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--systems", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    failures = 0
    for i in range(args.instances):
        inst = generate_nonconvex_qp(n=5, m=2, neg_eigs=2, rng_seed=args.seed + i)
        params, report = plan_stepsizes(inst, "theoretical", exact_limit=15)
        out = verify_dual_error_bound(inst, params, n_samples=args.samples,
                                      rng_seed=args.seed + i,
                                      sigma5_bar=report.sigma5_bar)
        print(f"[eb] seed={args.seed + i} max_ratio={out.max_ratio:.4g} "
              f"bound={out.bound:.4g} violations={out.violations} "
              f"skipped={out.skipped}")
        failures += out.violations

    rng = np.random.default_rng(args.seed)
    for i in range(args.systems):
        n = int(rng.integers(1, 5))
        n_ineq = int(rng.integers(0, 4))
        n_eq = int(rng.integers(0 if n_ineq else 1, 3))
        x0 = rng.standard_normal(n)
        C1 = rng.standard_normal((n_ineq, n)) if n_ineq else np.zeros((0, n))
        b1 = C1 @ x0 + rng.uniform(0, 1, n_ineq) if n_ineq else np.zeros(0)
        C2 = rng.standard_normal((n_eq, n)) if n_eq else np.zeros((0, n))
        b2 = C2 @ x0 if n_eq else np.zeros(0)
        theta = hoffman_theta_exact(np.vstack([C2, C1]))
        out = verify_hoffman(C1, b1, C2, b2, theta, n_points=40,
                             rng_seed=args.seed + 100 + i)
        if not out.passed:
            failures += 1
            print(f"[hoffman] system {i}: VIOLATION (theta={theta:.4g})")
    print(f"[verify] total failures: {failures}")
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    raise SystemExit(main())
