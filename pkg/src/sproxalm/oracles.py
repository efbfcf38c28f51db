"""Exact small-scale solvers used as independent oracles.

Everything here enumerates combinatorial structure (active sets, box
faces) and solves dense KKT systems, so it is exact up to linear-algebra
roundoff but only viable at desk scale.  These routines double as test
oracles for the iterative paths and as the engine of the segment tracer.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .exceptions import InfeasibleError
from .problem import Box, ProblemInstance, QuadraticObjective


@dataclass
class ExactQpSolution:
    x: np.ndarray
    y: np.ndarray       # equality multipliers
    mu: np.ndarray      # inequality multipliers, full length, zeros off the active set
    active: frozenset   # activation pattern used by the KKT solve
    geometry_active: frozenset  # rows with (Gx - h)_j ~ 0 at the solution
    value: float


def solve_qp_active_set(H, c, A, b, G, h, tol: float = 1e-9,
                        try_first=None) -> ExactQpSolution:
    """Exact minimizer of 0.5 x'Hx + c'x over {Ax = b, Gx <= h}, H positive definite.

    Enumerates active subsets of the inequality rows, solving each
    equality-constrained KKT system and accepting the first candidate
    that is primal feasible with nonnegative multipliers.  ``try_first``
    orders a candidate active set ahead of the enumeration (warm start
    across nearby problems).
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float)) if A is not None else np.zeros((0, H.shape[0]))
    b = np.atleast_1d(np.asarray(b, dtype=float)) if b is not None else np.zeros(0)
    G = np.atleast_2d(np.asarray(G, dtype=float)) if G is not None else np.zeros((0, H.shape[0]))
    h = np.atleast_1d(np.asarray(h, dtype=float)) if h is not None else np.zeros(0)
    n, m, l = H.shape[0], A.shape[0], G.shape[0]
    h_scale = 1.0 + float(np.max(np.abs(h), initial=0.0))

    def try_active(S):
        S = sorted(S)
        k = len(S)
        GS = G[S]
        KKT = np.zeros((n + m + k, n + m + k))
        KKT[:n, :n] = H
        KKT[:n, n:n + m] = A.T
        KKT[:n, n + m:] = GS.T
        KKT[n:n + m, :n] = A
        KKT[n + m:, :n] = GS
        rhs = np.concatenate([-c, b, h[S]])
        try:
            sol = np.linalg.solve(KKT, rhs)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(sol)):
            return None
        x = sol[:n]
        y = sol[n:n + m]
        muS = sol[n + m:]
        if l and np.any(G @ x - h > tol * h_scale):
            return None
        if np.any(muS < -tol):
            return None
        mu = np.zeros(l)
        mu[S] = np.maximum(muS, 0.0)
        geo = frozenset(np.flatnonzero(G @ x - h >= -tol * h_scale).tolist()) if l else frozenset()
        val = 0.5 * float(x @ (H @ x)) + float(c @ x)
        return ExactQpSolution(x=x, y=y, mu=mu, active=frozenset(S),
                               geometry_active=geo, value=val)

    candidates = []
    if try_first is not None:
        candidates.append(tuple(sorted(try_first)))
    for k in range(l + 1):
        candidates.extend(combinations(range(l), k))
    seen = set()
    for S in candidates:
        if S in seen:
            continue
        seen.add(S)
        out = try_active(S)
        if out is not None:
            return out
    raise InfeasibleError("no active set yields a feasible KKT point; system may be infeasible")


def project_polyhedron_exact(C1, b1, C2, b2, point, tol: float = 1e-9):
    """Exact Euclidean projection onto {C1 x <= b1, C2 x = b2} via enumeration.

    Returns (projection, distance).  Raises InfeasibleError when the set
    is empty.
    """
    point = np.asarray(point, dtype=float)
    n = point.shape[0]
    sol = solve_qp_active_set(np.eye(n), -point, C2, b2, C1, b1, tol=tol)
    return sol.x, float(np.linalg.norm(sol.x - point))


def solve_constrained_qp_oracle(inst: ProblemInstance, z, p: float,
                                tol: float = 1e-9) -> ExactQpSolution:
    """Exact solution of min f(x) + (p/2)||x-z||^2 over {Ax=b, x in P}.

    Requires a quadratic objective with Q + pI positive definite.
    """
    obj = inst.objective
    if not isinstance(obj, QuadraticObjective):
        raise TypeError("oracle requires a quadratic objective")
    z = np.asarray(z, dtype=float)
    H = obj.Q + p * np.eye(inst.n)
    c = obj.q - p * z
    G, h = inst.polyhedron.as_halfspaces()
    sol = solve_qp_active_set(H, c, inst.eq_matrix, inst.eq_rhs, G, h, tol=tol)
    return sol


def exact_lower_bound_box_qp(inst: ProblemInstance, tol: float = 1e-9):
    """Exact global minimum of an indefinite quadratic over {x in box : Ax = b}.

    Enumerates all box faces; on each face the stationary points of the
    restricted problem are solutions of a linear KKT system, and the
    global minimum over the compact feasible set is attained at one of
    them.  Returns (value, argmin).
    """
    obj = inst.objective
    if not isinstance(obj, QuadraticObjective):
        raise TypeError("oracle requires a quadratic objective")
    P = inst.polyhedron
    if not isinstance(P, Box) or not P.is_finite():
        raise TypeError("oracle requires a finite box polyhedron")
    Q, q = obj.Q, obj.q
    A, b = inst.eq_matrix, inst.eq_rhs
    n, m = inst.n, inst.m
    lo, hi = P.lo, P.hi
    span = 1.0 + float(np.max(hi - lo))

    best_val, best_x = np.inf, None
    for pattern in product((0, 1, 2), repeat=n):  # 0 free, 1 at lo, 2 at hi
        free = [i for i in range(n) if pattern[i] == 0]
        fixed = [i for i in range(n) if pattern[i] != 0]
        xa = np.array([lo[i] if pattern[i] == 1 else hi[i] for i in fixed])
        k = len(free)
        if k == 0:
            x = np.zeros(n)
            x[fixed] = xa
            if np.linalg.norm(A @ x - b) <= tol * (1.0 + np.linalg.norm(b)):
                val = obj.value(x)
                if val < best_val:
                    best_val, best_x = val, x
            continue
        Qff = Q[np.ix_(free, free)]
        Af = A[:, free]
        rhs_top = -(q[free] + (Q[np.ix_(free, fixed)] @ xa if fixed else 0.0))
        rhs_bot = b - (A[:, fixed] @ xa if fixed else 0.0)
        KKT = np.zeros((k + m, k + m))
        KKT[:k, :k] = Qff
        KKT[:k, k:] = Af.T
        KKT[k:, :k] = Af
        rhs = np.concatenate([np.atleast_1d(rhs_top), rhs_bot])
        try:
            sol = np.linalg.solve(KKT, rhs)
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(KKT, rhs, rcond=None)
        # singular systems can pass np.linalg.solve silently; verify residual
        if np.linalg.norm(KKT @ sol - rhs) > 1e-8 * (1.0 + np.linalg.norm(rhs)):
            continue  # no stationary point interior to this face
        xf = sol[:k]
        if np.any(xf < lo[free] - tol * span) or np.any(xf > hi[free] + tol * span):
            continue
        x = np.zeros(n)
        x[free] = np.clip(xf, lo[free], hi[free])
        x[fixed] = xa
        if np.linalg.norm(A @ x - b) > 1e-8 * (1.0 + np.linalg.norm(b)):
            continue
        val = obj.value(x)
        if val < best_val:
            best_val, best_x = val, x
    if best_x is None:
        raise InfeasibleError("no feasible face found; feasible set appears empty")
    return float(best_val), best_x


def enumerate_kkt_points(inst: ProblemInstance, tol: float = 1e-9):
    """All KKT points of a quadratic instance over a box with Ax = b.

    Enumerates box faces; each candidate carries (x, y, mu) with mu the
    multipliers of the active bound rows (sign-checked).  Used as a
    stationarity oracle at desk scale.
    """
    obj = inst.objective
    if not isinstance(obj, QuadraticObjective):
        raise TypeError("oracle requires a quadratic objective")
    P = inst.polyhedron
    if not isinstance(P, Box):
        raise TypeError("oracle requires a box polyhedron")
    Q, q = obj.Q, obj.q
    A, b = inst.eq_matrix, inst.eq_rhs
    n, m = inst.n, inst.m
    lo, hi = P.lo, P.hi
    points = []
    for pattern in product((0, 1, 2), repeat=n):
        free = [i for i in range(n) if pattern[i] == 0]
        fixed = [i for i in range(n) if pattern[i] != 0]
        if any(not np.isfinite(lo[i]) and pattern[i] == 1 for i in range(n)):
            continue
        if any(not np.isfinite(hi[i]) and pattern[i] == 2 for i in range(n)):
            continue
        xa = np.array([lo[i] if pattern[i] == 1 else hi[i] for i in fixed])
        k = len(free)
        KKT = np.zeros((k + m, k + m))
        KKT[:k, :k] = Q[np.ix_(free, free)]
        KKT[:k, k:] = A[:, free].T
        KKT[k:, :k] = A[:, free]
        rhs = np.concatenate([
            np.atleast_1d(-(q[free] + (Q[np.ix_(free, fixed)] @ xa if fixed else 0.0))),
            b - (A[:, fixed] @ xa if fixed else 0.0),
        ])
        try:
            sol = np.linalg.solve(KKT, rhs)
        except np.linalg.LinAlgError:
            continue
        if np.linalg.norm(KKT @ sol - rhs) > 1e-8 * (1.0 + np.linalg.norm(rhs)):
            continue
        xf, y = sol[:k], sol[k:]
        if k and (np.any(xf < lo[free] - tol) or np.any(xf > hi[free] + tol)):
            continue
        x = np.zeros(n)
        if k:
            x[free] = np.clip(xf, lo[free], hi[free])
        x[fixed] = xa
        if np.linalg.norm(A @ x - b) > 1e-8 * (1.0 + np.linalg.norm(b)):
            continue
        # bound multipliers from stationarity on the fixed coordinates:
        # grad f + A'y + mu_hi - mu_lo = 0 componentwise
        g = Q @ x + q + A.T @ y
        ok = True
        mu = np.zeros(n)
        for idx, i in enumerate(fixed):
            if pattern[i] == 1:   # at lower bound: -mu_lo component, needs g_i >= 0
                if g[i] < -tol:
                    ok = False
                    break
                mu[i] = g[i]
            else:                 # at upper bound: needs g_i <= 0
                if g[i] > tol:
                    ok = False
                    break
                mu[i] = -g[i]
        if not ok:
            continue
        points.append((x, y, mu))
    return points
