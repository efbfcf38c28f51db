"""Euclidean projection onto the polyhedral set P.

Boxes project by componentwise clamping (exact).  General halfspace
systems are handled through the concave projection dual

    maximize_{mu >= 0}  -0.5 ||G' mu||^2 + mu'(G x - h),

driven by accelerated projected gradient ascent with fixed step
1 / sigma_max(G)^2; the primal point is recovered as x - G' mu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError
from .problem import Box, Polyhedron


@dataclass
class ProjectionResult:
    point: np.ndarray
    dual_multipliers: np.ndarray | None
    residual: float


def _kkt_residual(G, h, x_proj, mu, h_scale):
    viol = float(np.max(G @ x_proj - h, initial=0.0))
    compl = float(np.sum(np.abs(mu * (G @ x_proj - h))))
    return max(viol / h_scale, compl)


def project(P: Polyhedron, x: np.ndarray, tol: float = 1e-10,
            max_iters: int = 200_000, mu0=None) -> ProjectionResult:
    """Project x onto P to KKT residual <= tol.

    Box projection is exact with residual 0.  For halfspace systems the
    dual ascent terminates once the constraint violation (relative to
    1 + ||h||) and the complementary slackness sum both fall below tol;
    hitting the iteration cap raises ConvergenceError carrying the best
    iterate found.  ``mu0`` optionally warm-starts the dual iteration.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("projection input has non-finite coordinates")

    if isinstance(P, Box):
        return ProjectionResult(point=P.clip(x), dual_multipliers=None, residual=0.0)

    G, h = P.G, P.h
    if G.shape[0] == 0:
        return ProjectionResult(point=x.copy(), dual_multipliers=np.zeros(0), residual=0.0)
    if P.contains(x, tol=0.0):
        return ProjectionResult(point=x.copy(), dual_multipliers=np.zeros(G.shape[0]),
                                residual=0.0)

    h_scale = 1.0 + float(np.linalg.norm(h))
    step = 1.0 / max(P.sigma_max_G ** 2, 1e-300)
    mu = np.zeros(G.shape[0]) if mu0 is None else np.maximum(np.asarray(mu0, dtype=float), 0.0)
    mu_prev = mu.copy()
    theta_prev = 1.0
    best = None
    best_res = np.inf
    for k in range(max_iters):
        theta = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta_prev ** 2))
        w = mu + ((theta_prev - 1.0) / theta) * (mu - mu_prev)
        w = np.maximum(w, 0.0)
        grad = G @ (x - G.T @ w) - h  # dual gradient at w
        mu_next = np.maximum(w + step * grad, 0.0)

        pt = x - G.T @ mu_next
        res = _kkt_residual(G, h, pt, mu_next, h_scale)
        if res < best_res:
            best_res = res
            best = ProjectionResult(point=pt, dual_multipliers=mu_next, residual=res)
        if res <= tol:
            return best
        mu_prev, mu, theta_prev = mu, mu_next, theta
    raise ConvergenceError(
        f"projection did not reach tol={tol} in {max_iters} iterations",
        best=best, residual=best_res,
    )


def project_affine_halfspaces(C1, b1, C2, b2, x, tol: float = 1e-10,
                              max_iters: int = 500_000):
    """Project x onto {u : C1 u <= b1, C2 u = b2} by dual accelerated ascent.

    Returns (point, (mu, y), residual) with mu >= 0 the halfspace
    multipliers and y the equality multipliers.  Intended for systems too
    large for exact active-set enumeration.
    """
    C1 = np.atleast_2d(np.asarray(C1, dtype=float))
    C2 = np.atleast_2d(np.asarray(C2, dtype=float))
    b1 = np.atleast_1d(np.asarray(b1, dtype=float))
    b2 = np.atleast_1d(np.asarray(b2, dtype=float))
    x = np.asarray(x, dtype=float)
    l1, l2 = C1.shape[0], C2.shape[0]
    M = np.vstack([C1, C2]) if l1 and l2 else (C1 if l1 else C2)
    if M.shape[0] == 0:
        return x.copy(), (np.zeros(0), np.zeros(0)), 0.0
    rhs = np.concatenate([b1, b2])
    smax = float(np.linalg.svd(M, compute_uv=False)[0])
    step = 1.0 / max(smax ** 2, 1e-300)
    scale = 1.0 + float(np.linalg.norm(rhs))

    lam = np.zeros(M.shape[0])
    lam_prev = lam.copy()
    theta_prev = 1.0
    best_pt, best_res, best_mul = None, np.inf, None
    for k in range(max_iters):
        theta = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta_prev ** 2))
        w = lam + ((theta_prev - 1.0) / theta) * (lam - lam_prev)
        w[:l1] = np.maximum(w[:l1], 0.0)
        grad = M @ (x - M.T @ w) - rhs
        lam_next = w + step * grad
        lam_next[:l1] = np.maximum(lam_next[:l1], 0.0)

        pt = x - M.T @ lam_next
        r1 = float(np.max(C1 @ pt - b1, initial=0.0)) if l1 else 0.0
        r2 = float(np.max(np.abs(C2 @ pt - b2), initial=0.0)) if l2 else 0.0
        compl = float(np.sum(np.abs(lam_next[:l1] * (C1 @ pt - b1)))) if l1 else 0.0
        res = max(r1 / scale, r2 / scale, compl)
        if res < best_res:
            best_pt, best_res, best_mul = pt, res, lam_next
        if res <= tol:
            return pt, (lam_next[:l1], lam_next[l1:]), res
        lam_prev, lam, theta_prev = lam, lam_next, theta
    raise ConvergenceError(
        f"affine/halfspace projection stalled above tol={tol}",
        best=(best_pt, best_mul), residual=best_res,
    )
