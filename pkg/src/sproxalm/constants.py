"""Planner for every constant the convergence theory needs.

Spectral quantities, the polyhedral error-bound constant theta_bar
(maximized over full-row-rank submatrices of the stacked multiplier
system), the derived dual error-bound constant sigma5_bar, admissible
step sizes, and the certificate constants B1/B2.

theta_bar enumeration note: the ratio sigma_max^2/sigma_min^4 can only
grow when a row is appended to a full-row-rank submatrix (singular value
interlacing), so the exact maximum over all full-row-rank submatrices is
attained among the rank(M)-row ones.  We enumerate only those, and for
finite two-sided boxes we additionally exploit the signed-unit structure
of the bound rows to compress each candidate to a small equivalent stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .problem import ProblemInstance

_EPS = np.finfo(float).eps
_MAX_EXACT_SUBSETS = 20_000_000


def spectral_norm(M) -> float:
    """Largest singular value, to 1e-10 relative accuracy.

    Uses full SVD up to side 64, deterministic power iteration beyond.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        raise ValueError("spectral_norm of an empty matrix is undefined")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if min(M.shape) <= 64:
        return float(np.linalg.svd(M, compute_uv=False)[0])
    B = M @ M.T if M.shape[0] <= M.shape[1] else M.T @ M
    v = np.ones(B.shape[0]) / np.sqrt(B.shape[0])
    lam = 0.0
    for _ in range(100_000):
        w = B @ v
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(lam_new - lam) <= 1e-12 * max(lam_new, 1e-300):
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))


def build_hoffman_matrix(A, G) -> np.ndarray:
    """Stack [[A', G'], [0, I]] for the multiplier system of the dual error bound."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    if G is None or np.size(G) == 0:
        return A.T.copy()
    G = np.atleast_2d(np.asarray(G, dtype=float))
    l = G.shape[0]
    return np.block([
        [A.T, G.T],
        [np.zeros((l, m)), np.eye(l)],
    ])


def _rank_tol(M) -> float:
    smax = float(np.linalg.svd(M, compute_uv=False)[0]) if min(M.shape) <= 64 else spectral_norm(M)
    return max(M.shape) * _EPS * max(smax, 1.0)


def _theta_from_singular_values(sv, tol):
    """Max ratio over a batch; sv sorted descending per row (numpy svd order)."""
    smax = sv[:, 0]
    smin = sv[:, -1]
    valid = smin > tol
    if not np.any(valid):
        return 0.0
    return float(np.max(smax[valid] ** 2 / smin[valid] ** 4))


def hoffman_theta_exact(M, chunk: int = 20_000) -> float:
    """Exact max of sigma_max^2/sigma_min^4 over full-row-rank row submatrices."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    rows = M.shape[0]
    r = int(np.linalg.matrix_rank(M))
    if r == 0:
        return 0.0
    total = comb(rows, r)
    if total > _MAX_EXACT_SUBSETS:
        raise ValueError(
            f"exact enumeration needs {total} subsets; reduce exact_limit or use sampling"
        )
    tol = _rank_tol(M)
    best = 0.0
    combos = combinations(range(rows), r)
    while True:
        block = []
        for _ in range(chunk):
            c = next(combos, None)
            if c is None:
                break
            block.append(c)
        if not block:
            break
        sv = np.linalg.svd(M[np.asarray(block)], compute_uv=False)
        best = max(best, _theta_from_singular_values(sv, tol))
    return best


def _two_sided_box_rows(G) -> bool:
    """True when G is exactly the signed-identity stack of a finite two-sided box."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    l, n = G.shape
    if l != 2 * n:
        return False
    return bool(np.array_equal(G[:n], np.eye(n)) and np.array_equal(G[n:], -np.eye(n)))


def _box_reduced_singular_values(A_cols, S_top, J_mask, m):
    """Batched compressed representatives of box-structured maximal submatrices.

    Each maximal submatrix [[A'_S, G'_S], [0, I_kept]] shares its nonzero
    singular-value profile with the small stack

        B_red = [[A'_S, E_J, diag(w)], [0, 0, I_d]]

    where E_J holds a unit column per removed bound row and w_i is 1 when
    variable i lost a twin and sqrt(2) otherwise (sign choices are
    orthogonally equivalent).  sigma_min of the original equals
    sigma_min(B_red) because the remaining singular values are all 1.
    """
    Bsz, d = S_top.shape
    k = int(J_mask[0].sum())
    m_cols = m + k + d
    B = np.zeros((Bsz, 2 * d, m_cols))
    B[:, :d, :m] = A_cols[S_top]          # rows of A' for the kept top rows
    idx = np.arange(d)
    w = np.where(J_mask, 1.0, np.sqrt(2.0))
    if k:
        # one unit column per removed bound row, at its variable's position
        rows_pos = np.where(J_mask)[1].reshape(Bsz, k)
        batch = np.repeat(np.arange(Bsz), k)
        B[batch, rows_pos.ravel(), np.tile(m + np.arange(k), Bsz)] = 1.0
    B[:, idx, m + k + idx] = w
    B[:, d + idx, m + k + idx] = 1.0
    return np.linalg.svd(B, compute_uv=False)


def hoffman_theta_exact_box(A, tol: float) -> float:
    """Exact theta for M built from full-row-rank A and a finite two-sided box.

    Valid maximal submatrices keep top rows S_top (|S_top| = m + k) and
    drop one bound row for each of k distinct variables inside S_top;
    the two sign choices give identical singular values.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    A_cols = A.T.copy()   # row i = column i of A
    best = 0.0
    for k in range(0, n - m + 1):
        d = m + k
        tops = np.asarray(list(combinations(range(n), d)), dtype=np.intp)
        masks = np.zeros((comb(d, k), d), dtype=bool)
        for row, sel in enumerate(combinations(range(d), k)):
            masks[row, list(sel)] = True
        S_top = np.repeat(tops, masks.shape[0], axis=0)
        J_mask = np.tile(masks, (tops.shape[0], 1))
        sv = _box_reduced_singular_values(A_cols, S_top, J_mask, m)
        # the compressed stack omits singular values equal to 1; they never
        # attain the extremes since sigma_max >= sqrt(2) and sigma_min <= 1
        best = max(best, _theta_from_singular_values(sv, tol))
    return best


def hoffman_theta_sampled(M, n_samples: int, rng: np.random.Generator,
                          chunk: int = 5_000) -> float:
    """Lower-bound estimate of theta from random rank(M)-row submatrices."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    rows = M.shape[0]
    r = int(np.linalg.matrix_rank(M))
    if r == 0:
        return 0.0
    tol = _rank_tol(M)
    best = 0.0
    done = 0
    while done < n_samples:
        b = min(chunk, n_samples - done)
        keys = rng.random((b, rows))
        idx = np.argsort(keys, axis=1)[:, :r]
        sv = np.linalg.svd(M[idx], compute_uv=False)
        best = max(best, _theta_from_singular_values(sv, tol))
        done += b
    return best


def hoffman_constant(A, G, exact_limit: int = 20, rng_seed: int = 0,
                     min_samples: int = 10_000) -> tuple[float, bool]:
    """Polyhedral error-bound constant theta_bar of the multiplier system.

    Builds M = [[A', G'], [0, I]].  When M has at most ``exact_limit``
    rows the exact maximum over full-row-rank submatrices is returned
    (exact=True); otherwise a randomized lower-bound estimate from at
    least ``min_samples`` sampled submatrices (exact=False).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    M = build_hoffman_matrix(A, G)
    rows = M.shape[0]
    if rows <= exact_limit:
        m = A.shape[0]
        full_row_rank_A = np.linalg.matrix_rank(A) == m
        if G is not None and np.size(G) and _two_sided_box_rows(G) and full_row_rank_A:
            return hoffman_theta_exact_box(A, _rank_tol(M)), True
        return hoffman_theta_exact(M), True
    rng = np.random.default_rng(rng_seed)
    return hoffman_theta_sampled(M, max(min_samples, 10_000), rng), False


# ---------------------------------------------------------------------------
# step-size planning
# ---------------------------------------------------------------------------

MONITOR_LEVELS = ("none", "cheap", "full")


@dataclass
class SolverParams:
    """Algorithm parameters plus run budget.

    ``prox_factor`` selects the certificate's proximal coefficient:
    1 matches the projected-gradient step as implemented, 2 the
    alternative prox-weight convention (kept for fidelity testing).
    """

    rho: float
    p: float
    c: float
    alpha: float
    beta: float
    max_iters: int = 1000
    target_eps: float = 1e-6
    trace_every: int = 1
    monitor_level: str = "none"
    prox_factor: int = 1

    def __post_init__(self):
        if self.monitor_level not in MONITOR_LEVELS:
            raise ValueError(f"monitor_level must be one of {MONITOR_LEVELS}")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if min(self.rho, self.p, self.c, self.alpha) <= 0:
            raise ValueError("rho, p, c, alpha must be positive")
        if self.prox_factor not in (1, 2):
            raise ValueError("prox_factor must be 1 or 2")

    def check_against(self, inst: ProblemInstance):
        L = inst.lipschitz_grad + self.rho * inst.sigma_max_A ** 2 + self.p
        if not self.c < 1.0 / L:
            raise ValueError(f"c={self.c} violates c < 1/(L_f + rho*smax(A)^2 + p) = {1.0 / L}")


@dataclass
class ConstantsReport:
    sigma_max_A: float
    L_f: float
    rho: float
    p: float
    L: float
    gamma_K: float
    sigma1: float
    sigma2: float
    sigma3: float
    sigma4: float
    theta_bar: float
    theta_exact: bool
    sigma5_bar: float
    c_max: float
    alpha_max: float
    beta_max: float
    B1: float
    B2: float
    mode: str
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "sigma_max_A", "L_f", "rho", "p", "L", "gamma_K",
            "sigma1", "sigma2", "sigma3", "sigma4",
            "theta_bar", "theta_exact", "sigma5_bar",
            "c_max", "alpha_max", "beta_max", "B1", "B2", "mode",
        )}
        out["warnings"] = list(self.warnings)
        return out


def sigma5_from_theta(theta_bar: float, L: float, gamma: float) -> float:
    """Global dual error-bound constant sqrt(2)(theta*L^2 + 1)/gamma."""
    return float(np.sqrt(2.0) * (theta_bar * L ** 2 + 1.0) / gamma)


def plan_stepsizes(inst: ProblemInstance, mode: str, overrides: dict | None = None,
                   exact_limit: int = 20, rng_seed: int = 0):
    """Derive (SolverParams, ConstantsReport) for an instance.

    theoretical mode takes 0.99 of every strict admissibility bound
    (p = 3 L_f, rho = L_f, c, alpha, and beta through the certified
    sigma5_bar).  practical mode keeps c but relaxes beta to
    min(1/30, 0.01), which carries no convergence guarantee and is
    flagged as such.  Overrides replace individual values; in
    theoretical mode they are validated against the strict bounds.
    """
    if mode not in ("theoretical", "practical"):
        raise ValueError("mode must be 'theoretical' or 'practical'")
    overrides = dict(overrides or {})
    unknown = set(overrides) - {"rho", "p", "c", "alpha", "beta"}
    if unknown:
        raise ValueError(f"unknown override keys: {sorted(unknown)}")
    warnings = []

    L_f = inst.lipschitz_grad
    smaxA = inst.sigma_max_A
    p = float(overrides.get("p", 3.0 * L_f))
    rho = float(overrides.get("rho", L_f))
    if p <= L_f:
        raise ValueError("p must exceed L_f for the proximal term to convexify")
    if mode == "theoretical" and p < 3.0 * L_f - 1e-15:
        raise ValueError("theoretical mode requires p >= 3*L_f")

    L = L_f + rho * smaxA ** 2 + p
    gamma_K = p - L_f
    c_max = 1.0 / L
    c = float(overrides.get("c", 0.99 * c_max))
    if not 0 < c < c_max:
        raise ValueError(f"c must satisfy 0 < c < {c_max} strictly (got {c})")

    alpha_max = c * gamma_K ** 2 / (4.0 * smaxA ** 2) if smaxA > 0 else np.inf
    default_alpha = (0.99 if mode == "theoretical" else 0.9) * alpha_max
    if not np.isfinite(default_alpha):
        default_alpha = 1.0
    alpha = float(overrides.get("alpha", default_alpha))
    if mode == "theoretical" and not alpha < alpha_max:
        raise ValueError(f"alpha must be strictly below {alpha_max} (got {alpha})")
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    G, _h = inst.polyhedron.as_halfspaces()
    theta_bar, theta_exact = hoffman_constant(inst.eq_matrix, G, exact_limit=exact_limit,
                                              rng_seed=rng_seed)
    sigma5_bar = sigma5_from_theta(theta_bar, L, gamma_K)
    beta_max = float(min(1.0 / 30.0, alpha / (12.0 * p * sigma5_bar ** 2)))

    if mode == "theoretical":
        if not theta_exact:
            warnings.append(
                "theta_bar is a sampled lower bound; the beta bound is not certified"
            )
        beta = float(overrides.get("beta", 0.99 * beta_max))
        if not 0 < beta < beta_max:
            raise ValueError(f"beta must satisfy 0 < beta < {beta_max} strictly (got {beta})")
    else:
        beta = float(overrides.get("beta", min(1.0 / 30.0, 0.01)))
        if not 0 < beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        warnings.append("practical beta carries no theoretical guarantee")

    sigma1 = c * gamma_K
    sigma2 = sigma1 / (1.0 + sigma1)
    sigma3 = gamma_K / smaxA if smaxA > 0 else np.inf
    sigma4 = gamma_K / p
    B1 = (1.0 + smaxA * (1.0 + c * gamma_K) / (c * gamma_K)) ** 2
    B2 = ((L_f + p + rho * smaxA ** 2 + 2.0 / c) + rho * smaxA * np.sqrt(B1) + p) ** 2

    report = ConstantsReport(
        sigma_max_A=smaxA, L_f=L_f, rho=rho, p=p, L=L, gamma_K=gamma_K,
        sigma1=sigma1, sigma2=sigma2, sigma3=sigma3, sigma4=sigma4,
        theta_bar=theta_bar, theta_exact=theta_exact, sigma5_bar=sigma5_bar,
        c_max=c_max, alpha_max=alpha_max, beta_max=beta_max,
        B1=float(B1), B2=float(B2), mode=mode, warnings=warnings,
    )
    params = SolverParams(rho=rho, p=p, c=c, alpha=alpha, beta=beta)
    params.check_against(inst)
    return params, report
