"""Iterative methods: the smoothed proximal augmented Lagrangian loop,
the classical augmented Lagrangian baseline, and the inner strongly
convex solves both of them rely on.

Notation used throughout: the augmented Lagrangian is

    L_rho(x; y) = f(x) + y'(Ax - b) + (rho/2)||Ax - b||^2,

and the smoothed surrogate adds a proximal anchor z:

    K(x, z; y) = L_rho(x; y) + (p/2)||x - z||^2,

which is strongly convex in x with modulus p - L_f whenever p > L_f.
One outer iteration of the smoothed method performs, in order, a dual
gradient step on y, a single projected gradient step on K in x, and an
exponential-averaging update of z.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .constants import SolverParams
from .exceptions import ConvergenceError, DivergenceError
from .problem import Box, ProblemInstance, QuadraticObjective
from .projection import project

_GUARD = 1e12


@dataclass
class IterateState:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    t: int = 0

    def copy(self) -> "IterateState":
        return IterateState(self.x.copy(), self.y.copy(), self.z.copy(), self.t)


@dataclass
class TraceRow:
    t: int
    f_value: float
    eq_residual: float
    cert_norm: float
    dx: float
    dz: float
    phi: float
    phi_ok: float

    @property
    def eps(self) -> float:
        return max(self.eq_residual, self.cert_norm)


class Trace:
    """Column-major iteration trace with CSV export.

    Row convention: the row recorded at step index t describes the state
    after the update t -> t+1: f and the equality residual are evaluated
    at x^{t+1}, cert_norm is the proof certificate of the pair
    (x^{t+1}, y^{t+1}), and dx/dz are the step norms.  phi is the
    potential at the pre-step state (NaN unless monitored).
    """

    COLUMNS = ("t", "f", "eq_res", "cert_norm", "dx", "dz", "phi", "phi_ok")

    def __init__(self, capacity: int = 1024):
        self._n = 0
        self._data = np.empty((max(capacity, 16), 8))

    def __len__(self) -> int:
        return self._n

    def _grow(self):
        data = np.empty((2 * self._data.shape[0], 8))
        data[: self._n] = self._data[: self._n]
        self._data = data

    def append(self, t, f, eq_res, cert_norm, dx, dz, phi=np.nan, phi_ok=np.nan):
        if self._n == self._data.shape[0]:
            self._grow()
        self._data[self._n] = (t, f, eq_res, cert_norm, dx, dz, phi, phi_ok)
        self._n += 1

    def column(self, name: str) -> np.ndarray:
        return self._data[: self._n, self.COLUMNS.index(name)].copy()

    def row(self, i: int) -> TraceRow:
        t, f, eq, cert, dx, dz, phi, ok = self._data[i if i >= 0 else self._n + i]
        return TraceRow(int(t), f, eq, cert, dx, dz, phi, ok)

    def best_so_far_eps(self) -> np.ndarray:
        eps = np.maximum(self.column("eq_res"), self.column("cert_norm"))
        return np.minimum.accumulate(eps)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for i in range(self._n):
                t, f, eq, cert, dx, dz, phi, ok = self._data[i]
                phi_s = "" if np.isnan(phi) else repr(float(phi))
                ok_s = "" if np.isnan(ok) else str(int(ok))
                w.writerow([int(t), repr(float(f)), repr(float(eq)), repr(float(cert)),
                            repr(float(dx)), repr(float(dz)), phi_s, ok_s])

    @classmethod
    def from_arrays(cls, t, eq_res, cert_norm, f=None, dx=None, dz=None) -> "Trace":
        t = np.asarray(t)
        n = len(t)
        tr = cls(capacity=n)
        zeros = np.zeros(n)
        f = zeros if f is None else np.asarray(f)
        dx = zeros if dx is None else np.asarray(dx)
        dz = zeros if dz is None else np.asarray(dz)
        for i in range(n):
            tr.append(t[i], f[i], eq_res[i], cert_norm[i], dx[i], dz[i])
        return tr


def _lipschitz_K(inst: ProblemInstance, params: SolverParams) -> float:
    return inst.lipschitz_grad + params.rho * inst.sigma_max_A ** 2 + params.p


def _proj_tol(outer_tol: float) -> float:
    """Projection tolerance tied to the outer tolerance, floored so a zero
    target (run-to-budget mode) still yields a positive tolerance."""
    if outer_tol <= 0:
        return 1e-10
    return max(min(1e-10, outer_tol * 1e-3), 1e-14)


def _proj(inst: ProblemInstance, x, tol):
    P = inst.polyhedron
    if isinstance(P, Box):
        return np.clip(x, P.lo, P.hi)
    return project(P, x, tol=tol).point


class _WarmProjector:
    """Projection onto the instance's polyhedron that carries its dual
    multipliers between calls; consecutive solver iterates are close, so
    warm duals cut the iterative projection cost by an order of magnitude.
    Results are identical to cold projections within the tolerance."""

    def __init__(self, inst: ProblemInstance, tol: float):
        self.P = inst.polyhedron
        self.tol = tol
        self._mu = None
        self._is_box = isinstance(self.P, Box)

    def __call__(self, x):
        if self._is_box:
            return np.clip(x, self.P.lo, self.P.hi)
        res = project(self.P, x, tol=self.tol, mu0=self._mu)
        self._mu = res.dual_multipliers
        return res.point


def inner_minimize_K(inst: ProblemInstance, y, z, params: SolverParams,
                     tol: float = 1e-10, x0=None, max_iters: int = 1_000_000):
    """argmin_{x in P} K(x, z; y) by projected gradient with step 1/L.

    Terminates when the scaled fixed-point residual
    L * ||x - proj(x - grad K(x)/L)|| drops below tol; the returned point
    is the one at which that residual was measured.
    """
    if params.p <= inst.lipschitz_grad:
        raise ValueError("inner solve requires p > L_f (strong convexity)")
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    A, b = inst.eq_matrix, inst.eq_rhs
    rho, p = params.rho, params.p
    L = _lipschitz_K(inst, params)
    step = 1.0 / L
    proj_tol = _proj_tol(tol)

    lin = A.T @ y - p * z  # constant part of grad K besides grad f and the A'(Ax-b) term
    proj = _WarmProjector(inst, proj_tol)
    x = proj(z.copy() if x0 is None else np.asarray(x0, dtype=float))
    for _ in range(max_iters):
        g = inst.grad_f(x) + lin + rho * (A.T @ (A @ x - b)) + p * x
        x_new = proj(x - step * g)
        res = L * float(np.linalg.norm(x - x_new))
        if res <= tol:
            return x
        x = x_new
    raise ConvergenceError("inner projected gradient hit the iteration cap", best=x,
                           residual=res)


@dataclass
class ProxSolution:
    """Solution of min f(x) + (p/2)||x-z||^2 over {Ax = b, x in P}."""

    x: np.ndarray
    value: float
    y: np.ndarray
    eq_residual: float
    outer_iters: int

    def __iter__(self):  # supports `x, value = solve_constrained_strongly_convex(...)`
        return iter((self.x, self.value))


def solve_constrained_strongly_convex(inst: ProblemInstance, z, params: SolverParams,
                                      tol: float = 1e-10, x0=None, y0=None,
                                      max_outer: int = 2000) -> ProxSolution:
    """Equality-constrained proximal subproblem solved by the classical
    augmented Lagrangian loop with strongly convex inner solves.

    The inner objective g(x) + y'(Ax-b) + (rho_in/2)||Ax-b||^2 with
    g = f + (p/2)||.-z||^2 keeps modulus p - L_f for any penalty, so each
    inner solve is a plain projected-gradient run; the penalty is doubled
    when feasibility stalls.
    """
    if params.p <= inst.lipschitz_grad:
        raise ValueError("requires p > L_f")
    z = np.asarray(z, dtype=float)
    A, b = inst.eq_matrix, inst.eq_rhs
    p = params.p
    gamma = p - inst.lipschitz_grad
    rho_in = max(params.rho, gamma)
    proj_tol = _proj_tol(tol)
    smaxA2 = inst.sigma_max_A ** 2

    y = np.zeros(inst.m) if y0 is None else np.asarray(y0, dtype=float).copy()
    proj = _WarmProjector(inst, proj_tol)
    x = proj(z.copy() if x0 is None else np.asarray(x0, dtype=float))
    prev_feas = np.inf
    b_scale = 1.0 + float(np.linalg.norm(b))
    for outer in range(max_outer):
        L_in = inst.lipschitz_grad + p + rho_in * smaxA2
        step = 1.0 / L_in
        lin = A.T @ y - p * z
        inner_res = np.inf
        for _ in range(200_000):
            g = inst.grad_f(x) + lin + rho_in * (A.T @ (A @ x - b)) + p * x
            x_new = proj(x - step * g)
            inner_res = L_in * float(np.linalg.norm(x - x_new))
            if inner_res <= tol:
                break
            x = x_new
        r = A @ x - b
        feas = float(np.linalg.norm(r))
        if feas <= tol * b_scale and inner_res <= tol:
            # augmented dual value: second-order accurate in the residual,
            # a plain g(x) evaluation would carry first-order error
            value = (inst.f(x) + 0.5 * p * float(np.dot(x - z, x - z))
                     + float(y @ r) + 0.5 * rho_in * float(r @ r))
            return ProxSolution(x=x, value=value, y=y, eq_residual=feas,
                                outer_iters=outer + 1)
        y = y + rho_in * r
        if float(np.linalg.norm(y)) > _GUARD:
            raise DivergenceError("multiplier divergence in the proximal subproblem",
                                  state=IterateState(x, y, z, outer))
        if feas > 0.5 * prev_feas:
            rho_in = min(rho_in * 2.0, 1e10)
        prev_feas = feas
    raise ConvergenceError("proximal subproblem ALM hit the outer iteration cap",
                           best=ProxSolution(x, inst.f(x) + 0.5 * p * float(np.dot(x - z, x - z)),
                                             y, feas, max_outer),
                           residual=feas)


@dataclass
class AlmResult:
    state: IterateState
    trace: Trace
    heuristic: bool
    converged: bool


def _is_inner_strongly_convex(inst: ProblemInstance, rho: float) -> bool:
    if not isinstance(inst.objective, QuadraticObjective):
        return False
    H = inst.objective.Q + rho * (inst.eq_matrix.T @ inst.eq_matrix)
    return float(np.linalg.eigvalsh(0.5 * (H + H.T))[0]) > 1e-12


def alm_run(inst: ProblemInstance, params: SolverParams, x0=None, y0=None,
            tol: float | None = None, max_outer: int | None = None) -> AlmResult:
    """Classical augmented Lagrangian iteration (exact-minimization form).

    Each outer step minimizes L_rho(.; y) over P, then updates
    y <- y + rho (Ax - b).  When the inner problem is not strongly convex
    the inner solve is a projected-gradient run to a stationary point and
    the result is flagged heuristic.  Multiplier norms beyond 1e12 raise
    DivergenceError (the nonconvex baseline may diverge).

    Trace note: the cert_norm column holds the inner fixed-point residual,
    which bounds the certificate available at (x, y + rho(Ax-b)) after the
    multiplier update absorbs the penalty gradient.
    """
    tol = params.target_eps if tol is None else tol
    max_outer = params.max_iters if max_outer is None else max_outer
    A, b = inst.eq_matrix, inst.eq_rhs
    rho = params.rho
    heuristic = not _is_inner_strongly_convex(inst, rho)
    proj_tol = _proj_tol(tol)

    # crude step bound for the inner loop; for quadratics the exact curvature
    if isinstance(inst.objective, QuadraticObjective):
        H = inst.objective.Q + rho * (A.T @ A)
        L_in = float(np.linalg.eigvalsh(0.5 * (H + H.T))[-1])
    else:
        L_in = inst.lipschitz_grad + rho * inst.sigma_max_A ** 2
    step = 1.0 / max(L_in, 1e-12)

    y = np.zeros(inst.m) if y0 is None else np.asarray(y0, dtype=float).copy()
    proj = _WarmProjector(inst, proj_tol)
    x = proj(np.zeros(inst.n) if x0 is None else np.asarray(x0, dtype=float))
    trace = Trace(capacity=max_outer + 1)
    b_scale = 1.0 + float(np.linalg.norm(b))
    converged = False
    for t in range(max_outer):
        x_prev = x.copy()
        lin = A.T @ y
        inner_res = np.inf
        for _ in range(200_000):
            g = inst.grad_f(x) + lin + rho * (A.T @ (A @ x - b))
            x_new = proj(x - step * g)
            inner_res = L_in * float(np.linalg.norm(x - x_new))
            if inner_res <= tol:
                break
            x = x_new
        r = A @ x - b
        feas = float(np.linalg.norm(r))
        y = y + rho * r
        if float(np.linalg.norm(y)) > _GUARD or float(np.linalg.norm(x)) > _GUARD:
            raise DivergenceError("ALM divergence (multiplier or iterate blow-up)",
                                  state=IterateState(x, y, x.copy(), t))
        trace.append(t, inst.f(x), feas, inner_res,
                     float(np.linalg.norm(x - x_prev)), 0.0)
        if feas <= tol * b_scale and inner_res <= tol:
            converged = True
            break
    return AlmResult(state=IterateState(x, y, x.copy(), t + 1), trace=trace,
                     heuristic=heuristic, converged=converged)


def grad_K(inst: ProblemInstance, x, z, y, params: SolverParams, grad_f_x=None):
    """grad_x K(x, z; y) = grad f(x) + A'y + rho A'(Ax-b) + p(x-z)."""
    A, b = inst.eq_matrix, inst.eq_rhs
    g = inst.grad_f(x) if grad_f_x is None else grad_f_x
    return g + A.T @ y + params.rho * (A.T @ (A @ x - b)) + params.p * (x - z)


def K_value(inst: ProblemInstance, x, z, y, params: SolverParams) -> float:
    r = inst.eq_matrix @ x - inst.eq_rhs
    return (inst.f(x) + float(y @ r) + 0.5 * params.rho * float(r @ r)
            + 0.5 * params.p * float(np.dot(x - z, x - z)))


def sprox_alm_step(inst: ProblemInstance, state: IterateState,
                   params: SolverParams) -> IterateState:
    """One outer iteration: dual ascent on y, projected gradient step on
    K in x, exponential averaging of z, exactly in that order."""
    x, y, z = state.x, state.y, state.z
    if x.shape[0] != inst.n or y.shape[0] != inst.m:
        raise ValueError("state dimensions do not match the instance")
    A, b = inst.eq_matrix, inst.eq_rhs
    y1 = y + params.alpha * (A @ x - b)
    g = grad_K(inst, x, z, y1, params)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite gradient in the primal step")
    x1 = _proj(inst, x - params.c * g, _proj_tol(params.target_eps))
    z1 = z + params.beta * (x1 - z)
    return IterateState(x=x1, y=y1, z=z1, t=state.t + 1)


def proof_certificate_vector(inst: ProblemInstance, x_prev, x_next, z_prev,
                             params: SolverParams, grad_prev=None, grad_next=None):
    """Certificate v lying in grad f(x+) + A'y+ + subdifferential of the
    indicator of P, assembled from one step's displacement:

        v = [grad f(x+) - grad f(x)] + (rho A'A + pI)(x+ - x)
            - (prox_factor/c)(x+ - x) - rho A'(Ax+ - b) - p(x+ - z).
    """
    A, b = inst.eq_matrix, inst.eq_rhs
    gp = inst.grad_f(x_prev) if grad_prev is None else grad_prev
    gn = inst.grad_f(x_next) if grad_next is None else grad_next
    dx = x_next - x_prev
    return (gn - gp + params.rho * (A.T @ (A @ dx)) + params.p * dx
            - (params.prox_factor / params.c) * dx
            - params.rho * (A.T @ (A @ x_next - b)) - params.p * (x_next - z_prev))


@dataclass
class BestCertificate:
    t: int
    x: np.ndarray
    y: np.ndarray
    cert_norm: float
    eq_residual: float

    @property
    def eps(self) -> float:
        return max(self.cert_norm, self.eq_residual)


@dataclass
class SproxResult:
    state: IterateState
    trace: Trace
    best: BestCertificate | None
    monitor: dict


def sprox_alm_run(inst: ProblemInstance, params: SolverParams,
                  x0=None, y0=None, z0=None) -> SproxResult:
    """Run the smoothed proximal augmented Lagrangian method.

    Defaults: x0 = projection of the origin onto P, z0 = x0, y0 = 0.
    Stops at max_iters or when max(||v||, ||Ax-b||) for the current pair
    reaches target_eps.  The best pair seen (smallest max of the two
    residuals) is returned alongside the final state; with
    monitor_level="full" the potential decrease and lower-bound checks
    run every trace_every iterations and their violation counts land in
    the monitor dict.
    """
    A, b = inst.eq_matrix, inst.eq_rhs
    proj_tol = _proj_tol(params.target_eps)
    proj = _WarmProjector(inst, proj_tol)
    x = proj(np.zeros(inst.n) if x0 is None else np.asarray(x0, dtype=float))
    z = x.copy() if z0 is None else np.asarray(z0, dtype=float).copy()
    y = np.zeros(inst.m) if y0 is None else np.asarray(y0, dtype=float).copy()

    monitor = {
        "phi_monotone_violations": 0,
        "lemma34_violations": 0,
        "step_error_bound_violations": 0,
        "checks": 0,
    }
    mon_ctx = None
    if params.monitor_level == "full":
        from .diagnostics import MonitorContext

        mon_ctx = MonitorContext(inst, params)

    trace = Trace(capacity=min(params.max_iters, 1 << 20) + 1)
    best = None
    gx = inst.grad_f(x)
    rho, p, c, alpha, beta = params.rho, params.p, params.c, params.alpha, params.beta
    fac = params.prox_factor
    state_t = 0
    for t in range(params.max_iters):
        r = A @ x - b
        y1 = y + alpha * r
        g = gx + A.T @ y1 + rho * (A.T @ r) + p * (x - z)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient at iteration {t}")
        x1 = proj(x - c * g)
        z1 = z + beta * (x1 - z)
        gx1 = inst.grad_f(x1)

        dx = x1 - x
        r1 = A @ x1 - b
        v = (gx1 - gx + rho * (A.T @ (A @ dx)) + p * dx - (fac / c) * dx
             - rho * (A.T @ r1) - p * (x1 - z))
        cert = float(np.linalg.norm(v))
        eq1 = float(np.linalg.norm(r1))
        eps_t = max(cert, eq1)
        if best is None or eps_t < best.eps:
            best = BestCertificate(t=t, x=x1.copy(), y=y1.copy(),
                                   cert_norm=cert, eq_residual=eq1)

        if float(np.linalg.norm(y1)) > _GUARD or float(np.linalg.norm(x1)) > _GUARD:
            raise DivergenceError("iterate or multiplier blow-up",
                                  state=IterateState(x1, y1, z1, t + 1))

        emit = (t % params.trace_every == 0) or (t == params.max_iters - 1)
        phi_val, phi_ok = np.nan, np.nan
        if emit and mon_ctx is not None:
            checks = mon_ctx.check_step(
                IterateState(x, y, z, t), IterateState(x1, y1, z1, t + 1),
                dx_norm=float(np.linalg.norm(dx)),
            )
            phi_val, phi_ok = checks["phi"], float(checks["descent_ok"])
            monitor["checks"] += 1
            monitor["phi_monotone_violations"] += int(not checks["descent_ok"])
            if checks["lower_bound_ok"] is not None:
                monitor["lemma34_violations"] += int(not checks["lower_bound_ok"])
            monitor["step_error_bound_violations"] += int(not checks["step_error_bound_ok"])
        if emit:
            trace.append(t, inst.f(x1), eq1, cert, float(np.linalg.norm(dx)),
                         float(np.linalg.norm(z1 - z)), phi_val, phi_ok)

        x, y, z, gx = x1, y1, z1, gx1
        state_t = t + 1
        if eps_t <= params.target_eps:
            break
    return SproxResult(state=IterateState(x, y, z, state_t), trace=trace,
                       best=best, monitor=monitor)
