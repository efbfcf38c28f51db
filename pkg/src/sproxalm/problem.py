"""Problem instances: objectives, polyhedral feasible sets, validation, generators.

The problem class is

    minimize f(x)  subject to  A x = b,  x in P,

with P either an axis-aligned box (possibly unbounded) or a general
halfspace system ``G x <= h``.  Objectives expose value and gradient
oracles plus a declared Lipschitz constant of the gradient.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import DimensionMismatchError

_EPS = np.finfo(float).eps


@dataclass
class QuadraticObjective:
    """f(x) = 0.5 x'Qx + q'x + offset with gradient Qx + q.

    Q may be indefinite; the tight gradient Lipschitz constant is the
    spectral norm of Q.
    """

    Q: np.ndarray
    q: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.offset = float(self.offset)

    def value(self, x):
        return 0.5 * float(x @ (self.Q @ x)) + float(self.q @ x) + self.offset

    def grad(self, x):
        return self.Q @ x + self.q

    def tight_lipschitz(self) -> float:
        """Spectral norm of Q (the exact Lipschitz constant of the gradient)."""
        if self.Q.size == 0:
            return 0.0
        return float(np.linalg.svd(self.Q, compute_uv=False)[0])


@dataclass
class Box:
    """Axis-aligned box lo <= x <= hi; entries may be +-inf."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.lo.shape != self.hi.shape:
            raise DimensionMismatchError("box lo/hi shapes differ")
        if np.any(self.lo > self.hi):
            raise ValueError("box requires lo <= hi componentwise")

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def clip(self, x):
        return np.clip(x, self.lo, self.hi)

    def contains(self, x, tol=1e-9) -> bool:
        scale = 1.0 + float(np.max(np.abs(np.where(np.isfinite(self.hi), self.hi, 0.0)), initial=0.0))
        return bool(np.all(x >= self.lo - tol * scale) and np.all(x <= self.hi + tol * scale))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def as_halfspaces(self):
        """Finite bounds as rows of (G, h); infinite bounds contribute no row."""
        n = self.dim
        rows, rhs = [], []
        for i in range(n):
            if np.isfinite(self.hi[i]):
                e = np.zeros(n)
                e[i] = 1.0
                rows.append(e)
                rhs.append(self.hi[i])
        for i in range(n):
            if np.isfinite(self.lo[i]):
                e = np.zeros(n)
                e[i] = -1.0
                rows.append(e)
                rhs.append(-self.lo[i])
        if not rows:
            return np.zeros((0, n)), np.zeros(0)
        return np.vstack(rows), np.asarray(rhs, dtype=float)


@dataclass
class Halfspaces:
    """General polyhedron {x : G x <= h}."""

    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
        self.h = np.atleast_1d(np.asarray(self.h, dtype=float))
        if self.G.shape[0] != self.h.shape[0]:
            raise DimensionMismatchError("G row count does not match h length")

    @property
    def dim(self) -> int:
        return self.G.shape[1]

    def contains(self, x, tol=1e-9) -> bool:
        scale = 1.0 + float(np.max(np.abs(self.h), initial=0.0))
        return bool(np.all(self.G @ x - self.h <= tol * scale))

    def as_halfspaces(self):
        return self.G, self.h

    @cached_property
    def sigma_max_G(self) -> float:
        if self.G.size == 0:
            return 0.0
        return float(np.linalg.svd(self.G, compute_uv=False)[0])


Polyhedron = Box | Halfspaces


@dataclass
class ProblemInstance:
    """A linearly constrained smooth instance with a declared gradient Lipschitz constant.

    ``lower_bound`` is a lower bound of f over the feasible set; its
    ``lower_bound_kind`` is one of "exact", "certified", or "estimate".
    Only exact/certified bounds back monitor assertions.  Instances are
    treated as immutable after construction.
    """

    objective: QuadraticObjective
    lipschitz_grad: float
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    polyhedron: Polyhedron
    lower_bound: float | None = None
    lower_bound_kind: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.eq_matrix = np.atleast_2d(np.asarray(self.eq_matrix, dtype=float))
        self.eq_rhs = np.atleast_1d(np.asarray(self.eq_rhs, dtype=float))
        self.lipschitz_grad = float(self.lipschitz_grad)

    @property
    def n(self) -> int:
        return self.eq_matrix.shape[1]

    @property
    def m(self) -> int:
        return self.eq_matrix.shape[0]

    def f(self, x) -> float:
        return self.objective.value(x)

    def grad_f(self, x) -> np.ndarray:
        return self.objective.grad(x)

    @cached_property
    def sigma_max_A(self) -> float:
        if self.eq_matrix.size == 0:
            return 0.0
        return float(np.linalg.svd(self.eq_matrix, compute_uv=False)[0])

    def check_dimensions(self):
        """Raise DimensionMismatchError on any shape inconsistency."""
        n = self.n
        if self.eq_rhs.shape[0] != self.m:
            raise DimensionMismatchError(
                f"A is {self.eq_matrix.shape} but b has length {self.eq_rhs.shape[0]}"
            )
        if self.polyhedron.dim != n:
            raise DimensionMismatchError(
                f"polyhedron dimension {self.polyhedron.dim} does not match n={n}"
            )
        if isinstance(self.objective, QuadraticObjective):
            if self.objective.Q.shape != (n, n):
                raise DimensionMismatchError(
                    f"Q is {self.objective.Q.shape}, expected {(n, n)}"
                )
            if self.objective.q.shape[0] != n:
                raise DimensionMismatchError(
                    f"q has length {self.objective.q.shape[0]}, expected {n}"
                )


@dataclass
class ValidationReport:
    n: int
    m: int
    l: int
    lipschitz_declared: float
    lipschitz_max_sampled_ratio: float
    lipschitz_ok: bool
    min_sampled_f: float | None
    lower_bound: float | None
    lower_bound_consistent: bool | None
    samples: int


def _sample_in_polyhedron(inst: ProblemInstance, rng: np.random.Generator, count: int):
    """Deterministic sample of points in P (clip/project Gaussian draws)."""
    P = inst.polyhedron
    n = inst.n
    raw = rng.standard_normal((count, n))
    if isinstance(P, Box):
        lo = np.where(np.isfinite(P.lo), P.lo, -1e3)
        hi = np.where(np.isfinite(P.hi), P.hi, 1e3)
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        pts = np.clip(center + raw * np.maximum(half, 1e-12), P.lo, P.hi)
        return pts
    from .projection import project

    pts = np.empty((count, n))
    for i in range(count):
        pts[i] = project(P, raw[i], tol=1e-10).point
    return pts


def _sample_feasible(inst: ProblemInstance, rng: np.random.Generator, count: int):
    """Points satisfying Ax = b exactly and x in P, built from a feasible anchor.

    Moves along null(A) directions with a backtracked step so membership
    in P is preserved exactly.  Returns None when no anchor is available.
    """
    anchor = inst.meta.get("x_feas")
    if anchor is None:
        return None
    anchor = np.asarray(anchor, dtype=float)
    A = inst.eq_matrix
    _, _, vt = np.linalg.svd(A, full_matrices=True)
    null_basis = vt[A.shape[0]:]  # rows span null(A)
    if null_basis.shape[0] == 0:
        return np.tile(anchor, (count, 1))
    pts = np.empty((count, inst.n))
    P = inst.polyhedron
    for i in range(count):
        d = null_basis.T @ rng.standard_normal(null_basis.shape[0])
        t = 1.0
        x = anchor + t * d
        for _ in range(60):
            if P.contains(x, tol=0.0):
                break
            t *= 0.5
            x = anchor + t * d
        else:
            x = anchor
        pts[i] = x
    return pts


def validate_instance(inst: ProblemInstance, samples: int, rng_seed: int) -> ValidationReport:
    """Sampled check of the declared gradient Lipschitz constant and lower bound.

    Flags a violation when the max sampled ratio ||grad f(x)-grad f(x')|| /
    ||x-x'|| exceeds the declared constant by more than 1e-9 relative.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    inst.check_dimensions()
    rng = np.random.default_rng(rng_seed)
    xs = _sample_in_polyhedron(inst, rng, samples)
    ys = _sample_in_polyhedron(inst, rng, samples)
    max_ratio = 0.0
    for x, y in zip(xs, ys):
        dx = np.linalg.norm(x - y)
        if dx < 1e-14:
            continue
        ratio = np.linalg.norm(inst.grad_f(x) - inst.grad_f(y)) / dx
        max_ratio = max(max_ratio, float(ratio))
    lipschitz_ok = max_ratio <= inst.lipschitz_grad * (1.0 + 1e-9)

    min_f = None
    consistent = None
    feas = _sample_feasible(inst, rng, min(samples, 64))
    if feas is not None:
        min_f = float(min(inst.f(x) for x in feas))
        if inst.lower_bound is not None:
            consistent = min_f >= inst.lower_bound - 1e-9 * (1.0 + abs(min_f))

    G, _h = inst.polyhedron.as_halfspaces()
    return ValidationReport(
        n=inst.n,
        m=inst.m,
        l=G.shape[0],
        lipschitz_declared=inst.lipschitz_grad,
        lipschitz_max_sampled_ratio=max_ratio,
        lipschitz_ok=bool(lipschitz_ok),
        min_sampled_f=min_f,
        lower_bound=inst.lower_bound,
        lower_bound_consistent=consistent,
        samples=samples,
    )


def generate_nonconvex_qp(n: int, m: int, neg_eigs: int, rng_seed: int,
                          box=(0.0, 1.0)) -> ProblemInstance:
    """Random indefinite QP over a box with a feasible equality system.

    Q has exactly ``neg_eigs`` negative eigenvalues (magnitudes in
    [0.5, 2]); A has orthonormal rows; b = A x_feas for an interior
    x_feas, so feasibility holds by construction.  The attached lower
    bound is a sampled estimate minus a margin, labeled "estimate".
    """
    if not 0 < m < n:
        raise ValueError("require 0 < m < n so A can have full row rank with slack")
    if neg_eigs >= n or neg_eigs < 0:
        raise ValueError("require 0 <= neg_eigs < n")
    rng = np.random.default_rng(rng_seed)

    lam = rng.uniform(0.5, 2.0, size=n)
    lam[:neg_eigs] *= -1.0
    Vr = rng.standard_normal((n, n))
    V, R = np.linalg.qr(Vr)
    V = V * np.sign(np.diag(R))  # fix QR sign convention for determinism
    Q = (V * lam) @ V.T
    Q = 0.5 * (Q + Q.T)
    q = rng.standard_normal(n)

    Ar = rng.standard_normal((n, m))
    Qa, Ra = np.linalg.qr(Ar)
    A = (Qa * np.sign(np.diag(Ra))).T  # m x n, orthonormal rows

    lo = np.full(n, float(box[0]))
    hi = np.full(n, float(box[1]))
    x_feas = lo + (0.25 + 0.5 * rng.random(n)) * (hi - lo)
    b = A @ x_feas

    obj = QuadraticObjective(Q=Q, q=q, offset=0.0)
    L_f = float(np.max(np.abs(lam)))

    # sampled estimate of the lower bound: box corners + feasible points
    if n <= 14:
        corners = np.array(np.meshgrid(*[[lo[i], hi[i]] for i in range(n)])).T.reshape(-1, n)
    else:
        corners = np.where(rng.random((4096, n)) < 0.5, lo, hi)
    corner_vals = 0.5 * np.einsum("ij,jk,ik->i", corners, Q, corners) + corners @ q
    inst_tmp = ProblemInstance(obj, L_f, A, b, Box(lo, hi), meta={"x_feas": x_feas})
    feas = _sample_feasible(inst_tmp, rng, 64)
    feas_vals = [obj.value(x) for x in feas]
    sampled_min = float(min(float(np.min(corner_vals)), min(feas_vals)))
    margin = 1.0 + 0.1 * abs(sampled_min)
    f_lower = sampled_min - margin

    return ProblemInstance(
        objective=obj,
        lipschitz_grad=L_f,
        eq_matrix=A,
        eq_rhs=b,
        polyhedron=Box(lo, hi),
        lower_bound=f_lower,
        lower_bound_kind="estimate",
        meta={"seed": int(rng_seed), "x_feas": x_feas},
    )


def fixed_instance_1d() -> ProblemInstance:
    """Golden instance: f(x) = x^2/2, constraint x = 0, P = R.

    The unique KKT point is (x*, y*) = (0, 0) and the exact lower bound
    over the feasible set is 0.
    """
    obj = QuadraticObjective(Q=np.array([[1.0]]), q=np.array([0.0]), offset=0.0)
    return ProblemInstance(
        objective=obj,
        lipschitz_grad=1.0,
        eq_matrix=np.array([[1.0]]),
        eq_rhs=np.array([0.0]),
        polyhedron=Box(lo=np.array([-np.inf]), hi=np.array([np.inf])),
        lower_bound=0.0,
        lower_bound_kind="exact",
        meta={"x_feas": np.array([0.0])},
    )


# ---------------------------------------------------------------------------
# JSON problem schema (quadratic instances only).  Matrices are flat
# row-major lists; shapes come from the n/m/l fields.
# ---------------------------------------------------------------------------

def instance_to_dict(inst: ProblemInstance) -> dict:
    if not isinstance(inst.objective, QuadraticObjective):
        raise TypeError("only quadratic objectives are serializable")
    n, m = inst.n, inst.m
    P = inst.polyhedron
    if isinstance(P, Box):
        G, _ = P.as_halfspaces()
        poly = {"type": "box", "lo": P.lo.tolist(), "hi": P.hi.tolist()}
        l = G.shape[0]
    else:
        poly = {"type": "general", "G": P.G.ravel().tolist(), "h": P.h.tolist()}
        l = P.G.shape[0]
    out = {
        "n": n,
        "m": m,
        "l": l,
        "Q": inst.objective.Q.ravel().tolist(),
        "q": inst.objective.q.tolist(),
        "offset": inst.objective.offset,
        "A": inst.eq_matrix.ravel().tolist(),
        "b": inst.eq_rhs.tolist(),
        "polyhedron": poly,
        "L_f": inst.lipschitz_grad,
    }
    if inst.lower_bound is not None:
        out["f_lower"] = inst.lower_bound
    meta = {}
    if "seed" in inst.meta:
        meta["seed"] = int(inst.meta["seed"])
    if "x_feas" in inst.meta:
        meta["x_feas"] = np.asarray(inst.meta["x_feas"], dtype=float).tolist()
    if inst.lower_bound_kind is not None:
        meta["f_lower_kind"] = inst.lower_bound_kind
    out["meta"] = meta
    return out


def instance_from_dict(data: dict) -> ProblemInstance:
    n = int(data["n"])
    m = int(data["m"])
    Q = np.asarray(data["Q"], dtype=float).reshape(n, n)
    q = np.asarray(data["q"], dtype=float)
    A = np.asarray(data["A"], dtype=float).reshape(m, n)
    b = np.asarray(data["b"], dtype=float)
    poly = data["polyhedron"]
    if poly["type"] == "box":
        P = Box(np.asarray(poly["lo"], dtype=float), np.asarray(poly["hi"], dtype=float))
    elif poly["type"] == "general":
        G = np.asarray(poly["G"], dtype=float).reshape(-1, n)
        P = Halfspaces(G, np.asarray(poly["h"], dtype=float))
    else:
        raise ValueError(f"unknown polyhedron type {poly['type']!r}")
    meta = dict(data.get("meta", {}))
    if "x_feas" in meta:
        meta["x_feas"] = np.asarray(meta["x_feas"], dtype=float)
    inst = ProblemInstance(
        objective=QuadraticObjective(Q=Q, q=q, offset=float(data.get("offset", 0.0))),
        lipschitz_grad=float(data["L_f"]),
        eq_matrix=A,
        eq_rhs=b,
        polyhedron=P,
        lower_bound=float(data["f_lower"]) if "f_lower" in data else None,
        lower_bound_kind=meta.pop("f_lower_kind", None),
        meta=meta,
    )
    inst.check_dimensions()
    return inst


def save_instance(inst: ProblemInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=1)
        fh.write("\n")


def load_instance(path) -> ProblemInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
