import numpy as np
import pytest

from sproxalm.problem import Halfspaces, ProblemInstance, QuadraticObjective


def random_quadratic(n, neg_eigs, rng, lam_range=(0.5, 2.0)):
    lam = rng.uniform(*lam_range, size=n)
    lam[:neg_eigs] *= -1.0
    V, R = np.linalg.qr(rng.standard_normal((n, n)))
    V = V * np.sign(np.diag(R))
    Q = (V * lam) @ V.T
    Q = 0.5 * (Q + Q.T)
    return QuadraticObjective(Q=Q, q=rng.standard_normal(n)), float(np.max(np.abs(lam)))


def make_general_instance(n, m, l, neg_eigs, seed):
    """Random instance over a general halfspace polyhedron, feasible by
    construction (x0 strictly interior, b = A x0)."""
    rng = np.random.default_rng(seed)
    obj, L_f = random_quadratic(n, neg_eigs, rng)
    Ar = rng.standard_normal((n, m))
    Qa, Ra = np.linalg.qr(Ar)
    A = (Qa * np.sign(np.diag(Ra))).T
    x0 = 0.5 * rng.standard_normal(n)
    G = rng.standard_normal((l, n))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    h = G @ x0 + rng.uniform(0.5, 1.5, size=l)
    return ProblemInstance(
        objective=obj, lipschitz_grad=L_f, eq_matrix=A, eq_rhs=A @ x0,
        polyhedron=Halfspaces(G, h), meta={"seed": seed, "x_feas": x0},
    )


def make_box_instance(n, m, neg_eigs, seed, box=(0.0, 1.0)):
    from sproxalm.problem import generate_nonconvex_qp

    return generate_nonconvex_qp(n=n, m=m, neg_eigs=neg_eigs, rng_seed=seed, box=box)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
