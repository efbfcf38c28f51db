import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sproxalm.constants import SolverParams, plan_stepsizes
from sproxalm.diagnostics import (MonitorContext, certificate_from_step,
                                  certificate_minnorm, check_step_inequalities,
                                  multiplier_set_distance, potential_value,
                                  regularized_quadratic_instance,
                                  trace_segment_decomposition,
                                  verify_dual_error_bound, verify_hoffman)
from sproxalm.exceptions import StepMismatchError
from sproxalm.oracles import enumerate_kkt_points
from sproxalm.problem import (Box, ProblemInstance, QuadraticObjective,
                              fixed_instance_1d)
from sproxalm.solvers import IterateState, sprox_alm_step
from tests.conftest import make_box_instance, make_general_instance

PARAMS_1D = SolverParams(rho=1.0, p=3.0, c=0.1, alpha=0.05, beta=0.03)


# ------------------------------------------------------------ certificates

def test_certificate_vanishes_at_fixed_point():
    inst = fixed_instance_1d()
    st0 = IterateState(np.zeros(1), np.zeros(1), np.zeros(1))
    st1 = sprox_alm_step(inst, st0, PARAMS_1D)
    rep = certificate_from_step(inst, st0.x, st1, st0.z, PARAMS_1D)
    assert rep.cert_norm == 0.0 and rep.eq_residual == 0.0 and rep.epsilon == 0.0


def test_certificate_matches_hand_value_on_worked_example():
    inst = fixed_instance_1d()
    st0 = IterateState(np.array([1.0]), np.array([0.0]), np.array([1.0]))
    st1 = sprox_alm_step(inst, st0, PARAMS_1D)
    rep = certificate_from_step(inst, st0.x, st1, st0.z, PARAMS_1D)
    dx = 0.795 - 1.0
    v_hand = dx + (1.0 + 3.0) * dx - (1.0 / 0.1) * dx - 0.795 - 3.0 * (0.795 - 1.0)
    assert rep.cert_vector[0] == pytest.approx(v_hand, abs=1e-14)
    assert rep.eq_residual == pytest.approx(0.795, abs=1e-15)


def test_certificate_rejects_wrong_step():
    inst = fixed_instance_1d()
    st0 = IterateState(np.array([1.0]), np.array([0.0]), np.array([1.0]))
    st1 = sprox_alm_step(inst, st0, PARAMS_1D)
    tampered = IterateState(st1.x + 0.1, st1.y, st1.z, st1.t)
    with pytest.raises(StepMismatchError):
        certificate_from_step(inst, st0.x, tampered, st0.z, PARAMS_1D)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_certificate_norm_bound_chain(seed):
    # ||v|| <= (L_f + p + rho smax^2 + 1/c)||dx|| + rho smax ||Ax+ - b|| + p||x+ - z||
    inst = make_box_instance(5, 2, 2, seed)
    params, rep = plan_stepsizes(inst, "practical")
    rng = np.random.default_rng(seed)
    st0 = IterateState(inst.polyhedron.clip(rng.standard_normal(5)),
                       rng.standard_normal(2), inst.polyhedron.clip(rng.standard_normal(5)))
    st1 = sprox_alm_step(inst, st0, params)
    out = certificate_from_step(inst, st0.x, st1, st0.z, params)
    dx = np.linalg.norm(st1.x - st0.x)
    bound = ((rep.L_f + rep.p + rep.rho * rep.sigma_max_A ** 2 + 1.0 / params.c) * dx
             + rep.rho * rep.sigma_max_A * out.eq_residual
             + rep.p * np.linalg.norm(st1.x - st0.z))
    assert out.cert_norm <= bound * (1 + 1e-9) + 1e-12


def test_minnorm_on_free_space_is_plain_gradient():
    inst = fixed_instance_1d()
    rep = certificate_minnorm(inst, np.array([0.7]), np.array([0.2]))
    assert rep.cert_vector[0] == pytest.approx(0.7 + 0.2, abs=1e-15)
    assert rep.method == "minnorm-nnls"


def test_minnorm_at_enumerated_kkt_point():
    # Q = diag(1, -1), A = [1 1], b = 1, box [0,1]^2: oracle finds x* = (0, 1)
    inst = ProblemInstance(
        objective=QuadraticObjective(np.diag([1.0, -1.0]), np.zeros(2)),
        lipschitz_grad=1.0,
        eq_matrix=np.array([[1.0, 1.0]]), eq_rhs=np.array([1.0]),
        polyhedron=Box(np.zeros(2), np.ones(2)),
    )
    pts = enumerate_kkt_points(inst)
    target = [p for p in pts if np.allclose(p[0], [0.0, 1.0], atol=1e-10)]
    assert target
    x, y, _ = target[0]
    rep = certificate_minnorm(inst, x, y)
    assert rep.cert_norm <= 1e-8
    assert rep.eq_residual <= 1e-12


def test_minnorm_interior_point_has_no_active_rows():
    inst = make_general_instance(3, 1, 2, neg_eigs=1, seed=3)
    x0 = inst.meta["x_feas"]
    y = np.array([0.1])
    rep = certificate_minnorm(inst, x0, y)
    expected = inst.grad_f(x0) + inst.eq_matrix.T @ y
    assert np.allclose(rep.cert_vector, expected, atol=1e-12)


def test_minnorm_rejects_infeasible_point():
    inst = make_general_instance(3, 1, 2, neg_eigs=1, seed=3)
    far = inst.meta["x_feas"] + 100.0
    with pytest.raises(ValueError):
        certificate_minnorm(inst, far, np.zeros(1))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_minnorm_never_exceeds_step_certificate(seed):
    inst = make_box_instance(4, 2, 1, seed)
    params, _ = plan_stepsizes(inst, "practical")
    rng = np.random.default_rng(seed)
    st0 = IterateState(inst.polyhedron.clip(rng.standard_normal(4)),
                       rng.standard_normal(2),
                       inst.polyhedron.clip(rng.standard_normal(4)))
    st1 = sprox_alm_step(inst, st0, params)
    step_rep = certificate_from_step(inst, st0.x, st1, st0.z, params)
    mn_rep = certificate_minnorm(inst, st1.x, st1.y)
    assert mn_rep.cert_norm <= step_rep.cert_norm + 1e-8


# ---------------------------------------------------------------- potential

def test_potential_golden_parts():
    inst = fixed_instance_1d()
    st0 = IterateState(np.array([1.0]), np.array([0.0]), np.array([1.0]))
    phi, (K, d, P) = potential_value(inst, st0, PARAMS_1D, tol=1e-12)
    assert K == pytest.approx(1.0, abs=1e-14)
    assert d == pytest.approx(0.6, abs=1e-11)
    assert P == pytest.approx(1.5, abs=1e-11)
    assert phi == pytest.approx(2.8, abs=1e-12)


def test_potential_equals_objective_at_primal_dual_fixed_point():
    inst = fixed_instance_1d()
    st0 = IterateState(np.zeros(1), np.zeros(1), np.zeros(1))
    phi, (K, d, P) = potential_value(inst, st0, PARAMS_1D, tol=1e-12)
    assert phi == pytest.approx(inst.f(np.zeros(1)), abs=1e-11)
    assert K == pytest.approx(d, abs=1e-11) and P == pytest.approx(d, abs=1e-11)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_potential_part_inequalities(seed):
    # K >= d by definition of the min; P >= d by weak duality; phi >= P >= flow
    inst = make_box_instance(4, 2, 1, seed)
    params, _ = plan_stepsizes(inst, "practical")
    rng = np.random.default_rng(seed)
    st0 = IterateState(inst.polyhedron.clip(rng.standard_normal(4)),
                       rng.standard_normal(2),
                       inst.polyhedron.clip(rng.standard_normal(4)))
    phi, (K, d, P) = potential_value(inst, st0, params, tol=1e-11)
    assert K >= d - 1e-9
    assert P >= d - 1e-9
    assert phi >= P - 1e-9


# ---------------------------------------------------- descent inequalities

def test_descent_lemmas_hold_on_theoretical_run():
    inst = make_box_instance(4, 2, 1, seed=12)
    params, _ = plan_stepsizes(inst, "theoretical", exact_limit=12)
    st0 = IterateState(inst.polyhedron.clip(np.zeros(4)), np.zeros(2),
                       inst.polyhedron.clip(np.zeros(4)))
    for _ in range(5):
        st1 = sprox_alm_step(inst, st0, params)
        out = check_step_inequalities(inst, st0, st1, params, tol=1e-11)
        for name, (lhs, rhs, ok) in out.items():
            assert ok, f"{name}: lhs={lhs} rhs={rhs}"
        st0 = st1


def test_monitor_context_checks_descent_and_bounds():
    inst = fixed_instance_1d()
    params, _ = plan_stepsizes(inst, "theoretical")
    ctx = MonitorContext(inst, params)
    st0 = IterateState(np.array([0.8]), np.zeros(1), np.array([0.8]))
    st1 = sprox_alm_step(inst, st0, params)
    out = ctx.check_step(st0, st1)
    assert out["descent_ok"]
    assert out["lower_bound_ok"]
    assert out["step_error_bound_ok"]
    assert out["decrease"] >= 0


# ------------------------------------------------------- dual error bound

def test_error_bound_golden_instance_ratio_one():
    inst = fixed_instance_1d()
    params, rep = plan_stepsizes(inst, "theoretical")
    out = verify_dual_error_bound(inst, params, n_samples=50, rng_seed=3,
                                  sigma5_bar=rep.sigma5_bar)
    # closed form: x(y,z) = (pz - y)/5, xbar*(z) = 0, residual = x(y,z)
    assert out.passed and out.violations == 0
    assert out.max_ratio == pytest.approx(1.0, rel=1e-6)
    assert out.bound == pytest.approx(13 * np.sqrt(2), rel=1e-12)


def test_error_bound_zero_residual_consistency():
    inst = fixed_instance_1d()
    params, rep = plan_stepsizes(inst, "theoretical")
    # y chosen optimal for the prox problem at z: x(y, z) = xbar*(z) exactly
    z = np.array([0.4])
    from sproxalm.solvers import solve_constrained_strongly_convex

    prox = solve_constrained_strongly_convex(inst, z, params, tol=1e-12)
    from sproxalm.solvers import inner_minimize_K

    xi = inner_minimize_K(inst, prox.y, z, params, tol=1e-12)
    assert np.linalg.norm(xi - prox.x) < 1e-9
    assert np.linalg.norm(inst.eq_matrix @ xi - inst.eq_rhs) < 1e-9


def test_error_bound_random_instance_within_sigma5():
    inst = make_box_instance(5, 2, 2, seed=21)
    params, rep = plan_stepsizes(inst, "theoretical", exact_limit=15)
    assert rep.theta_exact
    out = verify_dual_error_bound(inst, params, n_samples=100, rng_seed=1,
                                  sigma5_bar=rep.sigma5_bar)
    assert out.passed and out.violations == 0
    assert out.max_ratio <= rep.sigma5_bar


# ----------------------------------------------------------- hoffman check

def test_hoffman_check_1d_inequality_equality_case():
    out = verify_hoffman(np.array([[1.0]]), np.array([1.0]), None, None,
                         theta=1.0, n_points=50, rng_seed=0)
    assert out.passed
    assert out.near_tightness == pytest.approx(1.0, rel=1e-9)


def test_hoffman_check_scaled_equality_row():
    # S = {2x = 0}: dist^2 = x^2, residual^2 = 4x^2, theta = 0.25 is tight
    out = verify_hoffman(None, None, np.array([[2.0]]), np.array([0.0]),
                         theta=0.25, n_points=50, rng_seed=1)
    assert out.passed
    assert out.near_tightness == pytest.approx(1.0, rel=1e-9)


def test_hoffman_check_interior_points_contribute_nothing():
    out = verify_hoffman(np.array([[1.0]]), np.array([100.0]), None, None,
                         theta=1.0, n_points=20, rng_seed=2)
    assert out.passed and out.max_ratio == 0.0


def test_hoffman_check_infeasible_system_raises():
    from sproxalm.exceptions import InfeasibleError

    C1 = np.vstack([np.eye(1), -np.eye(1)])
    b1 = np.array([1.0, -2.0])
    with pytest.raises(InfeasibleError):
        verify_hoffman(C1, b1, None, None, theta=1.0, n_points=5, rng_seed=0)


# ----------------------------------------------------- segment decomposition

def test_segment_zero_residual_single_segment():
    inst = make_general_instance(3, 1, 2, neg_eigs=0, seed=6)
    params, _ = plan_stepsizes(inst, "practical")
    g = regularized_quadratic_instance(inst, params, inst.meta["x_feas"])
    # y_tilde = prox multiplier makes x(y) feasible: residual segment is a point
    from sproxalm.solvers import solve_constrained_strongly_convex

    prox = solve_constrained_strongly_convex(inst, inst.meta["x_feas"], params, tol=1e-12)
    seg = trace_segment_decomposition(g, prox.y, grid_size=31)
    assert np.linalg.norm(seg.r_tilde) < 1e-8
    assert len(seg.breakpoints) == 0
    assert len(seg.active_sets_observed) == 1


def test_segment_unconstrained_path_is_linear():
    # strongly convex 1-D with no inequality rows: x*(r) = r exactly
    obj = QuadraticObjective(np.array([[4.0]]), np.array([-3.0]), offset=1.5)
    g = ProblemInstance(objective=obj, lipschitz_grad=4.0,
                        eq_matrix=np.array([[1.0]]), eq_rhs=np.array([0.0]),
                        polyhedron=Box(np.array([-np.inf]), np.array([np.inf])))
    seg = trace_segment_decomposition(g, np.array([2.0]), grid_size=41)
    assert len(seg.breakpoints) == 0
    xs = np.array([pt.x[0] for pt in seg.grid])
    ss = np.array([pt.s for pt in seg.grid])
    r = seg.r_tilde[0]
    assert np.allclose(xs, ss * r, atol=1e-9)
    assert seg.lipschitz_ok


def test_segment_box_instance_with_breakpoint():
    # min (x1-2)^2 + (x2-2)^2 over [0,1]^2 relaxed along A x = b + s r
    obj = QuadraticObjective(2 * np.eye(2), np.array([-4.0, -4.0]), offset=4.0)
    g = ProblemInstance(objective=obj, lipschitz_grad=2.0,
                        eq_matrix=np.array([[1.0, -1.0]]), eq_rhs=np.array([0.0]),
                        polyhedron=Box(np.zeros(2), np.ones(2)))
    seg = trace_segment_decomposition(g, np.array([-3.0]), grid_size=201)
    assert seg.telescoped_sum == pytest.approx(np.linalg.norm(seg.r_tilde), abs=1e-10)
    assert seg.lipschitz_ok
    assert len(seg.active_sets_observed) <= 2 ** 4
    # triangle composition across the whole path
    total = sum(np.linalg.norm(b.x - a.x) for a, b in zip(seg.grid[:-1], seg.grid[1:]))
    assert np.linalg.norm(seg.grid[-1].x - seg.grid[0].x) <= total + 1e-12


def test_segment_multiplier_set_distance_bound():
    inst = make_box_instance(3, 1, 1, seed=30)
    params, _ = plan_stepsizes(inst, "practical")
    g = regularized_quadratic_instance(inst, params, inst.meta["x_feas"])
    seg = trace_segment_decomposition(g, np.array([1.5]), grid_size=51)
    H = g.objective.Q
    ev = np.linalg.eigvalsh(H)
    for a, b in zip(seg.grid[:-1], seg.grid[1:]):
        if a.active != b.active:
            continue
        dr = abs(b.s - a.s) * np.linalg.norm(seg.r_tilde)
        if dr < 1e-12:
            continue
        dist = multiplier_set_distance(g, b.y, b.mu, a.s * seg.r_tilde, a.x, a.active)
        lhs = dist + np.linalg.norm(a.x - b.x)
        assert lhs <= seg.sigma5 * dr * (1 + 1e-6) + 1e-9


def test_prox_factor_two_variant():
    # the alternative prox-weight convention doubles the displacement term
    inst = fixed_instance_1d()
    p1 = SolverParams(rho=1.0, p=3.0, c=0.1, alpha=0.05, beta=0.03, prox_factor=1)
    p2 = SolverParams(rho=1.0, p=3.0, c=0.1, alpha=0.05, beta=0.03, prox_factor=2)
    st0 = IterateState(np.array([1.0]), np.array([0.0]), np.array([1.0]))
    st1 = sprox_alm_step(inst, st0, p1)   # the step itself is identical
    r1 = certificate_from_step(inst, st0.x, st1, st0.z, p1)
    r2 = certificate_from_step(inst, st0.x, st1, st0.z, p2)
    dx = st1.x[0] - st0.x[0]
    assert r2.cert_vector[0] - r1.cert_vector[0] == pytest.approx(-dx / 0.1, abs=1e-14)
