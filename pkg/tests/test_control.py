import math

import numpy as np
import pytest
import scipy.linalg

from thermaldrift.control import (
    GainSchedule,
    LqrWeights,
    OperatingPoint,
    build_schedule,
    closed_loop_poles,
    linearize,
    lookup,
    lqr_gain,
    spectral_abscissa,
)
from thermaldrift.errors import ScheduleError, SolverError
from thermaldrift.model import vehicle_derivatives

from conftest import BETA, RADIUS, THETA0


def nominal_op(eq):
    return OperatingPoint(state=eq.state(), input=eq.input(),
                          kappa=1.0 / RADIUS)


# ---------------------------------------------------------------------------
# LQR gains
# ---------------------------------------------------------------------------

def test_scalar_lqr_exact():
    K = lqr_gain([[0.0]], [[1.0]], [[1.0]], [[1.0]])
    assert abs(K[0, 0] - 1.0) < 1e-10
    K = lqr_gain([[1.0]], [[1.0]], [[1.0]], [[1.0]])
    assert abs(K[0, 0] - (1.0 + math.sqrt(2.0))) < 1e-10


def test_lqr_rejects_unstabilizable():
    with pytest.raises(SolverError):
        lqr_gain([[1.0]], [[0.0]], [[1.0]], [[1.0]])


def test_full_gain_stabilizes(params, eq_nominal):
    sys = linearize(params, nominal_op(eq_nominal))
    w = LqrWeights()
    K = lqr_gain(sys.A, sys.B, w.Q, w.R)
    assert spectral_abscissa(sys.A - sys.B @ K) < 0.0
    # independent Riccati residual check
    P = scipy.linalg.solve_continuous_are(sys.A, sys.B, w.Q, w.R)
    K_ref = np.linalg.solve(w.R, sys.B.T @ P)
    assert np.allclose(K, K_ref, atol=1e-8)
    resid = sys.A.T @ P + P @ sys.A - P @ sys.B @ K_ref + w.Q
    assert np.linalg.norm(resid) / max(1.0, np.linalg.norm(P)) < 1e-8
    # perturbed linear closed loop decays
    x = np.full(6, 0.05)
    Acl = sys.A - sys.B @ K
    for _ in range(2000):
        x = x + 0.005 * (Acl @ x)
    assert np.linalg.norm(x) < 0.05


# ---------------------------------------------------------------------------
# linearization
# ---------------------------------------------------------------------------

def test_linearize_cross_check(params, eq_nominal):
    """Central differences vs an independent forward scheme at h/10."""
    op = nominal_op(eq_nominal)
    sys = linearize(params, op)
    st, u = op.state, op.input
    names = ["Vx", "Vy", "r", "omega"]

    def rates(state, inp):
        rt = vehicle_derivatives(params, state, inp, kappa=op.kappa)
        return np.array([rt.Vx, rt.Vy, rt.r, rt.omega])

    base = rates(st, u)
    for j, name in enumerate(names):
        h = 1e-7 * max(1.0, abs(getattr(st, name)))
        fwd = (rates(st.replace(**{name: getattr(st, name) + h}), u) - base) / h
        for i in range(4):
            if abs(sys.A[i, j]) > 1e-6:
                assert fwd[i] == pytest.approx(sys.A[i, j], rel=1e-4)


def test_linearize_analytic_path_rows(params, eq_nominal):
    op = nominal_op(eq_nominal)
    sys = linearize(params, op)
    st = op.state
    S, C = math.sin(st.dpsi), math.cos(st.dpsi)
    np.testing.assert_allclose(
        sys.A[5], [S, C, 0.0, 0.0, st.Vx * C - st.Vy * S, 0.0], atol=1e-12)
    assert np.all(sys.B[4:] == 0.0)


def test_linearize_straight_path_row(params, eq_nominal):
    op = OperatingPoint(state=eq_nominal.state().replace(dpsi=0.0),
                        input=eq_nominal.input(), kappa=0.0)
    sys = linearize(params, op)
    np.testing.assert_allclose(
        sys.A[5], [0.0, 1.0, 0.0, 0.0, op.state.Vx, 0.0], atol=1e-12)


def test_linearization_consistency(params, eq_nominal):
    op = nominal_op(eq_nominal)
    sys = linearize(params, op)
    rng = np.random.default_rng(7)
    st = op.state

    def f6(state):
        rt = vehicle_derivatives(params, state, op.input, kappa=op.kappa)
        return np.array([rt.Vx, rt.Vy, rt.r, rt.omega, rt.dpsi, rt.e])

    base = f6(st)
    for _ in range(20):
        dx = rng.uniform(-1e-4, 1e-4, size=6)
        pert = st.replace(Vx=st.Vx + dx[0], Vy=st.Vy + dx[1], r=st.r + dx[2],
                          omega=st.omega + dx[3], dpsi=st.dpsi + dx[4],
                          e=st.e + dx[5])
        err = np.linalg.norm(f6(pert) - base - sys.A @ dx)
        assert err <= 1e-6 + 10.0 * np.dot(dx, dx)


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

def test_constant_friction_gains_identical(params):
    from thermaldrift.equilibrium import quasi_steady_sweep
    traj = quasi_steady_sweep(params, RADIUS, BETA, THETA0, 5.0,
                              thermal=False)
    sched = build_schedule(params, traj)
    spread = np.max(np.abs(sched.K - sched.K[0]))
    assert spread < 1e-10


def test_thermal_gains_vary(steady_schedules):
    sched = steady_schedules["thermal"]
    assert np.max(np.abs(sched.K - sched.K[0])) > 1e-3


def test_schedule_spacing(steady_schedules):
    sched = steady_schedules["thermal"]
    assert np.allclose(np.diff(sched.s_knots), 0.25)


def test_single_knot_schedule(params, eq_nominal):
    class OneNode:
        def s_span(self):
            return 0.0, 0.0

        def sample(self, s):
            return eq_nominal.state(), eq_nominal.input(), 1.0 / RADIUS

    sched = build_schedule(params, OneNode())
    assert len(sched) == 1
    K, ref_x, ref_u, idx = lookup(sched, 1234.5)
    assert idx == 0


def test_lookup_rules(params, steady_schedules):
    sched = steady_schedules["thermal"]
    # exact knot
    assert lookup(sched, 1.0)[3] == 4
    # midpoint ties toward the smaller knot
    assert lookup(sched, 1.125)[3] == 4
    assert lookup(sched, 1.1251)[3] == 5
    # clamping
    assert lookup(sched, -5.0)[3] == 0
    assert lookup(sched, 1e9)[3] == len(sched) - 1


def test_schedule_validation():
    with pytest.raises(ScheduleError):
        GainSchedule(s_knots=np.array([]), K=np.zeros((0, 3, 6)),
                     ref_states=np.zeros((0, 12)), ref_inputs=np.zeros((0, 3)),
                     kappa=np.zeros(0), theta=np.zeros(0))
    with pytest.raises(ScheduleError):
        GainSchedule(s_knots=np.array([0.0, 0.0]), K=np.zeros((2, 3, 6)),
                     ref_states=np.zeros((2, 12)), ref_inputs=np.zeros((2, 3)),
                     kappa=np.zeros(2), theta=np.zeros(2))


def test_weight_validation():
    with pytest.raises(ValueError):
        LqrWeights(Q_diag=np.array([-1.0, 1, 1, 1, 1, 1]))
    with pytest.raises(ValueError):
        LqrWeights(R_diag=np.array([0.0, 1.0, 1.0]))


def test_closed_loop_poles_shape(params, eq_nominal):
    sys = linearize(params, nominal_op(eq_nominal))
    w = LqrWeights()
    K = lqr_gain(sys.A, sys.B, w.Q, w.R)
    poles = closed_loop_poles(sys.A, sys.B, K)
    assert poles.shape == (6,)
    assert np.max(poles.real) < 0.0
