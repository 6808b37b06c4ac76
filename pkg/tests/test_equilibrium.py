import math

import numpy as np
import pytest

from thermaldrift.equilibrium import (
    dynamic_residual,
    find_equilibrium,
    quasi_steady_sweep,
    thermal_fixed_point,
)
from thermaldrift.errors import SolverError
from thermaldrift.model import tire_forces

from conftest import BETA, RADIUS, THETA0


def test_nominal_equilibrium_character(params, eq_nominal):
    eq = eq_nominal
    assert eq.residual_norm < 1e-8
    assert eq.tau > 0.0                       # drive torque sustains the drift
    assert eq.delta < 0.0                     # counter-steer: right steer in a left turn
    forces = tire_forces(params, eq.state(), eq.input())
    # rear tire rides near the friction circle in a drift
    assert math.hypot(forces.F_xr, forces.F_yr) > \
        0.95 * forces.mu_r * forces.F_zr
    assert eq.V == pytest.approx(eq.r * RADIUS)
    assert eq.beta == BETA


def test_residual_reevaluates(params, eq_nominal):
    res = dynamic_residual(params, eq_nominal.state(), eq_nominal.input())
    assert np.linalg.norm(res) == pytest.approx(eq_nominal.residual_norm,
                                                abs=1e-12)


def test_hotter_tire_slower_drift(params):
    eq_cold = find_equilibrium(params, RADIUS, BETA, 30.0)
    eq_hot = find_equilibrium(params, RADIUS, BETA, 70.0)
    assert eq_hot.V < eq_cold.V
    assert eq_hot.mu_r < eq_cold.mu_r


def test_grip_driving_limit(params):
    # the built-in guess targets the drift basin; seed a grip-driving one
    V, Re = 10.0, params.vehicle.Re
    guess = [V / 60.0, V / Re, 0.0, math.radians(2.5), 200.0]
    eq = find_equilibrium(params, 60.0, 0.0, 30.0, guess=guess)
    forces = tire_forces(params, eq.state(), eq.input())
    assert abs(eq.delta) < math.radians(6.0)
    assert abs(forces.kappa_r) < 0.05


def test_precondition_errors(params):
    with pytest.raises(ValueError):
        find_equilibrium(params, 3.0, BETA, 30.0)
    with pytest.raises(ValueError):
        find_equilibrium(params, 15.0, math.radians(-85.0), 30.0)


def test_sweep_deterministic(params):
    t1 = quasi_steady_sweep(params, RADIUS, BETA, THETA0, 20.0)
    t2 = quasi_steady_sweep(params, RADIUS, BETA, THETA0, 20.0)
    assert np.array_equal(t1.theta, t2.theta)
    assert np.array_equal(t1.t, t2.t)
    assert all(a == b for a, b in zip(t1.equilibria, t2.equilibria))


def test_sweep_mu_consistency(params):
    traj = quasi_steady_sweep(params, RADIUS, BETA, THETA0, 10.0)
    thp = params.thermal
    for k, eq in enumerate(traj.equilibria):
        assert eq.mu_r == thp.mu_r1 * traj.theta[k] + thp.mu_r0
        assert eq.residual_norm < 1e-8
    assert np.all(np.diff(traj.t) > 0.0)


def test_sweep_monotone_toward_fixed_point(params, steady_plans):
    traj = steady_plans["thermal"]
    fp = thermal_fixed_point(params, RADIUS, BETA)
    assert THETA0 < fp.theta_r
    assert np.all(np.diff(traj.theta) >= 0.0)
    assert traj.theta[-1] <= fp.theta_r + 1e-6
    # approaches the fixed point over the 300 m sweep
    assert fp.theta_r - traj.theta[-1] < 0.5 * (fp.theta_r - THETA0)


def test_fixed_point_is_thermally_stationary(params):
    from thermaldrift.model import heat_generation, thermal_derivative
    fp = thermal_fixed_point(params, RADIUS, BETA)
    forces = tire_forces(params, fp.state(), fp.input())
    Q = heat_generation(params.thermal, fp.state().Vx, forces.alpha_r,
                        forces.kappa_r, forces.F_xr, forces.F_yr, forces.F_zr)
    assert thermal_derivative(params.thermal, fp.theta_r, Q) == \
        pytest.approx(0.0, abs=1e-6)


def test_sweep_step_refinement(params):
    coarse = quasi_steady_sweep(params, RADIUS, BETA, THETA0, 40.0, ds=0.5)
    fine = quasi_steady_sweep(params, RADIUS, BETA, THETA0, 40.0, ds=0.25)
    finest = quasi_steady_sweep(params, RADIUS, BETA, THETA0, 40.0, ds=0.125)
    e1 = abs(coarse.theta[-1] - finest.theta[-1])
    e2 = abs(fine.theta[-1] - finest.theta[-1])
    assert e2 < e1  # first-order update converges under refinement
    assert e1 < 0.1


def test_thermal_disabled_constant_inputs(params):
    traj = quasi_steady_sweep(params, RADIUS, BETA, THETA0, 20.0,
                              thermal=False)
    deltas = np.array([eq.delta for eq in traj.equilibria])
    taus = np.array([eq.tau for eq in traj.equilibria])
    assert np.max(np.abs(np.diff(deltas))) < 1e-9
    assert np.max(np.abs(np.diff(taus))) < 1e-9
    assert np.all(traj.theta == THETA0)


def test_mu_const_maps_to_equivalent_temperature(params):
    traj = quasi_steady_sweep(params, RADIUS, BETA, THETA0, 5.0, mu_const=0.8)
    thp = params.thermal
    theta_eq = (0.8 - thp.mu_r0) / thp.mu_r1
    assert np.all(traj.theta == theta_eq)
    assert traj.equilibria[0].mu_r == pytest.approx(0.8, abs=1e-12)


def test_sweep_error_names_node(params):
    # an infeasible sideslip fails at the first node with its index
    with pytest.raises(SolverError, match="node 0"):
        quasi_steady_sweep(params, RADIUS, math.radians(-75.0), THETA0, 5.0)


def test_sweep_validation(params):
    with pytest.raises(ValueError):
        quasi_steady_sweep(params, RADIUS, BETA, THETA0, 10.0, ds=-0.1)
    with pytest.raises(ValueError):
        quasi_steady_sweep(params, RADIUS, BETA, THETA0, 0.1, ds=0.25)
