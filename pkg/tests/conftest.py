"""Shared fixtures.  The expensive artifacts (the transition solve and the
three-way steady comparison) are built once per session and reused by the
unit tests and the acceptance suite."""

import math
import time

import numpy as np
import pytest

from thermaldrift.control import LqrWeights, build_schedule
from thermaldrift.equilibrium import find_equilibrium, quasi_steady_sweep
from thermaldrift.params import default_params
from thermaldrift.paths import CirclePath
from thermaldrift.sim import Scenario, compare
from thermaldrift.trajopt import (
    IX,
    TransitionProblem,
    initial_guess,
    solve_transition,
)

RADIUS = 15.0
BETA = math.radians(-40.0)
THETA0 = 30.0
ARC = 300.0


@pytest.fixture(scope="session")
def params():
    return default_params()


@pytest.fixture(scope="session")
def eq_nominal(params):
    """The nominal drift equilibrium (R = 15 m, beta = -40 deg, 30 degC)."""
    return find_equilibrium(params, RADIUS, BETA, THETA0)


def make_transition_problem(params, k_s=200.0):
    eq1 = find_equilibrium(params, RADIUS, BETA, THETA0)
    st = eq1.state(psi=-eq1.beta, X=0.0, Y=0.0, s=0.0)
    x0 = np.array([st.Vx, st.Vy, st.r, st.psi, st.omega, st.dFz, st.X, st.Y,
                   eq1.delta, eq1.tau, THETA0, 0.0])
    problem = TransitionProblem(
        params=params, x_initial=x0, kappa_final=-1.0 / RADIUS,
        beta_final=-BETA, k_s=k_s,
        y_center_target=CirclePath(RADIUS).center[1])
    eq2 = find_equilibrium(params, -RADIUS, -BETA, THETA0)
    x_target = x0.copy()
    x_target[IX.Vx] = eq2.V * math.cos(eq2.beta)
    x_target[IX.Vy] = eq2.V * math.sin(eq2.beta)
    for j, v in ((IX.r, eq2.r), (IX.omega, eq2.omega), (IX.dFz, eq2.dFz),
                 (IX.delta, eq2.delta), (IX.tau, eq2.tau)):
        x_target[j] = v
    return problem, x_target


@pytest.fixture(scope="session")
def transition(params):
    """Figure-8 transition solve plus its wall time, shared across tests."""
    problem, x_target = make_transition_problem(params)
    t0 = time.perf_counter()
    traj = solve_transition(problem, guess=initial_guess(problem, x_target))
    elapsed = time.perf_counter() - t0
    return problem, traj, elapsed


@pytest.fixture(scope="session")
def steady_plans(params):
    """Thermal and constant-mu quasi-steady plans for the 300 m circle."""
    return {
        "thermal": quasi_steady_sweep(params, RADIUS, BETA, THETA0, ARC),
        "mu0.73": quasi_steady_sweep(params, RADIUS, BETA, THETA0, ARC,
                                     mu_const=0.73),
        "mu0.8": quasi_steady_sweep(params, RADIUS, BETA, THETA0, ARC,
                                    mu_const=0.8),
    }


@pytest.fixture(scope="session")
def steady_schedules(params, steady_plans):
    weights = LqrWeights.tracking()
    return {name: build_schedule(params, traj, weights=weights)
            for name, traj in steady_plans.items()}


@pytest.fixture(scope="session")
def steady_scenarios(params, steady_plans, steady_schedules):
    path = CirclePath(RADIUS)
    return [
        Scenario(name=name, schedule=steady_schedules[name], path=path,
                 plant=params,
                 initial_state=steady_plans[name].node_state(0)
                 .replace(theta_r=THETA0),
                 s_final=ARC)
        for name in steady_plans
    ]


@pytest.fixture(scope="session")
def steady_results(steady_scenarios):
    """All three plans tracked on the same thermal plant."""
    return compare(steady_scenarios)
