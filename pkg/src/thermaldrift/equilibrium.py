"""Drifting equilibria and the quasi-steady reference sweep.

An equilibrium fixes the turn radius, the sideslip angle, and the tread
temperature, and solves the five dynamic-state derivatives (yaw, speed,
sideslip, wheel speed, weight transfer) to zero over the unknowns
(r, omega, dFz, delta, tau).  The quasi-steady sweep then walks the tread
temperature along the path, re-solving the equilibrium at every node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundsError,
    ConvergenceError,
    InfeasibleError,
    ModelDomainError,
)
from .limits import ActuatorLimits, default_limits
from .model import (
    VELOCITY_FLOOR,
    ControlInput,
    VehicleState,
    friction_coefficient,
    heat_generation,
    thermal_derivative,
    tire_forces,
    vehicle_derivatives,
)
from .params import ParamSet

__all__ = ["DriftEquilibrium", "QuasiSteadyTrajectory",
           "find_equilibrium", "quasi_steady_sweep", "dynamic_residual",
           "thermal_fixed_point"]

# Newton settings.  The residual tolerance is well below the 1e-8 contract so
# that downstream forward-integration checks start from machine-level rest.
_MAX_ITER = 100
_TOL_RESIDUAL = 1e-10
_TOL_STEP = 1e-12


@dataclass(frozen=True)
class DriftEquilibrium:
    """A root of the dynamic-state derivatives at fixed radius/sideslip/temp."""

    radius: float        # signed turn radius, m (positive = counter-clockwise)
    beta: float          # sideslip angle, rad
    theta_r: float       # tread temperature the root was solved at, degC
    mu_r: float          # evaluated rear friction coefficient
    r: float             # yaw rate, rad/s
    omega: float         # rear wheel speed, rad/s
    dFz: float           # weight transfer, N
    delta: float         # steering angle, rad
    tau: float           # rear axle torque, N m
    residual_norm: float

    @property
    def V(self) -> float:
        return self.r * self.radius

    def state(self, **pose) -> VehicleState:
        """Vehicle state at the equilibrium, riding the path (e = 0)."""
        return VehicleState.from_speed_beta(
            self.V, self.beta, r=self.r, omega=self.omega, dFz=self.dFz,
            theta_r=self.theta_r, dpsi=-self.beta, **pose)

    def input(self) -> ControlInput:
        return ControlInput(delta=self.delta, Fxf=0.0, tau=self.tau)

    def unknowns(self) -> np.ndarray:
        return np.array([self.r, self.omega, self.dFz, self.delta, self.tau])


def dynamic_residual(params: ParamSet, state: VehicleState,
                     inp: ControlInput) -> np.ndarray:
    """Derivatives of (r, V, beta, omega, dFz) at a state; zero at equilibrium."""
    rates = vehicle_derivatives(params, state, inp, kappa=0.0)
    V = state.V
    dV = (state.Vx * rates.Vx + state.Vy * rates.Vy) / V
    dbeta = (state.Vx * rates.Vy - state.Vy * rates.Vx) / (V * V)
    return np.array([rates.r, dV, dbeta, rates.omega, rates.dFz])


def _default_guess(radius: float, params: ParamSet) -> np.ndarray:
    V_target = 9.0  # m/s, lands in the drift basin for ~15 m radii
    return np.array([
        V_target / radius,
        V_target * 1.3 / params.vehicle.Re,
        0.0,
        -math.copysign(math.radians(10.0), radius),
        1000.0,
    ])


def find_equilibrium(params: ParamSet, radius: float, beta_target: float,
                     theta_r: float, guess=None,
                     limits: ActuatorLimits | None = None) -> DriftEquilibrium:
    """Damped-Newton root of the drifting equilibrium conditions.

    Unknowns are (r, omega, dFz, delta, tau); the speed is tied to the yaw
    rate by V = r * radius and the sideslip is pinned to ``beta_target``.
    The front braking force is not used and stays at zero.
    """
    if abs(radius) < 5.0:
        raise ValueError("|radius| must be at least 5 m")
    if abs(beta_target) >= math.radians(80.0):
        raise ValueError("|beta_target| must be below 80 deg")
    mu_r = friction_coefficient(params.thermal, theta_r)
    limits = limits or default_limits()

    def residual(z):
        r, omega, dFz, delta, tau = z
        V = r * radius
        if V < VELOCITY_FLOOR:
            return None
        state = VehicleState.from_speed_beta(
            V, beta_target, r=r, omega=omega, dFz=dFz, theta_r=theta_r)
        inp = ControlInput(delta=delta, Fxf=0.0, tau=tau)
        try:
            return dynamic_residual(params, state, inp)
        except ModelDomainError:
            return None

    z = np.asarray(guess, dtype=float).copy() if guess is not None \
        else _default_guess(radius, params)
    res = residual(z)
    if res is None:
        raise ValueError("initial guess is outside the model's domain")
    norm = float(np.linalg.norm(res))

    for _ in range(_MAX_ITER):
        if norm < _TOL_RESIDUAL:
            break
        # central-difference Jacobian, step scaled per unknown
        J = np.empty((5, 5))
        ok = True
        for i in range(5):
            h = 1e-6 * max(1.0, abs(z[i]))
            zp, zm = z.copy(), z.copy()
            zp[i] += h
            zm[i] -= h
            rp, rm = residual(zp), residual(zm)
            if rp is None or rm is None:
                ok = False
                break
            J[:, i] = (rp - rm) / (2.0 * h)
        if not ok:
            raise ConvergenceError("Jacobian evaluation left the model domain")
        try:
            step = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(J, -res, rcond=None)
        # backtracking line search on the residual norm
        alpha = 1.0
        accepted = False
        while alpha > 1e-6:
            z_trial = z + alpha * step
            res_trial = residual(z_trial)
            if res_trial is not None:
                norm_trial = float(np.linalg.norm(res_trial))
                if norm_trial < (1.0 - 1e-4 * alpha) * norm:
                    z, res, norm = z_trial, res_trial, norm_trial
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break
        if float(np.linalg.norm(alpha * step)) < _TOL_STEP:
            break

    if norm > 1e-8:
        # distinguish a saturated-tire infeasibility from plain stagnation
        r, omega, dFz, delta, tau = z
        state = VehicleState.from_speed_beta(
            max(r * radius, VELOCITY_FLOOR), beta_target,
            r=r, omega=omega, dFz=dFz, theta_r=theta_r)
        try:
            forces = tire_forces(params, state, ControlInput(delta=delta, tau=tau))
            saturated = forces.f > 3.0 * forces.mu_r * forces.F_zr
        except ModelDomainError:
            saturated = False
        if saturated:
            raise InfeasibleError(
                f"no equilibrium at radius={radius} m, beta={beta_target:.3f} "
                f"rad, theta={theta_r:.1f} degC: rear tire saturated with "
                f"residual {norm:.2e}")
        raise ConvergenceError(
            f"equilibrium solve stalled with residual {norm:.2e}")

    r, omega, dFz, delta, tau = (float(v) for v in z)
    if not limits.delta_min <= delta <= limits.delta_max:
        raise BoundsError(
            f"equilibrium steering {math.degrees(delta):.1f} deg exceeds "
            "the steering limit", bound_name="delta")
    if not limits.tau_min <= tau <= limits.tau_max:
        raise BoundsError(
            f"equilibrium torque {tau:.0f} N m exceeds the torque limit",
            bound_name="tau")
    return DriftEquilibrium(
        radius=radius, beta=beta_target, theta_r=theta_r, mu_r=mu_r,
        r=r, omega=omega, dFz=dFz, delta=delta, tau=tau,
        residual_norm=norm)


def thermal_fixed_point(params: ParamSet, radius: float, beta_target: float,
                        lo: float | None = None, hi: float = 119.0,
                        tol: float = 1e-10) -> DriftEquilibrium:
    """Equilibrium whose tread temperature is also stationary.

    Bisects the thermal rate over the temperature; the returned equilibrium
    has all dynamic-state derivatives and the temperature derivative at zero.
    """
    thp = params.thermal

    def theta_rate(theta: float) -> float:
        eq = find_equilibrium(params, radius, beta_target, theta)
        state = eq.state()
        forces = tire_forces(params, state, eq.input())
        Q = heat_generation(thp, state.Vx, forces.alpha_r, forces.kappa_r,
                            forces.F_xr, forces.F_yr, forces.F_zr)
        return thermal_derivative(thp, theta, Q)

    a = thp.theta_out if lo is None else lo
    b = hi
    fa, fb = theta_rate(a), theta_rate(b)
    if fa * fb > 0.0:
        raise ConvergenceError(
            f"no thermal fixed point bracketed in [{a}, {b}] degC")
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = theta_rate(m)
        if fa * fm <= 0.0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return find_equilibrium(params, radius, beta_target, 0.5 * (a + b))


@dataclass(frozen=True)
class QuasiSteadyTrajectory:
    """Arc-length grid of drifting equilibria with an evolving temperature."""

    radius: float
    beta_target: float
    ds: float
    thermal: bool                    # False = friction frozen at theta[0]
    s: np.ndarray                    # (n,) node arc lengths, m
    t: np.ndarray                    # (n,) elapsed time, s
    theta: np.ndarray                # (n,) tread temperature, degC
    Q: np.ndarray                    # (n,) heat rate at each node, W
    equilibria: list = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.equilibria)

    def kappa(self, k: int) -> float:
        return 1.0 / self.radius

    def node_state(self, k: int) -> VehicleState:
        """Reference state at node k, posed on the canonical circle."""
        from .paths import CirclePath
        eq = self.equilibria[k]
        x, y, phi = CirclePath(self.radius).pose(float(self.s[k]))
        return eq.state(s=float(self.s[k]), psi=phi - eq.beta, X=x, Y=y)

    def node_input(self, k: int) -> ControlInput:
        return self.equilibria[k].input()

    def s_span(self) -> tuple[float, float]:
        return float(self.s[0]), float(self.s[-1])

    def sample(self, s: float):
        """Reference (state, input, curvature) at arc length s.

        Equilibria are taken from the nearest node (they are not safely
        interpolable); the pose is placed at the exact requested s.
        """
        from .paths import CirclePath
        k = int(np.clip(np.round((s - self.s[0]) / self.ds), 0, self.n_nodes - 1))
        eq = self.equilibria[k]
        x, y, phi = CirclePath(self.radius).pose(s)
        state = eq.state(s=s, psi=phi - eq.beta, X=x, Y=y)
        return state, eq.input(), 1.0 / self.radius


def quasi_steady_sweep(params: ParamSet, radius: float, beta_target: float,
                       theta0: float, total_arc: float, ds: float = 0.25, *,
                       thermal: bool = True, mu_const: float | None = None,
                       guess=None,
                       limits: ActuatorLimits | None = None) -> QuasiSteadyTrajectory:
    """Sweep equilibria along a circle while the tread temperature evolves.

    With ``mu_const`` set, planning runs at a frozen friction coefficient:
    the temperature is pinned to the map's equivalent temperature so every
    node carries a consistent (theta, mu) pair.  ``thermal=False`` freezes
    the temperature at ``theta0`` instead.
    """
    if ds <= 0.0:
        raise ValueError("ds must be positive")
    if total_arc < ds:
        raise ValueError("total_arc must be at least one step")
    thp = params.thermal
    if mu_const is not None:
        theta0 = (mu_const - thp.mu_r0) / thp.mu_r1
        thermal = False

    n = int(round(total_arc / ds)) + 1
    s = np.arange(n) * ds
    t = np.zeros(n)
    theta = np.zeros(n)
    Q = np.zeros(n)
    equilibria = []

    theta_k = float(theta0)
    z_guess = guess
    for k in range(n):
        try:
            eq = find_equilibrium(params, radius, beta_target, theta_k,
                                  guess=z_guess, limits=limits)
        except (ConvergenceError, InfeasibleError, BoundsError) as exc:
            raise type(exc)(f"sweep node {k} (s={s[k]:.2f} m): {exc}") from exc
        state = eq.state()
        forces = tire_forces(params, state, eq.input())
        Q_k = heat_generation(thp, state.Vx, forces.alpha_r, forces.kappa_r,
                              forces.F_xr, forces.F_yr, forces.F_zr)
        theta[k] = theta_k
        Q[k] = Q_k
        equilibria.append(eq)
        if k + 1 < n:
            dt = ds / eq.V  # ds/dt on the path with e = 0
            t[k + 1] = t[k] + dt
            if thermal:
                theta_k = theta_k + dt * thermal_derivative(thp, theta_k, Q_k)
        z_guess = eq.unknowns()

    return QuasiSteadyTrajectory(
        radius=radius, beta_target=beta_target, ds=ds, thermal=thermal,
        s=s, t=t, theta=theta, Q=Q, equilibria=equilibria)
