"""Continuous-time vehicle, tire, and tread-temperature model.

Single track model with rear wheel-speed dynamics, first-order longitudinal
weight transfer, a Fiala brush front tire, a combined-slip brush rear tire
whose friction coefficient is an affine function of the tread temperature,
and a lumped-parameter tread energy balance.  All functions here are pure;
state and parameters are immutable values.

Sign conventions: x forward, y left, yaw positive counter-clockwise.  A
positive slip quantity produces a tire force through the brush law such that
the force always opposes the sliding velocity of the tread over the road
(this is what makes the frictional heating term non-negative).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import (
    DegenerateLoadError,
    ModelDomainError,
    PathSingularityError,
    VelocityFloorError,
)
from .params import ParamSet, ThermalParams, TireParams, VehicleParams

__all__ = [
    "VELOCITY_FLOOR",
    "VehicleState",
    "ControlInput",
    "TireForces",
    "StateRates",
    "vertical_loads",
    "weight_transfer_derivative",
    "front_slip_angle",
    "front_cornering_stiffness",
    "fiala_lateral_force",
    "rear_slip_quantities",
    "rear_combined_forces",
    "friction_coefficient",
    "heat_generation",
    "thermal_derivative",
    "tire_forces",
    "vehicle_derivatives",
]

#: below this longitudinal speed the slip-angle arctangents are meaningless
VELOCITY_FLOOR = 0.5  # m/s


@dataclass(frozen=True)
class VehicleState:
    """Full dynamic state.

    The planar velocity may be read either as body components (Vx, Vy) or as
    speed/sideslip (V, beta); the dynamics are evaluated in (Vx, Vy).
    """

    Vx: float          # longitudinal velocity, m/s
    Vy: float          # lateral velocity, m/s
    r: float           # yaw rate, rad/s
    omega: float       # rear wheel speed, rad/s
    dFz: float         # longitudinal weight transfer, N
    theta_r: float     # rear tread temperature, degC
    e: float = 0.0     # lateral path error, m
    s: float = 0.0     # arc length along the path, m
    dpsi: float = 0.0  # heading error to the path tangent, rad
    psi: float = 0.0   # inertial heading, rad
    X: float = 0.0     # inertial position, m
    Y: float = 0.0     # inertial position, m

    @property
    def V(self) -> float:
        """Speed of the center of mass, m/s."""
        return math.hypot(self.Vx, self.Vy)

    @property
    def beta(self) -> float:
        """Sideslip angle, rad."""
        return math.atan2(self.Vy, self.Vx)

    @classmethod
    def from_speed_beta(cls, V: float, beta: float, **kwargs) -> "VehicleState":
        return cls(Vx=V * math.cos(beta), Vy=V * math.sin(beta), **kwargs)

    def replace(self, **kwargs) -> "VehicleState":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class ControlInput:
    delta: float      # road wheel steering angle, rad
    Fxf: float = 0.0  # front braking force, N (<= 0 when braking)
    tau: float = 0.0  # rear axle torque, N m

    def replace(self, **kwargs) -> "ControlInput":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class TireForces:
    F_yf: float         # front lateral force, N
    F_xr: float         # rear longitudinal force, N
    F_yr: float         # rear lateral force, N
    F_zf: float         # front vertical load, N
    F_zr: float         # rear vertical load, N
    f: float            # combined-slip demand magnitude, N
    F_ymax: float       # front lateral saturation level, N
    alpha_slide: float  # front full-sliding slip angle, rad
    alpha_f: float      # front slip angle, rad
    alpha_r: float      # rear slip angle, rad
    kappa_r: float      # rear slip ratio
    mu_r: float         # evaluated rear friction coefficient


@dataclass(frozen=True)
class StateRates:
    """Time derivative of :class:`VehicleState` (same field layout)."""

    Vx: float
    Vy: float
    r: float
    omega: float
    dFz: float
    theta_r: float
    e: float = 0.0
    s: float = 0.0
    dpsi: float = 0.0
    psi: float = 0.0
    X: float = 0.0
    Y: float = 0.0


def vertical_loads(vp: VehicleParams, dFz: float) -> tuple[float, float]:
    """Front/rear axle loads under weight transfer; their sum is m*g."""
    static_front = vp.b * vp.m * vp.g / vp.L
    static_rear = vp.a * vp.m * vp.g / vp.L
    F_zf = static_front - dFz
    F_zr = static_rear + dFz
    if F_zf <= 0.0 or F_zr <= 0.0:
        raise DegenerateLoadError(
            f"axle load non-positive (F_zf={F_zf:.1f} N, F_zr={F_zr:.1f} N)"
        )
    return F_zf, F_zr


def weight_transfer_derivative(vp: VehicleParams, dFz: float,
                               F_xr: float, F_yf: float, delta: float) -> float:
    """First-order lag toward the quasi-static transfer level."""
    target = (vp.h_cg / vp.L) * (F_xr - F_yf * math.sin(delta))
    return -vp.Kz * (dFz - target)


def _check_floor(Vx: float) -> None:
    if Vx < VELOCITY_FLOOR:
        raise VelocityFloorError(
            f"Vx={Vx:.3f} m/s below the {VELOCITY_FLOOR} m/s slip-model floor"
        )


def front_slip_angle(Vx: float, Vy: float, r: float, delta: float, a: float) -> float:
    _check_floor(Vx)
    return math.atan((Vy + a * r) / Vx) - delta


def front_cornering_stiffness(tp: TireParams, F_zf: float) -> float:
    """Load-dependent front cornering stiffness (affine in the front load)."""
    if F_zf < 0.0:
        raise DegenerateLoadError(f"negative front load {F_zf:.1f} N")
    C_alpha = tp.C_alpha1 * F_zf + tp.C_alpha0
    if C_alpha <= 0.0:
        raise ModelDomainError(
            f"front cornering stiffness {C_alpha:.1f} N/rad non-positive "
            f"at F_zf={F_zf:.1f} N"
        )
    return C_alpha


def fiala_lateral_force(C_alpha: float, F_ymax: float, alpha: float) -> float:
    """Fiala brush lateral force, cubic up to full sliding, then saturated.

    Continuous and odd in alpha; the cubic meets -F_ymax*sign(alpha) exactly
    at alpha_slide = atan(3*F_ymax/C_alpha).
    """
    tan_a = math.tan(alpha)
    tan_slide = 3.0 * F_ymax / C_alpha
    if abs(tan_a) > tan_slide:
        return -F_ymax * math.copysign(1.0, alpha)
    return (-C_alpha * tan_a
            + C_alpha * C_alpha / (3.0 * F_ymax) * abs(tan_a) * tan_a
            - C_alpha ** 3 / (27.0 * F_ymax * F_ymax) * tan_a ** 3)


def rear_slip_quantities(vp: VehicleParams, Vx: float, Vy: float,
                         r: float, omega: float) -> tuple[float, float]:
    """Rear slip angle and slip ratio.

    The slip ratio is wrapped in an arctangent, which keeps it bounded for a
    locked wheel (kappa_r -> -pi/4 at omega = 0).
    """
    _check_floor(Vx)
    alpha_r = math.atan((Vy - vp.b * r) / Vx)
    kappa_r = math.atan((vp.Re * omega - Vx) / Vx)
    if kappa_r <= -1.0:
        raise ModelDomainError(f"rear slip ratio {kappa_r:.3f} <= -1")
    return alpha_r, kappa_r


def rear_combined_forces(tp: TireParams, mu_r: float, F_zr: float,
                         alpha_r: float, kappa_r: float) -> tuple[float, float, float]:
    """Combined-slip brush forces on the rear axle.

    Returns (F_xr, F_yr, f).  The resultant magnitude never exceeds
    mu_r*F_zr, and each component opposes its slip quantity's sliding
    direction (F_xr has the sign of kappa_r; F_yr the opposite sign of
    alpha_r).
    """
    if F_zr <= 0.0:
        raise DegenerateLoadError(f"rear load {F_zr:.1f} N non-positive")
    if mu_r <= 0.0:
        raise ModelDomainError(f"rear friction {mu_r:.4f} non-positive")
    if kappa_r <= -1.0:
        raise ModelDomainError(f"rear slip ratio {kappa_r:.3f} <= -1")
    gx = tp.Cx * kappa_r / (kappa_r + 1.0)
    gy = tp.Cy * math.tan(alpha_r) / (kappa_r + 1.0)
    f = math.hypot(gx, gy)
    if f == 0.0:
        return 0.0, 0.0, 0.0  # removable singularity: no slip, no force
    limit = mu_r * F_zr
    if f <= 3.0 * limit:
        F = f - f * f / (3.0 * limit) + f ** 3 / (27.0 * limit * limit)
    else:
        F = limit
    F_xr = F * gx / f
    F_yr = -F * gy / f
    return F_xr, F_yr, f


def friction_coefficient(thp: ThermalParams, theta_r: float) -> float:
    """Rear friction coefficient from the temperature map (affine)."""
    mu_r = thp.mu_r1 * theta_r + thp.mu_r0
    if mu_r <= 0.0:
        raise ModelDomainError(
            f"friction map gives mu_r={mu_r:.4f} at theta={theta_r:.1f} degC"
        )
    return mu_r


def heat_generation(thp: ThermalParams, Vx: float,
                    alpha_r: float, kappa_r: float,
                    F_xr: float, F_yr: float, F_zr: float) -> float:
    """Tread heating power: partitioned slip loss plus rolling resistance.

    The slip velocities carry the sign of the wheel sliding over the road, so
    the brush forces oppose them and both slip products are non-negative.
    """
    V_sx = Vx * kappa_r              # ~ Re*omega - Vx, wheel surplus speed
    V_sy = -Vx * math.tan(alpha_r)   # ~ -(Vy - b*r), opposes the axle slide
    slip_power = V_sx * F_xr + V_sy * F_yr
    return thp.alpha_tire * slip_power + thp.eps_tire * F_zr * Vx


def thermal_derivative(thp: ThermalParams, theta_r: float, Q_tire: float) -> float:
    """Tread temperature rate from the lumped energy balance, K/s."""
    return (Q_tire - thp.KA_tire * (theta_r - thp.theta_out)) / thp.C_tire


def tire_forces(params: ParamSet, state: VehicleState, inp: ControlInput) -> TireForces:
    """Evaluate every tire quantity at the given state and input."""
    vp, tp, thp = params.vehicle, params.tire, params.thermal
    F_zf, F_zr = vertical_loads(vp, state.dFz)
    alpha_f = front_slip_angle(state.Vx, state.Vy, state.r, inp.delta, vp.a)
    C_alpha = front_cornering_stiffness(tp, F_zf)
    F_ymax = tp.mu_f * F_zf
    alpha_slide = math.atan(3.0 * F_ymax / C_alpha)
    F_yf = fiala_lateral_force(C_alpha, F_ymax, alpha_f)
    alpha_r, kappa_r = rear_slip_quantities(vp, state.Vx, state.Vy, state.r, state.omega)
    mu_r = friction_coefficient(thp, state.theta_r)
    F_xr, F_yr, f = rear_combined_forces(tp, mu_r, F_zr, alpha_r, kappa_r)
    return TireForces(
        F_yf=F_yf, F_xr=F_xr, F_yr=F_yr, F_zf=F_zf, F_zr=F_zr, f=f,
        F_ymax=F_ymax, alpha_slide=alpha_slide,
        alpha_f=alpha_f, alpha_r=alpha_r, kappa_r=kappa_r, mu_r=mu_r,
    )


def vehicle_derivatives(params: ParamSet, state: VehicleState, inp: ControlInput,
                        kappa: float = 0.0) -> StateRates:
    """Full state derivative at one point (pure function of its arguments).

    ``kappa`` is the reference path curvature at the vehicle's arc length; it
    only affects the path states (e, s, dpsi).
    """
    vp = params.vehicle
    forces = tire_forces(params, state, inp)
    sin_d, cos_d = math.sin(inp.delta), math.cos(inp.delta)

    dVx = ((-forces.F_yf * sin_d + inp.Fxf * cos_d + forces.F_xr) / vp.m
           + state.r * state.Vy)
    dVy = ((forces.F_yf * cos_d + inp.Fxf * sin_d + forces.F_yr) / vp.m
           - state.r * state.Vx)
    dr = ((vp.a * forces.F_yf * cos_d + vp.a * inp.Fxf * sin_d
           - vp.b * forces.F_yr) / vp.Iz)
    domega = (inp.tau - vp.Re * forces.F_xr) / vp.J
    ddFz = weight_transfer_derivative(vp, state.dFz, forces.F_xr,
                                      forces.F_yf, inp.delta)
    Q = heat_generation(params.thermal, state.Vx,
                        forces.alpha_r, forces.kappa_r,
                        forces.F_xr, forces.F_yr, forces.F_zr)
    dtheta = thermal_derivative(params.thermal, state.theta_r, Q)

    sin_p, cos_p = math.sin(state.dpsi), math.cos(state.dpsi)
    denom = 1.0 - kappa * state.e
    if abs(denom) < 1e-6:
        raise PathSingularityError(
            f"1 - kappa*e = {denom:.2e}: lateral error reached the path's "
            "center of curvature"
        )
    de = state.Vy * cos_p + state.Vx * sin_p
    ds = (state.Vx * cos_p - state.Vy * sin_p) / denom
    ddpsi = state.r - kappa * ds

    sin_psi, cos_psi = math.sin(state.psi), math.cos(state.psi)
    dX = state.Vx * cos_psi - state.Vy * sin_psi
    dY = state.Vx * sin_psi + state.Vy * cos_psi

    return StateRates(Vx=dVx, Vy=dVy, r=dr, omega=domega, dFz=ddFz,
                      theta_r=dtheta, e=de, s=ds, dpsi=ddpsi,
                      psi=state.r, X=dX, Y=dY)
