"""Dynamic transition trajectories by direct multiple shooting.

The maneuver between two steady drifting circles is solved as a finite
optimization problem: N RK4 steps of the full dynamic state (body states,
pose, actuator positions, tread temperature, traveled distance), slew-rate
inputs, a free uniform step duration, slew and transition-distance costs,
terminal curvature/sideslip conditions, and actuator box bounds.

The solve has two stages: an augmented-Lagrangian pass over the multiple
shooting variables (bound-constrained inner problems solved by L-BFGS-B with
a finite-difference constraint Jacobian, batched over all shooting intervals)
and a single-shooting Gauss-Newton polish that drives the terminal residual
to machine level.  The returned states are an exact re-integration of the
returned inputs, so the dynamics defects are zero by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize
import scipy.sparse

from .errors import ConvergenceError, InfeasibleError
from .integrate import rk4
from .limits import ActuatorLimits, default_limits
from .model import ControlInput, VehicleState, vehicle_derivatives
from .params import ParamSet

__all__ = [
    "IX",
    "TransitionProblem",
    "DynamicTrajectory",
    "PlannerConfig",
    "extended_rates",
    "rk4_step",
    "solve_transition",
    "initial_guess",
    "load_planner_config",
]


class IX:
    """Index map of the extended dynamic state vector."""

    Vx, Vy, r, psi, omega, dFz, X, Y, delta, tau, theta, s = range(12)
    n = 12


#: characteristic magnitudes used to scale the decision variables
_X_SCALE = np.array([10.0, 10.0, 1.0, 1.0, 30.0, 1e4,
                     10.0, 10.0, 1.0, 1000.0, 100.0, 10.0])
_U_SCALE = np.array([1.0, 1000.0])
_H_SCALE = 0.1

#: weight of the constraint violation in the accepted-iterate merit
MERIT_PENALTY = 1e7


def extended_rates(params: ParamSet, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Time derivative of the extended state (scalar, strict model)."""
    state = VehicleState(Vx=x[IX.Vx], Vy=x[IX.Vy], r=x[IX.r], omega=x[IX.omega],
                         dFz=x[IX.dFz], theta_r=x[IX.theta],
                         psi=x[IX.psi], X=x[IX.X], Y=x[IX.Y])
    inp = ControlInput(delta=x[IX.delta], Fxf=0.0, tau=x[IX.tau])
    rates = vehicle_derivatives(params, state, inp, kappa=0.0)
    out = np.empty(IX.n)
    out[IX.Vx] = rates.Vx
    out[IX.Vy] = rates.Vy
    out[IX.r] = rates.r
    out[IX.psi] = x[IX.r]
    out[IX.omega] = rates.omega
    out[IX.dFz] = rates.dFz
    out[IX.X] = rates.X
    out[IX.Y] = rates.Y
    out[IX.delta] = u[0]
    out[IX.tau] = u[1]
    out[IX.theta] = rates.theta_r
    out[IX.s] = state.V
    return out


def rk4_step(params: ParamSet, x: np.ndarray, u: np.ndarray, h: float) -> np.ndarray:
    """One RK4 step of the extended dynamics under a held slew-rate input."""
    if h <= 0.0:
        raise ValueError("step size must be positive")
    return rk4(lambda y: extended_rates(params, y, u), np.asarray(x, dtype=float), h)


# ---------------------------------------------------------------------------
# batched (vectorized) dynamics used only inside the optimizer
# ---------------------------------------------------------------------------

def _rates_batch(params: ParamSet, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized twin of :func:`extended_rates` over leading axes.

    Mildly guarded (speed floor, load clipping) so that intermediate
    optimizer iterates cannot leave the model's domain; the guards are
    inactive at any physically sensible solution, which the final scalar
    re-integration verifies.
    """
    vp, tp, thp = params.vehicle, params.tire, params.thermal
    Vx = np.maximum(x[..., IX.Vx], 1.0)
    Vy = x[..., IX.Vy]
    r = x[..., IX.r]
    psi = x[..., IX.psi]
    omega = x[..., IX.omega]
    dFz = x[..., IX.dFz]
    delta = x[..., IX.delta]
    tau = x[..., IX.tau]
    theta = x[..., IX.theta]

    mg = vp.m * vp.g
    F_zf = np.clip(vp.b * mg / vp.L - dFz, 1.0, mg)
    F_zr = np.clip(vp.a * mg / vp.L + dFz, 1.0, mg)

    alpha_f = np.arctan((Vy + vp.a * r) / Vx) - delta
    C_alpha = np.maximum(tp.C_alpha1 * F_zf + tp.C_alpha0, 1e3)
    F_ymax = tp.mu_f * F_zf
    tan_af = np.tan(np.clip(alpha_f, -1.5, 1.5))
    tan_slide = 3.0 * F_ymax / C_alpha
    cubic = (-C_alpha * tan_af
             + C_alpha ** 2 / (3.0 * F_ymax) * np.abs(tan_af) * tan_af
             - C_alpha ** 3 / (27.0 * F_ymax ** 2) * tan_af ** 3)
    F_yf = np.where(np.abs(tan_af) > tan_slide,
                    -F_ymax * np.sign(alpha_f), cubic)

    alpha_r = np.arctan((Vy - vp.b * r) / Vx)
    kappa_r = np.arctan((vp.Re * omega - Vx) / Vx)
    kp1 = np.maximum(kappa_r + 1.0, 0.05)
    mu_r = np.maximum(thp.mu_r1 * theta + thp.mu_r0, 0.05)
    gx = tp.Cx * kappa_r / kp1
    gy = tp.Cy * np.tan(alpha_r) / kp1
    f = np.hypot(gx, gy)
    limit = mu_r * F_zr
    F = np.where(f <= 3.0 * limit,
                 f - f * f / (3.0 * limit) + f ** 3 / (27.0 * limit * limit),
                 limit)
    f_safe = np.where(f > 0.0, f, 1.0)
    F_xr = np.where(f > 0.0, F * gx / f_safe, 0.0)
    F_yr = np.where(f > 0.0, -F * gy / f_safe, 0.0)

    sin_d, cos_d = np.sin(delta), np.cos(delta)
    dVx = (-F_yf * sin_d + F_xr) / vp.m + r * Vy
    dVy = (F_yf * cos_d + F_yr) / vp.m - r * Vx
    dr = (vp.a * F_yf * cos_d - vp.b * F_yr) / vp.Iz
    domega = (tau - vp.Re * F_xr) / vp.J
    ddFz = -vp.Kz * (dFz - (vp.h_cg / vp.L) * (F_xr - F_yf * sin_d))
    V_sx = Vx * kappa_r
    V_sy = -Vx * np.tan(alpha_r)
    Q = thp.alpha_tire * (V_sx * F_xr + V_sy * F_yr) + thp.eps_tire * F_zr * Vx
    dtheta = (Q - thp.KA_tire * (theta - thp.theta_out)) / thp.C_tire

    out = np.empty_like(x)
    out[..., IX.Vx] = dVx
    out[..., IX.Vy] = dVy
    out[..., IX.r] = dr
    out[..., IX.psi] = r
    out[..., IX.omega] = domega
    out[..., IX.dFz] = ddFz
    out[..., IX.X] = Vx * np.cos(psi) - Vy * np.sin(psi)
    out[..., IX.Y] = Vx * np.sin(psi) + Vy * np.cos(psi)
    out[..., IX.delta] = u[..., 0]
    out[..., IX.tau] = u[..., 1]
    out[..., IX.theta] = dtheta
    out[..., IX.s] = np.hypot(Vx, Vy)
    return out


def _rk4_batch(params, x, u, h):
    """Batched RK4 step; ``h`` broadcasts over the leading axes."""
    h = np.asarray(h)[..., None]
    k1 = _rates_batch(params, x, u)
    k2 = _rates_batch(params, x + 0.5 * h * k1, u)
    k3 = _rates_batch(params, x + 0.5 * h * k2, u)
    k4 = _rates_batch(params, x + h * k3, u)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# ---------------------------------------------------------------------------
# planner configuration (file keys mirror the symbol table: angles in deg,
# torques in kN m, torque-slew weight in (kN m/s)^-2)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlannerConfig:
    k_ddelta: float = 1e4   # (rad/s)^-2
    k_dtau: float = 1e-4    # (N m/s)^-2
    k_s: float = 200.0      # m^-2
    n_steps: int = 100
    h_min: float = 0.01     # s
    h_max: float = 0.1      # s
    limits: ActuatorLimits = field(default_factory=default_limits)


# file key -> (attribute, scale to SI)
_PLANNER_KEYS = {
    "k_ddelta":   ("k_ddelta", 1.0),
    "k_dtau":     ("k_dtau", 1e-6),          # (kN m/s)^-2 -> (N m/s)^-2
    "k_s":        ("k_s", 1.0),
    "n_steps":    ("n_steps", 1.0),
    "h_min":      ("h_min", 1.0),
    "h_max":      ("h_max", 1.0),
    "delta_min":  ("delta_min", math.pi / 180.0),
    "delta_max":  ("delta_max", math.pi / 180.0),
    "ddelta_min": ("ddelta_min", math.pi / 180.0),
    "ddelta_max": ("ddelta_max", math.pi / 180.0),
    "tau_min":    ("tau_min", 1e3),          # kN m -> N m
    "tau_max":    ("tau_max", 1e3),
    "dtau_min":   ("dtau_min", 1e3),
    "dtau_max":   ("dtau_max", 1e3),
}


def load_planner_config(path) -> PlannerConfig:
    """Load planner settings; keys absent from the file keep their defaults."""
    from .errors import ConfigError
    from .params import parse_keyvalue

    values = parse_keyvalue(path)
    unknown = sorted(set(values) - set(_PLANNER_KEYS))
    if unknown:
        raise ConfigError(f"{path}: unknown planner keys: {', '.join(unknown)}")
    scalars = {}
    lim_kwargs = {}
    for key, raw in values.items():
        attr, scale = _PLANNER_KEYS[key]
        value = raw * scale
        if attr == "n_steps":
            scalars[attr] = int(raw)
        elif attr.startswith(("delta", "ddelta", "tau", "dtau")):
            lim_kwargs[attr] = value
        else:
            scalars[attr] = value
    limits = replace(default_limits(), **lim_kwargs)
    return PlannerConfig(limits=limits, **scalars)


# ---------------------------------------------------------------------------
# problem and result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionProblem:
    params: ParamSet
    x_initial: np.ndarray       # (12,) extended state at hand-over
    kappa_final: float          # 1/m, signed curvature of the next circle
    beta_final: float           # rad
    k_ddelta: float = 1e4       # (rad/s)^-2
    k_dFxf: float = 0.0         # front braking unused; kept for the record
    k_dtau: float = 1e-4        # (N m/s)^-2
    k_s: float = 200.0          # m^-2, transition-distance weight
    N: int = 100
    h_min: float = 0.01         # s
    h_max: float = 0.1          # s
    limits: ActuatorLimits = field(default_factory=default_limits)
    y_center_target: float | None = None  # figure-8: lateral center alignment

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if not (self.h_min > 0.0 and self.h_min < self.h_max):
            raise ValueError("step-duration bounds out of order")
        for w in (self.k_ddelta, self.k_dFxf, self.k_dtau, self.k_s):
            if w < 0.0:
                raise ValueError("cost weights must be non-negative")
        object.__setattr__(self, "x_initial",
                           np.asarray(self.x_initial, dtype=float).copy())
        if self.x_initial.shape != (IX.n,):
            raise ValueError(f"x_initial must have {IX.n} components")


@dataclass(frozen=True)
class DynamicTrajectory:
    """Optimized transition: states are the exact RK4 rollout of the inputs."""

    t: np.ndarray          # (N+1,)
    states: np.ndarray     # (N+1, 12)
    inputs: np.ndarray     # (N, 3): [ddelta, dFxf, dtau]; dFxf is zero
    h: float               # uniform step duration, s
    J: float               # total cost
    input_cost: float
    distance_cost: float
    terminal_residual: float   # max abs scaled terminal-constraint violation
    max_defect: float          # max abs scaled dynamics defect of the states
    n_outer: int
    merit_history: np.ndarray  # (n_outer, 2): [cost, max scaled violation]

    @property
    def s(self) -> np.ndarray:
        return self.states[:, IX.s]

    @property
    def transition_length(self) -> float:
        return float(self.states[-1, IX.s] - self.states[0, IX.s])

    def s_span(self) -> tuple[float, float]:
        return float(self.s[0]), float(self.s[-1])

    def _course_curvature(self) -> np.ndarray:
        beta = np.arctan2(self.states[:, IX.Vy], self.states[:, IX.Vx])
        chi = np.unwrap(self.states[:, IX.psi] + beta)
        return np.gradient(chi, self.s)

    def sample(self, s: float):
        """Reference (state, input, curvature) at arc length s by linear
        interpolation over the (strictly increasing) traveled distance."""
        grid = self.s
        x = np.array([np.interp(s, grid, self.states[:, j]) for j in range(IX.n)])
        kappa = float(np.interp(s, grid, self._course_curvature()))
        beta = math.atan2(x[IX.Vy], x[IX.Vx])
        state = VehicleState(Vx=x[IX.Vx], Vy=x[IX.Vy], r=x[IX.r],
                             omega=x[IX.omega], dFz=x[IX.dFz],
                             theta_r=x[IX.theta], e=0.0, s=s, dpsi=-beta,
                             psi=x[IX.psi], X=x[IX.X], Y=x[IX.Y])
        inp = ControlInput(delta=x[IX.delta], Fxf=0.0, tau=x[IX.tau])
        return state, inp, kappa


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

def initial_guess(problem: TransitionProblem, x_target: np.ndarray,
                  h0: float = 0.045) -> tuple[np.ndarray, np.ndarray, float]:
    """Straight-line interpolation of the body states toward the target
    equilibrium, with the pose integrated from the interpolated rates."""
    N = problem.N
    x0 = problem.x_initial
    lam = np.linspace(0.0, 1.0, N + 1)
    X = np.empty((N + 1, IX.n))
    for j in (IX.Vx, IX.Vy, IX.r, IX.omega, IX.dFz, IX.delta, IX.tau, IX.theta):
        X[:, j] = x0[j] + lam * (x_target[j] - x0[j])
    # pose and distance by explicit integration of the interpolated motion
    psi = np.empty(N + 1)
    psi[0] = x0[IX.psi]
    Xp = np.empty(N + 1)
    Yp = np.empty(N + 1)
    sp = np.empty(N + 1)
    Xp[0], Yp[0], sp[0] = x0[IX.X], x0[IX.Y], x0[IX.s]
    for k in range(N):
        psi[k + 1] = psi[k] + h0 * X[k, IX.r]
        Xp[k + 1] = Xp[k] + h0 * (X[k, IX.Vx] * math.cos(psi[k])
                                  - X[k, IX.Vy] * math.sin(psi[k]))
        Yp[k + 1] = Yp[k] + h0 * (X[k, IX.Vx] * math.sin(psi[k])
                                  + X[k, IX.Vy] * math.cos(psi[k]))
        sp[k + 1] = sp[k] + h0 * math.hypot(X[k, IX.Vx], X[k, IX.Vy])
    X[:, IX.psi] = psi
    X[:, IX.X] = Xp
    X[:, IX.Y] = Yp
    X[:, IX.s] = sp
    U = np.diff(X[:, [IX.delta, IX.tau]], axis=0) / h0
    U[-1] = 0.0
    return X, U, h0


def _terminal_residual(problem: TransitionProblem, xN: np.ndarray) -> np.ndarray:
    V = math.hypot(xN[IX.Vx], xN[IX.Vy])
    beta = math.atan2(xN[IX.Vy], xN[IX.Vx])
    g = [xN[IX.r] - problem.kappa_final * V,
         beta - problem.beta_final]
    if problem.y_center_target is not None:
        chi = xN[IX.psi] + beta
        y_center = xN[IX.Y] + math.cos(chi) / problem.kappa_final
        g.append((y_center - problem.y_center_target) / 10.0)
    return np.array(g)


class _Transcription:
    """Scaled decision vector, constraints, cost, and FD Jacobians."""

    def __init__(self, problem: TransitionProblem):
        self.p = problem
        N = problem.N
        self.N = N
        self.nx = (N + 1) * IX.n
        self.nu = N * 2
        self.nz = self.nx + self.nu + 1
        self.ng = 2 + (1 if problem.y_center_target is not None else 0)
        self.nc = N * IX.n + self.ng
        self._sparse_idx = None

    # -- packing ----------------------------------------------------------
    def pack(self, X, U, h):
        return np.concatenate([(X / _X_SCALE).ravel(),
                               (U / _U_SCALE).ravel(),
                               [h / _H_SCALE]])

    def unpack(self, z):
        N = self.N
        X = z[:self.nx].reshape(N + 1, IX.n) * _X_SCALE
        U = z[self.nx:self.nx + self.nu].reshape(N, 2) * _U_SCALE
        h = float(z[-1]) * _H_SCALE
        return X, U, h

    def bounds(self):
        N, p = self.N, self.p
        lim = p.limits
        lb = np.full(self.nz, -np.inf)
        ub = np.full(self.nz, np.inf)
        Xl = np.full((N + 1, IX.n), -np.inf)
        Xu = np.full((N + 1, IX.n), np.inf)
        Xl[:, IX.Vx], Xu[:, IX.Vx] = 2.0, 30.0          # keep the model sane
        Xl[:, IX.omega], Xu[:, IX.omega] = 1.0, 400.0
        Xl[:, IX.theta], Xu[:, IX.theta] = 0.0, 120.0
        Xl[:, IX.delta], Xu[:, IX.delta] = lim.delta_min, lim.delta_max
        Xl[:, IX.tau], Xu[:, IX.tau] = lim.tau_min, lim.tau_max
        Xl[0], Xu[0] = p.x_initial, p.x_initial        # pinned initial state
        lb[:self.nx] = (Xl / _X_SCALE).ravel()
        ub[:self.nx] = (Xu / _X_SCALE).ravel()
        Ul = np.tile([lim.ddelta_min, lim.dtau_min], (N, 1))
        Uu = np.tile([lim.ddelta_max, lim.dtau_max], (N, 1))
        Ul[-1], Uu[-1] = 0.0, 0.0                      # zero slew at hand-off
        lb[self.nx:self.nx + self.nu] = (Ul / _U_SCALE).ravel()
        ub[self.nx:self.nx + self.nu] = (Uu / _U_SCALE).ravel()
        lb[-1], ub[-1] = p.h_min / _H_SCALE, p.h_max / _H_SCALE
        return lb, ub

    # -- cost -------------------------------------------------------------
    def cost(self, z):
        X, U, h = self.unpack(z)
        input_cost = float(self.p.k_ddelta * (U[:, 0] ** 2).sum()
                           + self.p.k_dtau * (U[:, 1] ** 2).sum())
        dist = X[-1, IX.s] - self.p.x_initial[IX.s]
        distance_cost = float(self.p.k_s * dist ** 2)
        return input_cost + distance_cost

    def cost_grad(self, z):
        X, U, h = self.unpack(z)
        g = np.zeros(self.nz)
        gU = np.column_stack([2.0 * self.p.k_ddelta * U[:, 0],
                              2.0 * self.p.k_dtau * U[:, 1]]) * _U_SCALE
        g[self.nx:self.nx + self.nu] = gU.ravel()
        dist = X[-1, IX.s] - self.p.x_initial[IX.s]
        g[self.nx - IX.n + IX.s] = 2.0 * self.p.k_s * dist * _X_SCALE[IX.s]
        return g

    def cost_hess(self, z):
        """Exact (diagonal, constant) Hessian of the quadratic cost."""
        d = np.zeros(self.nz)
        u_diag = np.tile([2.0 * self.p.k_ddelta * _U_SCALE[0] ** 2,
                          2.0 * self.p.k_dtau * _U_SCALE[1] ** 2], self.N)
        d[self.nx:self.nx + self.nu] = u_diag
        d[self.nx - IX.n + IX.s] = 2.0 * self.p.k_s * _X_SCALE[IX.s] ** 2
        return scipy.sparse.diags(d)

    # -- constraints ------------------------------------------------------
    def constraints(self, z):
        X, U, h = self.unpack(z)
        phi = _rk4_batch(self.p.params, X[:-1], U, h)
        defects = (X[1:] - phi) / _X_SCALE
        return np.concatenate([defects.ravel(),
                               _terminal_residual(self.p, X[-1])])

    def jacobian(self, z):
        """Sparse-structured FD Jacobian of the scaled constraints.

        Returns (D, E, Fh, G) with D[k] = d defect_k / d x_k (12x12),
        E[k] = d defect_k / d u_k (12x2), Fh[k] = d defect_k / dh (12,),
        G = d terminal / d x_N (ng x 12); the x_{k+1} block is the identity.
        """
        X, U, h = self.unpack(z)
        N = self.N
        eps = 1e-6
        n_pert = 2 * IX.n + 2 * 2 + 2
        xb = np.repeat(X[:-1, None, :], n_pert, axis=1)
        ub = np.repeat(U[:, None, :], n_pert, axis=1)
        hb = np.full((N, n_pert), h)
        col = 0
        for j in range(IX.n):
            xb[:, col, j] += eps * _X_SCALE[j]
            xb[:, col + 1, j] -= eps * _X_SCALE[j]
            col += 2
        for j in range(2):
            ub[:, col, j] += eps * _U_SCALE[j]
            ub[:, col + 1, j] -= eps * _U_SCALE[j]
            col += 2
        hb[:, col] += eps * _H_SCALE
        hb[:, col + 1] -= eps * _H_SCALE
        phi = _rk4_batch(self.p.params, xb, ub, hb) / _X_SCALE
        D = np.empty((N, IX.n, IX.n))
        E = np.empty((N, IX.n, 2))
        col = 0
        for j in range(IX.n):
            D[:, :, j] = -(phi[:, col] - phi[:, col + 1]) / (2.0 * eps)
            col += 2
        for j in range(2):
            E[:, :, j] = -(phi[:, col] - phi[:, col + 1]) / (2.0 * eps)
            col += 2
        Fh = -(phi[:, col] - phi[:, col + 1]) / (2.0 * eps)

        xN = X[-1]
        G = np.empty((self.ng, IX.n))
        for j in range(IX.n):
            dx = eps * _X_SCALE[j]
            xp, xm = xN.copy(), xN.copy()
            xp[j] += dx
            xm[j] -= dx
            # the scaled perturbation makes this a scaled-coordinate column
            G[:, j] = (_terminal_residual(self.p, xp)
                       - _terminal_residual(self.p, xm)) / (2.0 * eps)
        return D, E, Fh, G

    def jac_sparse(self, z):
        """Assembled scipy.sparse constraint Jacobian in scaled coordinates."""
        D, E, Fh, G = self.jacobian(z)
        N = self.N
        if self._sparse_idx is None:
            kk, ii, jj = np.indices((N, IX.n, IX.n))
            rows_D = (kk * IX.n + ii).ravel()
            cols_D = (kk * IX.n + jj).ravel()
            rows_I = np.arange(N * IX.n)
            cols_I = rows_I + IX.n
            kk, ii, jj = np.indices((N, IX.n, 2))
            rows_E = (kk * IX.n + ii).ravel()
            cols_E = (self.nx + kk * 2 + jj).ravel()
            rows_h = np.arange(N * IX.n)
            cols_h = np.full(N * IX.n, self.nz - 1)
            rows_G = np.repeat(N * IX.n + np.arange(self.ng), IX.n)
            cols_G = np.tile(self.nx - IX.n + np.arange(IX.n), self.ng)
            self._sparse_idx = (
                np.concatenate([rows_D, rows_I, rows_E, rows_h, rows_G]),
                np.concatenate([cols_D, cols_I, cols_E, cols_h, cols_G]))
        data = np.concatenate([D.ravel(), np.ones(N * IX.n), E.ravel(),
                               Fh.ravel(), G.ravel()])
        rows, cols = self._sparse_idx
        return scipy.sparse.csr_matrix((data, (rows, cols)),
                                       shape=(self.nc, self.nz))

    def jac_t_vec(self, jac, v):
        """J^T v without forming J; v has one entry per scaled constraint."""
        D, E, Fh, G = jac
        N = self.N
        vd = v[:N * IX.n].reshape(N, IX.n)
        vg = v[N * IX.n:]
        out = np.zeros(self.nz)
        xpart = out[:self.nx].reshape(N + 1, IX.n)
        xpart[:-1] += np.einsum("kij,ki->kj", D, vd)
        xpart[1:] += vd  # identity blocks
        xpart[-1] += G.T @ vg
        out[self.nx:self.nx + self.nu] = np.einsum("kij,ki->kj", E, vd).ravel()
        out[-1] = float((Fh * vd).sum())
        return out


def solve_transition(problem: TransitionProblem, guess=None,
                     max_outer: int = 40, verbose: bool = False) -> DynamicTrajectory:
    """Solve the transition problem; see the module docstring for the method."""
    tr = _Transcription(problem)
    if guess is None:
        raise ValueError("solve_transition requires an initial guess "
                         "(use initial_guess with a target equilibrium)")
    X0, U0, h0 = guess
    z = tr.pack(np.asarray(X0, float), np.asarray(U0, float), float(h0))
    lb, ub = tr.bounds()
    z = np.clip(z, lb, ub)

    # accepted-iterate log; the exact-penalty merit (cost + MERIT_PENALTY *
    # violation) does not increase across these points
    merit_history = [[tr.cost(z),
                      float(np.max(np.abs(tr.constraints(z))))]]

    # Exact diagonal cost Hessian; constraint curvature dropped (Gauss-Newton
    # style) so every trust-region subproblem is a convex QP.  The solve runs
    # in two phases: pure feasibility first (the lerp guess has large
    # defects), then the cost from the feasible point, scaled down so the
    # optimizer's internal tolerances see O(1) numbers.
    zero_hess = scipy.sparse.csr_matrix((tr.nz, tr.nz))
    nlc = scipy.optimize.NonlinearConstraint(
        tr.constraints, 0.0, 0.0, jac=tr.jac_sparse,
        hess=lambda x, v: zero_hess)
    bounds = scipy.optimize.Bounds(lb, ub)
    opts = {"gtol": 1e-8, "xtol": 1e-14, "verbose": 2 if verbose else 0}
    res1 = scipy.optimize.minimize(
        lambda zz: 0.0, z, jac=lambda zz: np.zeros(tr.nz),
        hess=lambda zz: zero_hess, method="trust-constr",
        constraints=[nlc], bounds=bounds,
        options={**opts, "maxiter": max_outer * 13})
    merit_history.append([tr.cost(res1.x),
                          float(np.max(np.abs(tr.constraints(res1.x))))])
    cs = 1e-3
    res = scipy.optimize.minimize(
        lambda zz: tr.cost(zz) * cs, res1.x,
        jac=lambda zz: tr.cost_grad(zz) * cs,
        hess=lambda zz: tr.cost_hess(zz) * cs,
        method="trust-constr", constraints=[nlc], bounds=bounds,
        options={**opts, "maxiter": max_outer * 18,
                 "initial_constr_penalty": 1e4})
    z = res.x
    c = tr.constraints(z)
    viol = float(np.max(np.abs(c)))
    if merit_history[-1][0] + MERIT_PENALTY * merit_history[-1][1] < \
            tr.cost(z) + MERIT_PENALTY * viol:
        # keep the better of the two accepted points
        z = res1.x
        c = tr.constraints(z)
        viol = float(np.max(np.abs(c)))
    merit_history.append([tr.cost(z), viol])
    n_outer = int(res1.niter + res.niter)
    if viol > 2e-3:
        raise ConvergenceError(
            f"transition solve stalled with constraint violation {viol:.2e} "
            f"({res.message})")

    X, U, h = tr.unpack(z)
    X, U, h = _polish(problem, X, U, h)

    # exact rollout through the strict scalar integrator
    states = np.empty((problem.N + 1, IX.n))
    states[0] = problem.x_initial
    for k in range(problem.N):
        states[k + 1] = rk4_step(problem.params, states[k], U[k], h)
    term = _terminal_residual(problem, states[-1])
    defect = np.max(np.abs((states[1:] -
                            _rk4_batch(problem.params, states[:-1], U, h))
                           / _X_SCALE))
    _check_limits(problem, states, U)

    input_cost = float(problem.k_ddelta * (U[:, 0] ** 2).sum()
                       + problem.k_dtau * (U[:, 1] ** 2).sum())
    dist = states[-1, IX.s] - states[0, IX.s]
    distance_cost = float(problem.k_s * dist ** 2)
    inputs3 = np.column_stack([U[:, 0], np.zeros(problem.N), U[:, 1]])
    if float(np.max(np.abs(term))) > 1e-6:
        raise ConvergenceError(
            f"terminal conditions not met: residual {np.max(np.abs(term)):.2e}")
    merit_history.append([input_cost + distance_cost,
                          float(np.max(np.abs(term)))])
    return DynamicTrajectory(
        t=h * np.arange(problem.N + 1),
        states=states, inputs=inputs3, h=h,
        J=input_cost + distance_cost,
        input_cost=input_cost, distance_cost=distance_cost,
        terminal_residual=float(np.max(np.abs(term))),
        max_defect=float(defect),
        n_outer=n_outer,
        merit_history=np.array(merit_history))


def _check_limits(problem, states, U):
    lim = problem.limits
    tol = 1e-8
    checks = [
        ("delta", states[:, IX.delta], lim.delta_min, lim.delta_max),
        ("tau", states[:, IX.tau], lim.tau_min, lim.tau_max),
        ("ddelta", U[:, 0], lim.ddelta_min, lim.ddelta_max),
        ("dtau", U[:, 1], lim.dtau_min, lim.dtau_max),
    ]
    for name, vals, lo, hi in checks:
        if np.min(vals) < lo - tol or np.max(vals) > hi + tol:
            raise InfeasibleError(
                f"optimized trajectory violates the {name} bound "
                f"([{np.min(vals):.4g}, {np.max(vals):.4g}] vs [{lo:.4g}, {hi:.4g}])")


def _polish(problem, X, U, h, max_iter: int = 10):
    """Single-shooting Gauss-Newton: drive the terminal residual to machine
    level with a least-norm correction of the inputs and step duration."""
    N = problem.N
    p_scale = np.concatenate([np.tile(_U_SCALE, N), [_H_SCALE]])

    def rollout_batch(P):
        # P: (m, 2N+1) scaled parameter rows -> terminal states (m, 12)
        m = P.shape[0]
        Ub = (P[:, :2 * N].reshape(m, N, 2)) * _U_SCALE
        hb = P[:, -1] * _H_SCALE
        x = np.repeat(problem.x_initial[None, :], m, axis=0)
        for k in range(N):
            x = _rk4_batch(problem.params, x, Ub[:, k], hb)
        return x

    p = np.concatenate([(U / _U_SCALE).ravel(), [h / _H_SCALE]])
    free = np.ones(p.size, dtype=bool)
    free[2 * (N - 1):2 * N] = False  # u_N stays pinned at zero
    for _ in range(max_iter):
        xN = rollout_batch(p[None, :])[0]
        g = _terminal_residual(problem, xN)
        if np.max(np.abs(g)) < 1e-11:
            break
        idx = np.flatnonzero(free)
        eps = 1e-6
        P = np.repeat(p[None, :], 2 * idx.size + 1, axis=0)
        for c, j in enumerate(idx):
            P[1 + 2 * c, j] += eps
            P[2 + 2 * c, j] -= eps
        xNs = rollout_batch(P)
        Jg = np.empty((g.size, idx.size))
        for c in range(idx.size):
            gp = _terminal_residual(problem, xNs[1 + 2 * c])
            gm = _terminal_residual(problem, xNs[2 + 2 * c])
            Jg[:, c] = (gp - gm) / (2.0 * eps)
        step, *_ = np.linalg.lstsq(Jg, -g, rcond=None)
        p[idx] += step
        # keep the polished point inside the box
        Pl = np.concatenate([np.tile([problem.limits.ddelta_min,
                                      problem.limits.dtau_min], N),
                             [problem.h_min]]) / p_scale
        Pu = np.concatenate([np.tile([problem.limits.ddelta_max,
                                      problem.limits.dtau_max], N),
                             [problem.h_max]]) / p_scale
        p = np.clip(p, Pl, Pu)
    U_out = (p[:2 * N].reshape(N, 2)) * _U_SCALE
    h_out = float(p[-1]) * _H_SCALE
    return X, U_out, h_out
