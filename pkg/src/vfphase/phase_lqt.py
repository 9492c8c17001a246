"""Minimum-jerk phase update via iterative linearized quadratic tracking.

The phase evolves through a chain of three discrete integrators driven by a
jerk command. Each control period solves a small batch least-squares problem
over a receding window: roll out the window, linearize the tracking residual,
take the regularized Newton step on the stacked controls, and advance the
window with a warm start. Keeping an explicit penalty on the phase
acceleration inside the residual keeps the per-step Jacobian full rank.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    InvalidParameterError,
    NumericalDivergenceError,
    SolverFailureError,
)
from .path_model import ConstraintPath


@dataclass(frozen=True)
class PhaseState:
    s: float
    s_dot: float = 0.0
    s_ddot: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.s_dot, self.s_ddot], dtype=float)

    @classmethod
    def from_array(cls, a) -> "PhaseState":
        return cls(s=float(a[0]), s_dot=float(a[1]), s_ddot=float(a[2]))


@dataclass(frozen=True)
class LqtSystem:
    """Triple-integrator dynamics and their batch rollout operators."""

    A: np.ndarray               # (3, 3)
    B: np.ndarray               # (3,)
    S_s: np.ndarray             # (3 T, 3): stacked powers of A
    S_u: np.ndarray             # (3 T, T): lower block triangular control map
    dt: float
    window: int

    @property
    def S_u_split(self):
        """S_u rows grouped by state component: three contiguous (T, T) arrays."""
        cached = getattr(self, "_su_split", None)
        if cached is None:
            cached = tuple(
                np.ascontiguousarray(self.S_u[k::3, :]) for k in range(3)
            )
            object.__setattr__(self, "_su_split", cached)
        return cached


@dataclass
class LqtConfig:
    """Weights and solver limits for the jerk-command tracker.

    c1 weighs the position error, c2 the velocity error, c3 regularizes the
    phase acceleration toward zero, r_weight penalizes the jerk command.
    """

    c1: np.ndarray = field(default_factory=lambda: 47.8 * np.ones(3))
    c2: np.ndarray = field(default_factory=lambda: 0.02 * np.ones(3))
    c3: float = 0.01
    r_weight: float = 1e-5
    window: int = 50
    delta_min: float = 1e-6
    max_inner: int = 5
    dt: float = 1e-3
    single_advance: bool = False    # strict mode: one integrator advance per call

    def __post_init__(self):
        self.c1 = np.broadcast_to(np.asarray(self.c1, dtype=float), (3,)).copy()
        self.c2 = np.broadcast_to(np.asarray(self.c2, dtype=float), (3,)).copy()
        if np.any(self.c1 <= 0):
            raise InvalidParameterError("c1 must be positive componentwise")
        if np.any(self.c2 < 0) or self.c3 < 0 or self.r_weight < 0:
            raise InvalidParameterError("weights must be nonnegative")
        if self.window < 2:
            raise InvalidParameterError("window must be >= 2")
        if self.max_inner < 1:
            raise InvalidParameterError("max_inner must be >= 1")
        if self.dt <= 0:
            raise InvalidParameterError("dt must be positive")

    def weight_vector(self) -> np.ndarray:
        return np.concatenate([self.c1, self.c2, [self.c3]])

    def to_dict(self) -> dict:
        return {
            "c1": [float(v) for v in self.c1],
            "c2": [float(v) for v in self.c2],
            "c3": float(self.c3),
            "r_weight": float(self.r_weight),
            "window": int(self.window),
            "delta_min": float(self.delta_min),
            "max_inner": int(self.max_inner),
            "dt": float(self.dt),
            "single_advance": bool(self.single_advance),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LqtConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise InvalidParameterError(f"unknown LQT config fields: {sorted(unknown)}")
        return cls(**doc)


@dataclass(frozen=True)
class LqtStepReport:
    new_state: PhaseState
    inner_iterations: int
    final_delta_u_norm: float
    cost_before: float
    cost_after: float
    converged: bool
    inner_costs: tuple = ()     # window cost at the start of each inner iteration


def build_system(dt: float, window: int) -> LqtSystem:
    """Assemble the integrator matrices and their trajectory-level operators."""
    if dt <= 0:
        raise InvalidParameterError("dt must be positive")
    if window < 2:
        raise InvalidParameterError("window must be >= 2")
    A = np.array([[1.0, dt, dt * dt / 2.0], [0.0, 1.0, dt], [0.0, 0.0, 1.0]])
    B = np.array([0.0, 0.0, dt])
    powers = [np.eye(3)]
    for _ in range(window - 1):
        powers.append(A @ powers[-1])
    S_s = np.vstack(powers)
    S_u = np.zeros((3 * window, window))
    for i in range(window):
        for j in range(i):
            S_u[3 * i:3 * i + 3, j] = powers[i - j - 1] @ B
    return LqtSystem(A=A, B=B, S_s=S_s, S_u=S_u, dt=dt, window=window)


def rollout(sys: LqtSystem, s1, u) -> np.ndarray:
    """Batch window prediction: (T, 3) states from the initial state and controls."""
    s1 = np.asarray(s1, dtype=float).reshape(3)
    u = np.asarray(u, dtype=float).reshape(sys.window)
    return (sys.S_s @ s1 + sys.S_u @ u).reshape(sys.window, 3)


def residual_and_jacobian(path: ConstraintPath, x, x_dot, traj):
    """Tracking residual and its state Jacobian along a window of phase states.

    Per window step the residual stacks the position error, velocity error and
    phase acceleration; the measured position and velocity are held constant
    over the window. Returns f with shape (T, 7) and J with shape (T, 7, 3).
    """
    x = np.asarray(x, dtype=float)
    x_dot = np.asarray(x_dot, dtype=float)
    traj = np.asarray(traj, dtype=float).reshape(-1, 3)
    s, sd, sdd = traj[:, 0], traj[:, 1], traj[:, 2]
    m, mp, mpp = path.eval_many(s, 2)
    f = np.concatenate(
        [x[None, :] - m, x_dot[None, :] - mp * sd[:, None], sdd[:, None]], axis=1
    )
    J = np.zeros((traj.shape[0], 7, 3))
    J[:, 0:3, 0] = -mp
    J[:, 3:6, 0] = -mpp * sd[:, None]
    J[:, 3:6, 1] = -mp
    J[:, 6, 2] = 1.0
    return f, J


def delta_u_star(sys: LqtSystem, f, J, weights, r_weight, u) -> np.ndarray:
    """Regularized Newton step on the stacked window controls."""
    T = sys.window
    f = np.asarray(f, dtype=float).reshape(T, 7)
    J = np.asarray(J, dtype=float).reshape(T, 7, 3)
    u = np.asarray(u, dtype=float).reshape(T)
    w = np.asarray(weights, dtype=float).reshape(7)
    Su = sys.S_u.reshape(T, 3, T)
    G = np.einsum("tij,tjk->tik", J, Su)               # (T, 7, T) rows of J S_u
    WG = w[None, :, None] * G
    M = np.einsum("tiy,tiz->yz", G, WG) + r_weight * np.eye(T)
    rhs = -np.einsum("tiy,ti->y", G, w[None, :] * f) - r_weight * u
    try:
        factor = cho_factor(M, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SolverFailureError("normal equations not positive definite") from exc
    return cho_solve(factor, rhs)


def _solve_window(sys: LqtSystem, f, J, weights, r_weight, u) -> np.ndarray:
    """Structured equivalent of delta_u_star.

    Exploits the fixed sparsity of the residual Jacobian (position block,
    velocity block, acceleration row) to collapse the normal equations into a
    few diagonally scaled (T, T) products. Kept numerically identical to the
    reference implementation (see the regression test pinning the two).
    """
    T = sys.window
    w = np.asarray(weights, dtype=float)
    c1, c2, c3 = w[0:3], w[3:6], w[6]
    mp = -J[:, 0:3, 0]                    # tangent per window step
    a = -J[:, 3:6, 0]                     # curvature * phase velocity term
    e, ed, sdd = f[:, 0:3], f[:, 3:6], f[:, 6]
    su0, su1, su2 = sys.S_u_split

    alpha = np.einsum("tj,tj->t", mp, c1[None, :] * mp) + np.einsum(
        "tj,tj->t", a, c2[None, :] * a
    )
    beta = np.einsum("tj,tj->t", a, c2[None, :] * mp)
    gamma = np.einsum("tj,tj->t", mp, c2[None, :] * mp)
    M = su0.T @ (alpha[:, None] * su0)
    cross = su0.T @ (beta[:, None] * su1)
    M += cross + cross.T
    M += su1.T @ (gamma[:, None] * su1)
    M += c3 * (su2.T @ su2)
    M[np.diag_indices_from(M)] += r_weight

    v0 = -np.einsum("tj,tj->t", mp, c1[None, :] * e) - np.einsum(
        "tj,tj->t", a, c2[None, :] * ed
    )
    v1 = -np.einsum("tj,tj->t", mp, c2[None, :] * ed)
    v2 = c3 * sdd
    rhs = -(su0.T @ v0 + su1.T @ v1 + su2.T @ v2) - r_weight * u
    try:
        factor = cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SolverFailureError("normal equations not positive definite") from exc
    return cho_solve(factor, rhs, check_finite=False)


def lqt_cost(f, u, weights, r_weight) -> float:
    f = np.asarray(f, dtype=float).reshape(-1, 7)
    u = np.asarray(u, dtype=float)
    w = np.asarray(weights, dtype=float).reshape(7)
    return float(np.sum(w[None, :] * f * f) + r_weight * np.sum(u * u))


class LqtTracker:
    """One tracking session: owns the phase state and the warm-start window.

    A session must be stepped from a single thread; distinct sessions are
    independent.
    """

    def __init__(self, path: ConstraintPath, cfg: LqtConfig,
                 state: PhaseState | None = None):
        self.path = path
        self.cfg = cfg
        self.sys = build_system(cfg.dt, cfg.window)
        self.state = state if state is not None else PhaseState(0.0)
        self.u = np.zeros(cfg.window)

    def reset(self, state: PhaseState):
        self.state = state
        self.u = np.zeros(self.cfg.window)

    def step(self, x, x_dot) -> LqtStepReport:
        cfg, sys = self.cfg, self.sys
        w = cfg.weight_vector()
        s1 = self.state.as_array()
        u = self.u.copy()
        inner_costs = []
        converged = False
        du_norm = 0.0
        iterations = 0
        for _ in range(cfg.max_inner):
            traj = rollout(sys, s1, u)
            f, J = residual_and_jacobian(self.path, x, x_dot, traj)
            inner_costs.append(lqt_cost(f, u, w, cfg.r_weight))
            du = _solve_window(sys, f, J, w, cfg.r_weight, u)
            du_norm = float(np.linalg.norm(du))
            iterations += 1
            if du_norm < cfg.delta_min:
                converged = True
                break
            u = u + du
            if not cfg.single_advance:
                s1 = sys.A @ s1 + sys.B * u[0]
                u = np.concatenate([u[1:], u[-1:]])
        if cfg.single_advance:
            s1 = sys.A @ s1 + sys.B * u[0]
            u = np.concatenate([u[1:], u[-1:]])
        cost_before = inner_costs[0]

        if not np.all(np.isfinite(s1)):
            raise NumericalDivergenceError(f"phase state diverged: {s1}")

        # box constraint on the phase domain: clamp and kill boundary velocity
        if s1[0] < 0.0 or s1[0] > self.path.length:
            s1[0] = float(np.clip(s1[0], 0.0, self.path.length))
            s1[1] = 0.0

        traj = rollout(sys, s1, u)
        f, _ = residual_and_jacobian(self.path, x, x_dot, traj)
        cost_after = lqt_cost(f, u, w, cfg.r_weight)
        new_state = PhaseState.from_array(s1)
        self.state = new_state
        self.u = u
        return LqtStepReport(
            new_state=new_state,
            inner_iterations=iterations,
            final_delta_u_norm=du_norm,
            cost_before=float(cost_before),
            cost_after=float(cost_after),
            converged=converged,
            inner_costs=tuple(inner_costs),
        )


def lqt_step(path: ConstraintPath, x, x_dot, state: PhaseState,
             cfg: LqtConfig) -> LqtStepReport:
    """Single cold-start tracking step (zero-initialized control window)."""
    tracker = LqtTracker(path, cfg, state)
    return tracker.step(x, x_dot)
