"""Simulated admittance-controlled end effector and synthetic operator forces.

Stands in for the physical robot: a point mass with damping and a spring to
the commanded reference, driven by an interaction force. The synthetic
operator models produce that force from a target schedule, a recorded trace,
or an external source.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    EndOfScenario,
    InvalidParameterError,
    NumericalDivergenceError,
)


@dataclass(frozen=True)
class AdmittanceParams:
    m: float = 1.5          # simulated inertia [kg]
    b: float = 15.0         # damping [N s/m]
    k: float = 200.0        # stiffness toward the reference [N/m]

    def __post_init__(self):
        if self.m <= 0 or self.b <= 0 or self.k <= 0:
            raise InvalidParameterError("admittance parameters must be positive")


@dataclass
class PlantState:
    pos: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float).reshape(3).copy()
        self.vel = np.asarray(self.vel, dtype=float).reshape(3).copy()

    @classmethod
    def at_rest(cls, pos) -> "PlantState":
        return cls(pos=np.asarray(pos, dtype=float), vel=np.zeros(3))


def admittance_step(p: AdmittanceParams, st: PlantState, m_ref, force,
                    dt: float) -> PlantState:
    """Semi-implicit Euler step of the mass-damper-spring response."""
    if dt <= 0:
        raise InvalidParameterError("dt must be positive")
    m_ref = np.asarray(m_ref, dtype=float)
    force = np.asarray(force, dtype=float)
    acc = (force - p.b * st.vel - p.k * (st.pos - m_ref)) / p.m
    vel = st.vel + acc * dt
    pos = st.pos + vel * dt
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
        raise NumericalDivergenceError("plant state diverged")
    return PlantState(pos=pos, vel=vel)


def mechanical_energy(p: AdmittanceParams, st: PlantState, m_ref) -> float:
    e = st.pos - np.asarray(m_ref, dtype=float)
    return 0.5 * p.m * float(st.vel @ st.vel) + 0.5 * p.k * float(e @ e)


@dataclass
class HumanModel:
    """Synthetic operator producing the interaction force.

    spring-to-target pulls the end effector toward a scheduled target point;
    an optional curve-keeping spring stands in for the operator's own visual
    correction toward the task curve (significant only when no fixture holds
    the end effector there). scripted-force replays a recorded trace; external
    returns whatever was last injected.
    """

    kind: str = "spring-to-target"
    k_h: float = 50.0                                   # operator stiffness [N/m]
    f_max: float = 30.0                                 # saturation [N]
    target: Callable[[float], np.ndarray] | None = None
    trace_t: np.ndarray | None = None
    trace_f: np.ndarray | None = None
    curve_gain: float = 0.0                             # curve-keeping stiffness [N/m]
    curve_nearest: Callable[[np.ndarray], np.ndarray] | None = None
    external_force: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.kind not in ("spring-to-target", "scripted-force", "external"):
            raise InvalidParameterError(f"unknown human model kind {self.kind!r}")
        if self.kind == "spring-to-target" and self.k_h <= 0:
            raise InvalidParameterError("spring-to-target requires k_h > 0")
        if self.kind == "scripted-force":
            if self.trace_t is None or self.trace_f is None:
                raise InvalidParameterError("scripted-force requires a trace")
            self.trace_t = np.asarray(self.trace_t, dtype=float)
            self.trace_f = np.asarray(self.trace_f, dtype=float).reshape(-1, 3)


def saturate(force: np.ndarray, f_max: float) -> np.ndarray:
    norm = float(np.linalg.norm(force))
    if norm > f_max > 0:
        return force * (f_max / norm)
    return force


def human_force(model: HumanModel, st: PlantState, t: float) -> np.ndarray:
    if model.kind == "spring-to-target":
        if model.target is None:
            raise InvalidParameterError("spring-to-target requires a target schedule")
        force = model.k_h * (np.asarray(model.target(t), dtype=float) - st.pos)
        if model.curve_gain > 0.0 and model.curve_nearest is not None:
            force = force + model.curve_gain * (model.curve_nearest(st.pos) - st.pos)
        return saturate(force, model.f_max)
    if model.kind == "scripted-force":
        if t > model.trace_t[-1] + 1e-12:
            raise EndOfScenario(f"scripted force trace ends at t={model.trace_t[-1]}")
        return np.array(
            [np.interp(t, model.trace_t, model.trace_f[:, j]) for j in range(3)]
        )
    return np.asarray(model.external_force, dtype=float).copy()


def read_force_csv(filename):
    """Load a scripted force trace from CSV columns t,Fx,Fy,Fz."""
    data = np.loadtxt(filename, delimiter=",", skiprows=_header_rows(filename))
    data = np.atleast_2d(data)
    if data.shape[1] != 4:
        raise InvalidParameterError("force CSV must have columns t,Fx,Fy,Fz")
    return data[:, 0], data[:, 1:4]


def _header_rows(filename) -> int:
    with open(filename, "r", encoding="utf-8") as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.strip().split(",")]
        return 0
    except ValueError:
        return 1
