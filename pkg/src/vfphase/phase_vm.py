"""Virtual-mechanism phase update: a spring-damper coupling whose force is kept
orthogonal to the curve tangent, yielding a closed-form phase rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .path_model import ConstraintPath


@dataclass(frozen=True)
class VmParams:
    k: float = 200.0        # spring stiffness [N/m], shared with the admittance plant
    b: float = 15.0         # damping [N s/m]

    def __post_init__(self):
        if self.k <= 0 or self.b <= 0:
            raise InvalidParameterError("stiffness and damping must be positive")


def vm_phase_rate(path: ConstraintPath, x, x_dot, s: float, p: VmParams) -> float:
    """Phase rate that zeroes the tangential component of the coupling force."""
    x = np.asarray(x, dtype=float)
    x_dot = np.asarray(x_dot, dtype=float)
    m, mp = path.eval_many([s], 1)
    tangent = mp[0]
    num = p.k * float(tangent @ (x - m[0])) + p.b * float(tangent @ x_dot)
    return num / (p.b * float(tangent @ tangent))


def vm_step(path: ConstraintPath, x, x_dot, s: float, p: VmParams, dt: float) -> float:
    """Explicit Euler integration of the phase rate, clamped to the domain."""
    if dt <= 0:
        raise InvalidParameterError("dt must be positive")
    rate = vm_phase_rate(path, x, x_dot, s, p)
    return float(np.clip(s + rate * dt, 0.0, path.length))


def coupling_force(path: ConstraintPath, x, x_dot, s: float, s_dot: float,
                   p: VmParams) -> np.ndarray:
    """Spring-damper force between the end effector and the moving curve point."""
    x = np.asarray(x, dtype=float)
    x_dot = np.asarray(x_dot, dtype=float)
    m, mp = path.eval_many([s], 1)
    return p.k * (x - m[0]) + p.b * (x_dot - mp[0] * s_dot)
