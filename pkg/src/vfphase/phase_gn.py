"""Gauss-Newton nearest-point phase updater and the closed-form phase velocity.

The update keeps only the first-order Jacobian term of the distance Hessian,
which is exactly what makes it fast on the convex region and discontinuous
across Euclidean distance singularities; no damping or line search is applied
on purpose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularPhaseVelocityError
from .path_model import ConstraintPath

GN_TOL = 1e-9               # |delta s| convergence threshold [m]
STALL_GRADIENT_TOL = 1e-6   # first-order condition residual deemed non-optimal


@dataclass(frozen=True)
class GnState:
    s: float
    last_delta_s: float = 0.0
    stalled: bool = False
    iterations: int = 0


def gn_step(path: ConstraintPath, x, state: GnState, max_inner: int = 10) -> GnState:
    """Iterate the nearest-point update from the current phase.

    Each inner step moves by the tangential alignment m'(s)'(x - m(s)); with the
    unit-speed parametrization this is the full Gauss-Newton step. Iteration
    stops on convergence, on hitting a domain boundary, or after max_inner
    steps.
    """
    if max_inner < 1:
        raise ValueError("max_inner must be >= 1")
    x = np.asarray(x, dtype=float)
    s = float(np.clip(state.s, 0.0, path.length))
    delta = 0.0
    iterations = 0
    for _ in range(max_inner):
        m, mp = path.eval_many([s], 1)
        delta = float(mp[0] @ (x - m[0]))
        iterations += 1
        if abs(delta) < GN_TOL:
            break
        s_new = float(np.clip(s + delta, 0.0, path.length))
        if s_new == s:
            # pinned at a boundary with the update pointing outward
            break
        s = s_new

    interior = 0.0 < s < path.length
    stalled = False
    if abs(delta) < GN_TOL and interior:
        m, mp = path.eval_many([s], 1)
        g = float(mp[0] @ (x - m[0]))
        stalled = abs(g) > STALL_GRADIENT_TOL
    return GnState(s=s, last_delta_s=delta, stalled=stalled, iterations=iterations)


def optimal_phase_velocity(path: ConstraintPath, s_star: float, x, x_dot) -> float:
    """Closed-form time derivative of the nearest-point phase.

    Diverges as the query approaches the osculating center; the denominator
    crossing zero is reported as SingularPhaseVelocityError.
    """
    x = np.asarray(x, dtype=float)
    x_dot = np.asarray(x_dot, dtype=float)
    m, mp, mpp = path.eval_many([s_star], 2)
    denom = 1.0 - float((x - m[0]) @ mpp[0])
    if abs(denom) < 1e-9:
        raise SingularPhaseVelocityError(
            f"phase velocity denominator {denom:.3e} at s={s_star:.6f}"
        )
    return float(mp[0] @ x_dot) / denom
