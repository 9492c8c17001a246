"""Quantitative evaluation: tracking error, force decomposition, dimensionless
squared jerk, and rate-of-change statistics.

All passes are pure functions of the recorded series and reproduce identical
results on identical inputs. The squared-jerk sum is taken over raw samples
(no dt factor), matching the published normalization tau = (T - t0)^5 / L^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .path_model import ConstraintPath


@dataclass(frozen=True)
class MetricsConfig:
    duration: float             # task duration T [s]
    path_length: float          # L [m]
    t0: float = 0.0
    window: int = 20            # moving-average width for position jerk
    dt: float = 1e-3

    def __post_init__(self):
        if not (self.duration > self.t0 >= 0.0):
            raise InvalidParameterError("need duration > t0 >= 0")
        if self.path_length <= 0:
            raise InvalidParameterError("path_length must be positive")
        if self.window < 1:
            raise InvalidParameterError("window must be >= 1")

    @property
    def tau(self) -> float:
        return (self.duration - self.t0) ** 5 / self.path_length**2


def dsj_scalar(jerk_series, cfg: MetricsConfig) -> float:
    """Dimensionless squared jerk of an already-differentiated series."""
    j = np.asarray(jerk_series, dtype=float)
    if j.size == 0:
        raise InvalidParameterError("empty jerk series")
    if j.ndim == 1:
        return cfg.tau * float(np.sum(j * j))
    return cfg.tau * float(np.sum(j * j))       # vector variant: sum of ||.||^2


def jerk_from_series(series, dt: float) -> np.ndarray:
    """Third derivative by central differences; valid on interior samples only."""
    x = np.asarray(series, dtype=float)
    if len(x) < 5:
        raise InvalidParameterError("need at least 5 samples for a jerk estimate")
    return (x[4:] - 2.0 * x[3:-1] + 2.0 * x[1:-3] - x[:-4]) / (2.0 * dt**3)


def moving_average(series, window: int) -> np.ndarray:
    """Centered moving average with edge padding (length preserved)."""
    x = np.asarray(series, dtype=float)
    if window <= 1:
        return x.copy()
    left = window // 2
    right = window - 1 - left
    if x.ndim == 1:
        padded = np.pad(x, (left, right), mode="edge")
        kernel = np.ones(window) / window
        return np.convolve(padded, kernel, mode="valid")
    return np.stack(
        [moving_average(x[:, j], window) for j in range(x.shape[1])], axis=1
    )


def dsj_position(x_series, cfg: MetricsConfig) -> float:
    """DSJ of a position series: smooth, differentiate three times, sum.

    Jerk samples whose smoothing or differencing stencil touches the padded
    series ends are excluded from the sum; the edge padding would otherwise
    inject third-derivative spikes orders of magnitude above the signal.
    """
    x = np.asarray(x_series, dtype=float)
    n = len(x)
    if n < max(cfg.window + 4, 5):
        raise InvalidParameterError(
            f"series of {n} samples too short for window {cfg.window}"
        )
    smooth = moving_average(x, cfg.window)
    if smooth.ndim == 1:
        jerk = jerk_from_series(smooth, cfg.dt)
    else:
        jerk = np.stack(
            [jerk_from_series(smooth[:, j], cfg.dt) for j in range(smooth.shape[1])],
            axis=1,
        )
    lo = cfg.window // 2
    hi = cfg.window - 1 - lo
    if len(jerk) - lo - hi >= 1:
        jerk = jerk[lo:len(jerk) - hi] if hi > 0 else jerk[lo:]
    return dsj_scalar(jerk, cfg)


def dsj_phase(s_series, cfg: MetricsConfig) -> float:
    """DSJ of the phase coordinate (raw, no smoothing)."""
    return dsj_scalar(jerk_from_series(s_series, cfg.dt), cfg)


def tracking_error_stats(trace) -> tuple[float, float]:
    """Mean and standard deviation of the tracking error norm, in centimeters."""
    err = np.asarray(trace.err, dtype=float)
    norms = np.linalg.norm(err, axis=1) * 100.0
    return float(norms.mean()), float(norms.std())


def force_decomposition(trace, path: ConstraintPath | None = None):
    """Per-sample force split: total norm, |tangential|, and the residual.

    The tangential component projects onto the unit tangent at the recorded
    phase, so the residual ||F|| - |F_tau| is nonnegative.
    """
    if path is None:
        path = trace.path
    if path is None:
        raise InvalidParameterError("force decomposition needs the constraint path")
    force = np.asarray(trace.force, dtype=float)
    _, mp = path.eval_many(np.asarray(trace.s, dtype=float), 1)
    tangent = mp / np.linalg.norm(mp, axis=1)[:, None]
    f_tau = np.abs(np.einsum("ij,ij->i", force, tangent))
    f_norm = np.linalg.norm(force, axis=1)
    return f_norm, f_tau, f_norm - f_tau


def rate_of_change(series, dt: float) -> np.ndarray:
    """Central-difference time derivative (one-sided at the ends)."""
    return np.gradient(np.asarray(series, dtype=float), dt)


def task_plane(points) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the plane of maximal variance of the given points.

    Signs are fixed deterministically (largest-magnitude component positive).
    """
    pts = np.asarray(points, dtype=float)
    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    e1, e2 = vt[0], vt[1]
    for e in (e1, e2):
        j = int(np.argmax(np.abs(e)))
        if e[j] < 0:
            e *= -1.0
    return e1, e2


def force_argument(force, e1, e2) -> np.ndarray:
    """Unwrapped in-plane force direction angle."""
    f = np.asarray(force, dtype=float)
    ang = np.arctan2(f @ np.asarray(e2, dtype=float), f @ np.asarray(e1, dtype=float))
    return np.unwrap(ang)
