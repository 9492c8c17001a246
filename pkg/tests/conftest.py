"""Shared analytic test fixtures: curves built from closed-form shapes."""

from __future__ import annotations

import numpy as np
import pytest

from vfphase.path_model import RawTrajectory, fit_path, resample_spatial


def dense_circle(radius=0.5, n=20001, span=2 * np.pi):
    th = np.linspace(0.0, span, n)
    return np.stack(
        [radius * np.cos(th), radius * np.sin(th), np.zeros_like(th)], axis=1
    )


def dense_ellipse(a=0.6, b=0.35, n=40001):
    th = np.linspace(0.0, 2 * np.pi, n)
    return np.stack([a * np.cos(th), b * np.sin(th), np.zeros_like(th)], axis=1)


def dense_line(length=2.0, n=2001, direction=(1.0, 0.0, 0.0), origin=(0.0, 0.0, 0.0)):
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    t = np.linspace(0.0, length, n)
    return np.asarray(origin)[None, :] + t[:, None] * d[None, :]


def make_path(points, delta=0.01, num_basis=30):
    sp = resample_spatial(RawTrajectory(points), delta)
    return fit_path(sp, num_basis)


def random_smooth_polyline(rng, n=6000):
    """A gentle 3D curve: bounded curvature, no self-proximity, new per draw."""
    t = np.linspace(0.0, 1.0, n)
    amp = rng.uniform(0.02, 0.05, size=(2, 3))
    freq = rng.uniform(0.4, 1.0, size=(2, 3))
    phase = rng.uniform(0.0, 2 * np.pi, size=(2, 3))
    base = np.stack([t, 0.3 * t, 0.1 * t], axis=1)
    wig = sum(
        amp[i] * np.sin(2 * np.pi * freq[i] * t[:, None] + phase[i]) for i in range(2)
    )
    return base + wig


@pytest.fixture(scope="session")
def circle_path():
    return make_path(dense_circle(), delta=0.01, num_basis=30)


@pytest.fixture(scope="session")
def ellipse_path():
    return make_path(dense_ellipse(), delta=0.01, num_basis=30)


@pytest.fixture(scope="session")
def line_path():
    return make_path(dense_line(), delta=0.01, num_basis=2)
