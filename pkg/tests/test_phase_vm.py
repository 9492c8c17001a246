import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfphase.errors import InvalidParameterError
from vfphase.phase_vm import VmParams, coupling_force, vm_phase_rate, vm_step


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        VmParams(k=0.0, b=1.0)
    with pytest.raises(InvalidParameterError):
        VmParams(k=1.0, b=-2.0)


def test_on_curve_tangential_velocity_passes_through(circle_path):
    s = 1.1
    cp = circle_path.point(s)
    v = 0.3
    rate = vm_phase_rate(circle_path, cp.m, v * cp.m_prime, s, VmParams())
    assert rate == pytest.approx(v, rel=1e-9)


def test_tangential_error_drives_phase(line_path):
    p = VmParams(k=200.0, b=15.0)
    s = 0.8
    cp = line_path.point(s)
    e_tau = 0.03
    x = cp.m + e_tau * cp.m_prime
    rate = vm_phase_rate(line_path, x, np.zeros(3), s, p)
    assert rate == pytest.approx((p.k / p.b) * e_tau, rel=1e-9)


def test_normal_error_gives_zero_rate(circle_path):
    s = 2.0
    cp = circle_path.point(s)
    tangent = cp.m_prime / np.linalg.norm(cp.m_prime)
    offset = cp.normal - (cp.normal @ tangent) * tangent   # exactly tangent-free
    x = cp.m + 0.05 * offset
    rate = vm_phase_rate(circle_path, x, np.zeros(3), s, VmParams())
    assert abs(rate) < 1e-9


def test_step_integrates_and_clamps(circle_path):
    p = VmParams()
    s = 1.0
    cp = circle_path.point(s)
    v = 0.2
    s_next = vm_step(circle_path, cp.m, v * cp.m_prime, s, p, 1e-3)
    assert s_next == pytest.approx(s + v * 1e-3, rel=1e-6)
    # clamping at the end of the domain
    s_end = circle_path.length
    cp_end = circle_path.point(s_end - 1e-4)
    x_ahead = cp_end.m + 0.05 * cp_end.m_prime
    assert vm_step(circle_path, x_ahead, np.zeros(3), s_end, p, 1.0) == s_end
    # zero rate keeps the phase
    cp1 = circle_path.point(1.5)
    assert vm_step(circle_path, cp1.m, np.zeros(3), 1.5, p, 1e-3) == pytest.approx(1.5)


@settings(deadline=None, max_examples=50)
@given(
    s_frac=st.floats(0.05, 0.95),
    ex=st.floats(-0.2, 0.2),
    ey=st.floats(-0.2, 0.2),
    ez=st.floats(-0.2, 0.2),
    vx=st.floats(-0.5, 0.5),
    vy=st.floats(-0.5, 0.5),
)
def test_force_orthogonal_to_tangent(circle_path, s_frac, ex, ey, ez, vx, vy):
    """The phase rate is exactly the one that cancels the tangential force."""
    p = VmParams(k=180.0, b=12.0)
    s = s_frac * circle_path.length
    cp = circle_path.point(s)
    x = cp.m + np.array([ex, ey, ez])
    x_dot = np.array([vx, vy, 0.1 * vx])
    rate = vm_phase_rate(circle_path, x, x_dot, s, p)
    force = coupling_force(circle_path, x, x_dot, s, rate, p)
    f_norm = np.linalg.norm(force)
    if f_norm > 1e-12:
        assert abs(cp.m_prime @ force) < 1e-9 * max(f_norm, 1.0)


def test_equilibrium_condition(circle_path):
    """Zero rate iff the spring-plus-velocity pull has no tangential part."""
    p = VmParams()
    s = 0.9
    cp = circle_path.point(s)
    tangent = cp.m_prime / np.linalg.norm(cp.m_prime)
    perp = cp.normal - (cp.normal @ tangent) * tangent
    x = cp.m + 0.02 * perp
    x_dot = 0.1 * perp
    assert abs(vm_phase_rate(circle_path, x, x_dot, s, p)) < 1e-9
    x_dot2 = x_dot + 0.05 * cp.m_prime
    assert vm_phase_rate(circle_path, x, x_dot2, s, p) != pytest.approx(0.0, abs=1e-6)
