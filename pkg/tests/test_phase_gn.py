import numpy as np
import pytest

from vfphase.errors import SingularPhaseVelocityError
from vfphase.path_model import nearest_point_bruteforce
from vfphase.phase_gn import GnState, gn_step, optimal_phase_velocity

from conftest import make_path, random_smooth_polyline


def test_line_one_step_exact(line_path):
    rng = np.random.default_rng(1)
    start = line_path.eval_many([0.0], 0)[0][0]
    tangent = line_path.eval_many([0.0], 1)[1][0]
    for _ in range(10):
        x = rng.uniform(-0.2, 1.2, size=3)
        s0 = rng.uniform(0.1, line_path.length - 0.1)
        out = gn_step(line_path, x, GnState(s=s0), max_inner=1)
        expected = float((x - start) @ tangent)
        if 0.0 < expected < line_path.length:
            assert out.s == pytest.approx(expected, abs=1e-9)
            assert out.last_delta_s == pytest.approx(expected - s0, abs=1e-9)


def test_circle_center_is_fixed_point(circle_path):
    for s0 in (0.3, 1.5, 2.8):
        out = gn_step(circle_path, [0.0, 0.0, 0.0], GnState(s=s0), max_inner=10)
        # gradient is ~zero everywhere: the update barely moves and never stalls
        assert abs(out.s - s0) < 1e-4
        assert not out.stalled


def test_circle_center_perturbation_jumps_quarter_turn(circle_path):
    s0 = 1.0
    r = circle_path.point(s0).osc_radius
    target_s = s0 + np.pi * r / 2.0
    direction = circle_path.eval_many([target_s], 0)[0][0]
    direction = direction / np.linalg.norm(direction)
    eps = 1e-3 * r
    out = gn_step(circle_path, eps * direction, GnState(s=s0), max_inner=200000)
    oracle_s, _ = nearest_point_bruteforce(circle_path, eps * direction, 0.005)
    assert abs(out.s - target_s) < 0.01
    assert abs(out.s - oracle_s) < 1e-4
    assert abs(out.s - s0) > 0.4 * np.pi * r


def test_antipodal_perturbations_jump(circle_path):
    """The converged phase between opposite center perturbations jumps ~pi*r."""
    s0 = 1.0
    r = circle_path.point(s0).osc_radius
    u = circle_path.eval_many([s0 + np.pi * r / 2.0], 0)[0][0]
    u = u / np.linalg.norm(u)
    eps = 1e-3 * r
    plus = gn_step(circle_path, eps * u, GnState(s=s0), max_inner=200000)
    minus = gn_step(circle_path, -eps * u, GnState(s=s0), max_inner=200000)
    assert abs(plus.s - minus.s) >= 0.4 * np.pi * r


def test_matches_bruteforce_on_feasible_set():
    """Converged phase equals the oracle minimizer for queries inside half the
    osculating radius, over randomized smooth paths."""
    rng = np.random.default_rng(42)
    cases = 0
    for _ in range(25):
        path = make_path(random_smooth_polyline(rng), delta=0.01, num_basis=25)
        for _ in range(8):
            s_base = rng.uniform(0.1 * path.length, 0.9 * path.length)
            cp = path.point(s_base)
            radius = min(cp.osc_radius, 0.5)
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            x = cp.m + rng.uniform(0.0, 0.5 * radius) * direction
            out = gn_step(path, x, GnState(s=s_base), max_inner=100)
            s_oracle, _ = nearest_point_bruteforce(path, x, path.delta / 2.0)
            star = path.point(s_oracle)
            feasible = (
                star.normal is None
                or abs(float((x - star.m) @ star.normal)) < 0.5 * star.osc_radius
            )
            if feasible and 1e-3 < s_oracle < path.length - 1e-3:
                assert abs(out.s - s_oracle) < 1e-6 * path.length
                cases += 1
    assert cases >= 150


def test_boundary_clamp_terminates(line_path):
    x = line_path.eval_many([line_path.length], 0)[0][0] + np.array([1.0, 0, 0])
    out = gn_step(line_path, x, GnState(s=line_path.length - 0.05), max_inner=10)
    # one step to reach the boundary, one to observe the outward pin
    assert out.s == pytest.approx(line_path.length)
    assert out.iterations == 2


def test_boundary_overshoot_recovers_interior(circle_path):
    """An overshoot past the domain end re-enters and still finds the optimum."""
    s_target = circle_path.length - 0.02
    cp = circle_path.point(s_target)
    x = cp.m + 0.3 * cp.osc_radius * cp.normal
    out = gn_step(circle_path, x, GnState(s=circle_path.length - 0.3), max_inner=50)
    s_oracle, _ = nearest_point_bruteforce(circle_path, x, 0.005)
    assert abs(out.s - s_oracle) < 1e-6 * circle_path.length


# -- optimal_phase_velocity ------------------------------------------------------

def test_phase_velocity_on_curve(circle_path):
    s = 1.3
    cp = circle_path.point(s)
    v = 0.25
    out = optimal_phase_velocity(circle_path, s, cp.m, v * cp.m_prime)
    assert out == pytest.approx(v * float(cp.m_prime @ cp.m_prime), rel=1e-9)
    assert out == pytest.approx(v, rel=1e-3)


def test_phase_velocity_amplifies_toward_center(circle_path):
    s = 1.3
    cp = circle_path.point(s)
    v = 0.1
    speed2 = float(cp.m_prime @ cp.m_prime)
    for frac in (0.2, 0.5, 0.9):
        d = frac * cp.osc_radius
        x = cp.m + d * cp.normal
        out = optimal_phase_velocity(circle_path, s, x, v * cp.m_prime)
        assert out == pytest.approx(v * speed2 / (1.0 - frac), rel=1e-6)


def test_phase_velocity_singular_at_center(circle_path):
    s = 1.3
    cp = circle_path.point(s)
    x = cp.m + cp.osc_radius * cp.normal
    with pytest.raises(SingularPhaseVelocityError):
        optimal_phase_velocity(circle_path, s, x, [0.1, 0.0, 0.0])
