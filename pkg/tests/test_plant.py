import numpy as np
import pytest

from vfphase.errors import EndOfScenario, InvalidParameterError
from vfphase.plant import (
    AdmittanceParams,
    HumanModel,
    PlantState,
    admittance_step,
    human_force,
    mechanical_energy,
    read_force_csv,
)

PAPER_GAINS = AdmittanceParams(m=1.5, b=15.0, k=200.0)


def test_equilibrium_is_fixed_point():
    st = PlantState.at_rest([0.1, 0.2, 0.3])
    out = admittance_step(PAPER_GAINS, st, st.pos, np.zeros(3), 1e-3)
    np.testing.assert_allclose(out.pos, st.pos)
    np.testing.assert_allclose(out.vel, 0.0)


def test_constant_force_steady_state_offset():
    """Long-horizon response to a constant force settles at F / k per axis."""
    p = PAPER_GAINS
    st = PlantState.at_rest(np.zeros(3))
    force = np.array([2.0, -1.0, 0.5])
    for _ in range(20000):
        st = admittance_step(p, st, np.zeros(3), force, 1e-3)
    np.testing.assert_allclose(st.pos, force / p.k, atol=1e-6)
    np.testing.assert_allclose(st.vel, 0.0, atol=1e-6)


def test_free_decay_energy_monotone():
    """With no force, total mechanical energy decreases every step."""
    p = PAPER_GAINS
    st = PlantState(pos=np.array([0.1, -0.05, 0.02]), vel=np.array([0.3, 0.1, -0.2]))
    ref = np.zeros(3)
    e_prev = mechanical_energy(p, st, ref)
    for _ in range(5000):
        st = admittance_step(p, st, ref, np.zeros(3), 1e-3)
        e = mechanical_energy(p, st, ref)
        assert e <= e_prev + 1e-15
        e_prev = e
    assert e_prev < 1e-9


def test_step_response_overshoot_matches_analytic():
    """Second-order step response: overshoot within 2 points of the analytic value."""
    p = PAPER_GAINS
    zeta = p.b / (2.0 * np.sqrt(p.m * p.k))
    analytic = np.exp(-zeta * np.pi / np.sqrt(1.0 - zeta**2))
    st = PlantState.at_rest(np.zeros(3))
    force = np.array([1.0, 0.0, 0.0])
    peak = 0.0
    for _ in range(10000):
        st = admittance_step(p, st, np.zeros(3), force, 1e-3)
        peak = max(peak, st.pos[0])
    steady = force[0] / p.k
    overshoot = (peak - steady) / steady
    assert abs(overshoot - analytic) < 0.02


def test_admittance_rejects_bad_dt():
    with pytest.raises(InvalidParameterError):
        admittance_step(PAPER_GAINS, PlantState.at_rest(np.zeros(3)), np.zeros(3),
                        np.zeros(3), 0.0)


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        AdmittanceParams(m=0.0, b=1.0, k=1.0)


# -- synthetic operator ------------------------------------------------------------

def test_spring_zero_at_target():
    model = HumanModel(kind="spring-to-target", k_h=50.0,
                       target=lambda t: np.array([0.1, 0.0, 0.0]))
    st = PlantState.at_rest([0.1, 0.0, 0.0])
    np.testing.assert_allclose(human_force(model, st, 0.0), 0.0)


def test_spring_saturates_for_far_targets():
    model = HumanModel(kind="spring-to-target", k_h=50.0, f_max=30.0,
                       target=lambda t: np.array([10.0, 0.0, 0.0]))
    st = PlantState.at_rest(np.zeros(3))
    f = human_force(model, st, 0.0)
    assert np.linalg.norm(f) == pytest.approx(30.0)
    np.testing.assert_allclose(f / np.linalg.norm(f), [1.0, 0.0, 0.0], atol=1e-12)


def test_curve_keeping_term_pulls_toward_curve():
    model = HumanModel(
        kind="spring-to-target", k_h=50.0, f_max=100.0,
        target=lambda t: np.array([0.0, 0.0, 0.0]),
        curve_gain=80.0,
        curve_nearest=lambda x: np.array([0.0, 1.0, 0.0]),
    )
    st = PlantState.at_rest(np.zeros(3))
    f = human_force(model, st, 0.0)
    np.testing.assert_allclose(f, [0.0, 80.0, 0.0])


def test_scripted_force_interpolates_and_ends(tmp_path):
    t = np.array([0.0, 1.0, 2.0])
    fxyz = np.array([[0.0, 0, 0], [2.0, 0, 0], [0.0, 4.0, 0]])
    model = HumanModel(kind="scripted-force", trace_t=t, trace_f=fxyz)
    st = PlantState.at_rest(np.zeros(3))
    np.testing.assert_allclose(human_force(model, st, 1.0), [2.0, 0, 0])
    np.testing.assert_allclose(human_force(model, st, 0.5), [1.0, 0, 0])
    np.testing.assert_allclose(human_force(model, st, 1.5), [1.0, 2.0, 0])
    with pytest.raises(EndOfScenario):
        human_force(model, st, 2.5)


def test_force_csv_roundtrip(tmp_path):
    f = tmp_path / "force.csv"
    f.write_text("t,Fx,Fy,Fz\n0.0,1.0,2.0,3.0\n0.5,4.0,5.0,6.0\n")
    t, fo = read_force_csv(f)
    np.testing.assert_allclose(t, [0.0, 0.5])
    np.testing.assert_allclose(fo[1], [4.0, 5.0, 6.0])


def test_external_force_passthrough():
    model = HumanModel(kind="external")
    model.external_force = np.array([1.0, 2.0, 3.0])
    st = PlantState.at_rest(np.zeros(3))
    np.testing.assert_allclose(human_force(model, st, 9.9), [1.0, 2.0, 3.0])
