import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import scenario_doc
from usde_ctl.controllers import (
    VARIANTS,
    Controller,
    ControllerConfig,
    ControllerState,
    TrajectoryPoint,
    adaptive_gain_step,
    control_ag,
    control_ctc,
    control_fg,
    control_st,
    sign,
    sliding_variable,
)
from usde_ctl.dynamics import DimensionError, planar_two_link
from usde_ctl.simulation import Plant, run_scenario, scenario_from_dict, true_lumped_disturbance

DT = 1e-3


def point(q, qd, qdd=None, t=0.0):
    q = np.asarray(q, dtype=float)
    return TrajectoryPoint(t, q, np.asarray(qd, dtype=float), np.zeros_like(q) if qdd is None else np.asarray(qdd, dtype=float))


@pytest.fixture
def cfg2():
    return ControllerConfig.reference_gains(2, tau_limits=[1e6, 1e6])


# ---------------------------------------------------------------- sliding variable


def test_sliding_variable_examples():
    eta = np.full(7, 10.0)
    np.testing.assert_array_equal(sliding_variable(np.zeros(7), np.zeros(7), eta), 0.0)
    e = np.zeros(7)
    e[2] = 0.1
    assert sliding_variable(e, np.zeros(7), eta)[2] == pytest.approx(1.0)
    e[2], ed = 0.05, np.zeros(7)
    ed[2] = -0.5
    assert sliding_variable(e, ed, eta)[2] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DimensionError):
        sliding_variable(np.zeros(3), np.zeros(2), 10.0)


def test_sign_of_zero_is_zero():
    np.testing.assert_array_equal(sign([-2.0, 0.0, 3.0]), [-1.0, 0.0, 1.0])


# ---------------------------------------------------------------- FG and CTC


def test_fg_perfect_tracking_is_feedforward(planar, cfg2):
    q = np.array([0.3, -0.4])
    qd_des = np.array([0.7, -0.2])
    tau = control_fg(cfg2, planar, q, qd_des, point(q, qd_des), np.zeros(2))
    M, C, g = planar.terms(q, qd_des)
    np.testing.assert_allclose(tau, C @ qd_des + g, atol=1e-12)


def test_ctc_is_fg_without_estimate(planar, cfg2, rng):
    q, qd = rng.normal(size=2), rng.normal(size=2)
    ref = point(q + 0.05, qd - 0.1, [0.3, -0.2])
    d_hat = np.array([1.5, -0.7])
    fg = control_fg(cfg2, planar, q, qd, ref, d_hat)
    ctc = control_ctc(cfg2, planar, q, qd, ref)
    np.testing.assert_allclose(fg - ctc, -d_hat, atol=1e-12)


def test_fg_formula(planar, cfg2):
    q, qd = np.array([0.1, 0.2]), np.array([-0.3, 0.4])
    ref = point([0.15, 0.1], [0.0, 0.5], [1.0, -1.0])
    d_hat = np.array([0.2, -0.1])
    e, ed = ref.q - q, ref.qd - qd
    S = ed + 10 * e
    zeta, zeta_d = ref.qd + 10 * e, ref.qdd + 10 * ed
    M, C, g = planar.terms(q, qd)
    expected = cfg2.K * S + M @ zeta_d + C @ zeta + g - d_hat
    np.testing.assert_allclose(control_fg(cfg2, planar, q, qd, ref, d_hat), expected, atol=1e-12)


def test_saturation_limits_torque(planar):
    cfg = ControllerConfig.reference_gains(2, tau_limits=[5.0, 1.0])
    tau = control_fg(cfg, planar, [0.0, 0.0], [0.0, 0.0], point([2.0, -2.0], [0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_allclose(np.abs(tau), [5.0, 1.0])


# ---------------------------------------------------------------- adaptive gain


def _ag_state(K_hat, **cfg_kw):
    cfg = ControllerConfig(eta=10.0, **{"K": 10.0, **cfg_kw})
    st_ = ControllerState.initial("ag", cfg)
    st_.K_hat = np.atleast_1d(np.asarray(K_hat, dtype=float)).copy()
    return st_, cfg


def test_adaptive_fixed_point():
    st_, cfg = _ag_state(10.0, K_lower=5.0, pi=70.0, sigma=1.0)
    adaptive_gain_step(st_, cfg, np.array([10.0]), DT)
    assert st_.K_hat[0] == pytest.approx(10.0, abs=1e-15)


def test_adaptive_clamped_at_lower_bound_with_zero_S():
    st_, cfg = _ag_state(10.0, K_lower=10.0)
    for _ in range(100):
        adaptive_gain_step(st_, cfg, np.array([0.0]), DT)
    assert st_.K_hat[0] == 10.0


def test_adaptive_one_step_hand_value():
    st_, cfg = _ag_state(10.0, K_lower=5.0, pi=70.0, sigma=1.0)
    adaptive_gain_step(st_, cfg, np.array([0.5]), DT)
    assert st_.K_hat[0] == pytest.approx(9.335, abs=1e-12)
    st_, cfg = _ag_state(10.0, K_lower=10.0, pi=70.0, sigma=1.0)
    adaptive_gain_step(st_, cfg, np.array([0.5]), DT)
    assert st_.K_hat[0] == 10.0


def test_adaptive_gain_rises_with_positive_S_pulse_and_decays_after():
    # drive the law directly: S above sigma * K_lower for 1 s, then zero
    st_, cfg = _ag_state(10.0, K_lower=10.0, pi=70.0, sigma=1.0)
    history = []
    for i in range(6000):
        S = 12.0 if 1000 <= i < 2000 else 0.0
        adaptive_gain_step(st_, cfg, np.array([S]), DT)
        history.append(st_.K_hat[0])
    h = np.array(history)
    assert np.all(h[:1000] == 10.0)
    assert h[1999] > 11.0 * 0.999 and np.all(np.diff(h[1000:2000]) >= 0)
    assert np.all(np.diff(h[2000:]) <= 0) and h[-1] == pytest.approx(10.0)


def test_abs_s_switch_drives_with_magnitude():
    st_, cfg = _ag_state(10.0, K_lower=10.0, sigma=1.0, abs_s=True)
    adaptive_gain_step(st_, cfg, np.array([-12.0]), DT)
    assert st_.K_hat[0] > 10.0


@given(arrays(np.float64, (50, 3), elements=st.floats(-50, 50)))
def test_adaptive_gain_never_below_lower_bound(S_seq):
    cfg = ControllerConfig(eta=10.0, K=[10.0, 8.0, 8.0], K_lower=[10.0, 4.0, 8.0])
    st_ = ControllerState.initial("ag", cfg)
    for S in S_seq:
        adaptive_gain_step(st_, cfg, S, DT)
        assert np.all(st_.K_hat >= cfg.K_lower)


def test_ag_with_frozen_adaptation_equals_fg_at_bound(planar):
    cfg = ControllerConfig.reference_gains(2, pi=0.0, K_lower=[6.0, 7.0], tau_limits=[1e6, 1e6])
    st_ = ControllerState.initial("ag", cfg)
    q, qd = np.array([0.2, 0.1]), np.array([0.0, 0.3])
    ref = point([0.4, -0.2], [0.5, 0.1])
    tau, st_ = control_ag(st_, cfg, planar, q, qd, ref, np.array([0.3, 0.1]), DT)
    np.testing.assert_allclose(st_.K_hat, [6.0, 7.0])
    np.testing.assert_allclose(tau, control_fg(cfg, planar, q, qd, ref, np.array([0.3, 0.1]), K=[6.0, 7.0]))


def test_ag_zero_S_keeps_lower_bound(planar, cfg2):
    st_ = ControllerState.initial("ag", cfg2)
    q = np.array([0.2, 0.1])
    for _ in range(20):
        control_ag(st_, cfg2, planar, q, np.zeros(2), point(q, np.zeros(2)), np.zeros(2), DT)
    np.testing.assert_array_equal(st_.K_hat, cfg2.K_lower)


# ---------------------------------------------------------------- super-twisting


def test_st_switching_term_example(planar, cfg2):
    st_ = ControllerState.initial("st", cfg2)
    q, qd = np.array([0.1, -0.3]), np.array([0.0, 0.0])
    ref = point(q + np.array([0.025, 0.0]), qd)  # S_1 = 10 * 0.025 = 0.25
    tau, _ = control_st(st_, cfg2, planar, q, qd, ref, np.zeros(2), DT)
    M, C, g = planar.terms(q, qd)
    zeta_d = ref.qdd + cfg2.eta * (ref.qd - qd)
    switching = tau - (M @ zeta_d + C @ qd + g)
    assert switching[0] == pytest.approx(2.0, abs=1e-12)
    assert switching[1] == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(st_.Sigma, [-DT * 12.0, 0.0])  # T2_1 = 12


def test_st_at_rest_on_surface_is_model_compensation(planar, cfg2):
    st_ = ControllerState.initial("st", cfg2)
    q, qd = np.array([0.4, 0.2]), np.array([0.3, -0.6])
    tau, _ = control_st(st_, cfg2, planar, q, qd, point(q, qd), np.zeros(2), DT)
    M, C, g = planar.terms(q, qd)
    np.testing.assert_allclose(tau, C @ qd + g, atol=1e-12)


@given(arrays(np.float64, (60, 2), elements=st.floats(-5, 5)))
def test_st_integrator_bounded(S_like):
    cfg = ControllerConfig.reference_gains(2, sigma_max=0.05)
    model = planar_two_link()
    st_ = ControllerState.initial("st", cfg)
    q = np.zeros(2)
    for e in S_like:
        control_st(st_, cfg, model, q, np.zeros(2), point(q + e / 10.0, np.zeros(2)), np.zeros(2), 0.01)
        assert np.all(np.abs(st_.Sigma) <= cfg.sigma_max)


def test_all_controllers_agree_on_zero_error_state(planar, cfg2):
    q, qd = np.array([0.4, 0.2]), np.array([0.3, -0.6])
    ref = point(q, qd)
    taus = [Controller(v, cfg2).step(planar, q, qd, ref, np.zeros(2), DT) for v in VARIANTS]
    for tau in taus[1:]:
        np.testing.assert_allclose(tau, taus[0], atol=1e-12)


def test_unknown_variant_lists_valid_names(cfg2):
    with pytest.raises(ValueError, match="ctc, fg, ag, st"):
        Controller("pid", cfg2)


@pytest.mark.parametrize("kw", [dict(eta=0.0), dict(K=-1.0), dict(T1=0.0), dict(k=0.0), dict(K_lower=20.0), dict(pi=-1.0)])
def test_config_validation(kw):
    base = dict(eta=10.0, K=10.0)
    with pytest.raises(ValueError):
        ControllerConfig(**{**base, **kw})


def test_reference_gain_values():
    cfg = ControllerConfig.reference_gains()
    np.testing.assert_array_equal(cfg.K, [10, 10, 10, 10, 8, 8, 8])
    np.testing.assert_array_equal(cfg.K_lower, cfg.K)
    np.testing.assert_array_equal(cfg.T1, [4, 4, 4, 4, 2, 2, 2])
    np.testing.assert_array_equal(cfg.T2, [12, 12, 12, 12, 4, 4, 4])
    assert cfg.k == 0.08 and np.all(cfg.eta == 10) and np.all(cfg.pi == 70) and np.all(cfg.sigma == 1)


# ---------------------------------------------------------------- closed-loop error dynamics


def _instant_Sdot(sc, tr, i, h=1e-7):
    """dS/dt at sample i from a tiny plant step with the held torque."""
    plant = Plant(sc)
    q, qd, tau = tr.q[i], tr.qd[i], tr.tau_applied[i]
    q1, qd1 = plant.advance(tr.t[i], q, qd, tau, h, 1)
    ref0, ref1 = sc.trajectory(tr.t[i]), sc.trajectory(tr.t[i] + h)
    S0 = sliding_variable(ref0.q - q, ref0.qd - qd, sc.controller.eta)
    S1 = sliding_variable(ref1.q - q1, ref1.qd - qd1, sc.controller.eta)
    qdd = plant.acceleration(plant.model_at(tr.t[i]), tr.t[i], q, qd, tau)
    d = true_lumped_disturbance(sc, q, qd, qdd, tau)
    return S0, (S1 - S0) / h, d


@pytest.fixture(scope="module")
def mismatch_scenario():
    doc = scenario_doc()
    doc["sim"]["duration"] = 3.0
    doc["disturbance"].update(detach_time=3.0)
    return scenario_from_dict(doc)


def test_fg_closed_loop_error_dynamics(mismatch_scenario):
    sc = mismatch_scenario
    tr = run_scenario(sc, "fg", quantize=False, lyapunov=False)
    K = sc.controller.K
    for i in (300, 1200, 2600):
        S, Sdot, d = _instant_Sdot(sc, tr, i)
        M, C, _ = sc.model_nominal.terms(tr.q[i], tr.qd[i])
        resid = M @ Sdot + K * S + C @ S + (d - tr.d_hat[i])
        assert np.max(np.abs(resid)) < 1e-3


def test_st_closed_loop_error_dynamics(mismatch_scenario):
    sc = mismatch_scenario
    tr = run_scenario(sc, "st", quantize=False, lyapunov=False)
    T1 = sc.controller.T1
    for i in (300, 1200, 2600):
        S, Sdot, d = _instant_Sdot(sc, tr, i)
        M = sc.model_nominal._M(tr.q[i])
        resid = M @ Sdot + T1 * np.sqrt(np.abs(S)) * np.sign(S) - tr.Sigma[i] + (d - tr.d_hat[i])
        assert np.max(np.abs(resid)) < 1e-3


def test_closed_loop_invariants(mismatch_scenario):
    sc = mismatch_scenario
    cfg = sc.controller
    for v in VARIANTS:
        tr = run_scenario(sc, v, lyapunov=False)
        assert not tr.diverged
        assert np.all(np.abs(tr.tau_applied) <= cfg.tau_limits + 1e-9)
        if v == "ag":
            assert np.all(tr.K_hat >= cfg.K_lower)
        if v == "st":
            assert np.all(np.abs(tr.Sigma) <= cfg.sigma_max)
