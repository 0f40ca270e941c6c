import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import clean_planar_doc, scenario_doc
from usde_ctl.analysis import compute_metrics
from usde_ctl.simulation import (
    Plant,
    ScenarioError,
    Trace,
    builtin_scenario,
    load_scenario,
    read_trace_csv,
    rounded,
    run_scenario,
    scenario_from_dict,
    trace_to_csv,
    true_lumped_disturbance,
    write_long_csv,
    write_trace_csv,
)

G = 9.81


def short_doc(duration):
    """Bundled planar scenario cut short, with the payload schedule dropped."""
    doc = scenario_doc()
    for key in ("payload_mass", "attach_time", "detach_time"):
        doc["disturbance"].pop(key)
    doc["sim"]["duration"] = duration
    return doc


def hold_doc(q, duration=1.0):
    doc = clean_planar_doc(duration=duration)
    doc["trajectory"] = {"knot_times": [0.0, duration], "knots": [list(q), list(q)]}
    return doc


# ---------------------------------------------------------------- plant and disturbance oracles


def test_perfect_model_holds_equilibrium():
    sc = scenario_from_dict(hold_doc([0.4, -0.9]))
    for v in ("fg", "st"):
        tr = run_scenario(sc, v, quantize=False)
        assert np.max(np.linalg.norm(tr.e, axis=1)) < 1e-6
        assert np.max(np.abs(tr.d_true)) < 1e-6


def test_payload_disturbance_matches_tip_weight():
    q = np.array([0.3, 0.5])
    m = 0.7
    doc = hold_doc(q)
    doc["disturbance"] = {"payload_mass": m, "attach_time": 0.0}
    sc = scenario_from_dict(doc)
    plant = Plant(sc)
    loaded = plant.model_at(0.0)
    tau = loaded._g(q)
    qdd = plant.acceleration(loaded, 0.0, q, np.zeros(2), tau)
    np.testing.assert_allclose(qdd, 0.0, atol=1e-12)
    # weight m*g at the tip of unit links: d = -J^T [0, m g]
    c1, c12 = math.cos(q[0]), math.cos(q[0] + q[1])
    expected = -m * G * np.array([c1 + c12, c12])
    np.testing.assert_allclose(true_lumped_disturbance(sc, q, np.zeros(2), qdd, tau), expected, atol=1e-12)


def test_payload_held_by_true_gravity_torque():
    q = np.array([0.3, 0.5])
    doc = hold_doc(q)
    doc["disturbance"] = {"payload_mass": 1.2, "attach_time": 0.0}
    plant = Plant(scenario_from_dict(doc))
    model = plant.model_at(0.5)
    tau = model._g(q)
    qq, qd = q.copy(), np.zeros(2)
    for i in range(1000):
        qq, qd = plant.advance(i * 1e-3, qq, qd, tau, 1e-3, 10)
    np.testing.assert_allclose(qq, q, atol=1e-9)


def test_payload_schedule():
    doc = hold_doc([0.0, 0.0], 2.0)
    doc["disturbance"] = {"payload_mass": 1.0, "attach_time": 0.5, "detach_time": 1.5}
    sc = scenario_from_dict(doc)
    plant = Plant(sc)
    assert plant.model_at(0.49) is sc.model_true
    assert plant.model_at(0.5) is not sc.model_true
    assert plant.model_at(1.5) is sc.model_true


@given(arrays(np.float64, 2, elements=st.floats(-2, 2)))
@settings(max_examples=25)
def test_viscous_friction_disturbance(qd):
    doc = hold_doc([0.2, 0.1])
    doc["disturbance"] = {"viscous": [0.4, 0.9]}
    sc = scenario_from_dict(doc)
    plant = Plant(sc)
    q = np.array([0.2, 0.1])
    tau = np.array([1.0, -0.5])
    qdd = plant.acceleration(plant.model_at(0.0), 0.0, q, qd, tau)
    np.testing.assert_allclose(true_lumped_disturbance(sc, q, qd, qdd, tau), -np.array([0.4, 0.9]) * qd, atol=1e-10)


def test_external_torque_window():
    doc = hold_doc([0.0, 0.0], 2.0)
    doc["disturbance"] = {"external": [{"start": 0.5, "end": 1.0, "torque": [1.0, 2.0]}]}
    sc = scenario_from_dict(doc)
    np.testing.assert_array_equal(sc.external_torque(0.4), 0.0)
    np.testing.assert_array_equal(sc.external_torque(0.7), [1.0, 2.0])
    np.testing.assert_array_equal(sc.external_torque(1.0), 0.0)


# ---------------------------------------------------------------- integration contract


def reference_hold(plant, t, q, qd, tau, dt, substeps):
    """Plain RK4 with ``tau`` held, built on the Python plant acceleration."""
    model = plant.model_at(t)
    h = dt / substeps
    for k in range(substeps):
        ts = t + k * h
        f = lambda s, x, v: plant.acceleration(model, s, x, v, tau)  # noqa: E731
        k1q, k1v = qd, f(ts, q, qd)
        k2q, k2v = qd + 0.5 * h * k1v, f(ts + 0.5 * h, q + 0.5 * h * k1q, qd + 0.5 * h * k1v)
        k3q, k3v = qd + 0.5 * h * k2v, f(ts + 0.5 * h, q + 0.5 * h * k2q, qd + 0.5 * h * k2v)
        k4q, k4v = qd + h * k3v, f(ts + h, q + h * k3q, qd + h * k3v)
        q = q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
        qd = qd + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return q, qd


@pytest.mark.parametrize("name", ["planar2dof", "paper7dof"])
def test_compiled_hold_matches_reference(name, rng):
    doc = scenario_doc(name)
    doc["disturbance"]["external"] = [{"start": 0.0, "end": 1.0, "torque": [0.5] * len(doc["trajectory"]["knots"][0]),
                                       "amplitude": [1.0] * len(doc["trajectory"]["knots"][0]), "omega": 7.0}]
    sc = scenario_from_dict(doc)
    plant = Plant(sc)
    n = sc.dof
    for t in (0.1, 0.5, sc.payload.attach_time + 0.2):
        q, qd, tau = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n), rng.uniform(-5, 5, n)
        got = plant.advance(t, q, qd, tau, 1e-3, 10)
        want = reference_hold(plant, t, q, qd, tau, 1e-3, 10)
        np.testing.assert_allclose(got[0], want[0], atol=1e-12)
        np.testing.assert_allclose(got[1], want[1], atol=1e-11)


def test_torque_is_held_over_each_control_period():
    """Replaying each logged torque as a constant reproduces the next state."""
    sc = scenario_from_dict(scenario_doc() | {"sim": {"duration": 6.0, "physics_substeps": 10}})
    tr = run_scenario(sc, "st", quantize=False, lyapunov=False)
    plant = Plant(sc)
    for i in (0, 1, 2499, 2500, 2501, 4000):
        q, qd = reference_hold(plant, tr.t[i], tr.q[i], tr.qd[i], tr.tau_applied[i], sc.control_dt, 10)
        np.testing.assert_allclose(q, tr.q[i + 1], atol=1e-12)
        np.testing.assert_allclose(qd, tr.qd[i + 1], atol=1e-11)


def test_substep_refinement_converges():
    def final_q(substeps):
        doc = short_doc(1.0)
        doc["sim"]["physics_substeps"] = substeps
        return run_scenario(scenario_from_dict(doc), "fg", quantize=False, lyapunov=False).q[-1]

    assert np.max(np.abs(final_q(10) - final_q(20))) < 1e-6


def test_runs_are_deterministic():
    doc = short_doc(0.5)
    doc["sim"].update(velocity_noise_std=0.01, seed=3)
    sc = scenario_from_dict(doc)
    a = run_scenario(sc, "ag")
    b = run_scenario(sc, "ag")
    assert a.equals(b)
    c = run_scenario(sc.with_seed(4), "ag")
    assert not a.equals(c)


def test_noise_only_reaches_the_controller():
    doc = short_doc(0.3)
    doc["sim"].update(velocity_noise_std=0.05, seed=1)
    tr = run_scenario(scenario_from_dict(doc), "fg", quantize=False, lyapunov=False)
    # logged qd is the true state, so it integrates to q
    dq = (tr.q[1:] - tr.q[:-1]) / 1e-3
    mid = 0.5 * (tr.qd[1:] + tr.qd[:-1])
    assert np.max(np.abs(dq - mid)) < 1e-3


def test_divergence_is_flagged():
    # a stiff gain sampled far too slowly: the discrete loop is unstable
    doc = hold_doc([0.0, 0.0], 1.0)
    doc["trajectory"]["knots"][1] = [1.0, 1.0]
    doc["controller"] = {"gains": "reference", "K": [1e7, 1e7], "tau_limits": [1e300, 1e300]}
    doc["sim"].update(control_dt=0.05, physics_substeps=1)
    tr = run_scenario(scenario_from_dict(doc), "fg")
    assert tr.diverged
    assert len(tr) < 21


def test_feedforward_beats_ctc_on_planar():
    sc = builtin_scenario("planar2dof")
    e = {v: compute_metrics(run_scenario(sc, v)).rms for v in ("ctc", "fg")}
    assert e["fg"] < e["ctc"]


# ---------------------------------------------------------------- scenarios


def test_bundled_scenarios_load():
    p = builtin_scenario("planar2dof")
    assert p.dof == 2 and p.steps == 6000
    s = load_scenario("paper7dof.toml")
    assert s.dof == 7 and s.duration == 16.0
    assert [ph.name for ph in s.phases] == ["motion_a", "grasp", "motion_b", "release"]


@pytest.mark.parametrize(
    "edit, path",
    [
        (lambda d: d["controller"].update(K=[1.0, 2.0, 3.0]), "controller.K"),
        (lambda d: d["sim"].update(control_dt=0.0), "sim.control_dt"),
        (lambda d: d["disturbance"].update(payload_mass=-1.0), "disturbance.payload_mass"),
        (lambda d: d["disturbance"].update(attach_time=5.8), "disturbance.attach_time"),
        (lambda d: d["model"].update(preset="scara"), "model.preset"),
        (lambda d: d["trajectory"].pop("knots"), "trajectory.knots"),
        (lambda d: d["disturbance"].update(viscous=[0.1, "x"]), "disturbance.viscous"),
        (lambda d: d.pop("sim"), "sim"),
        (lambda d: d["controller"].update(variants=["pid"]), "controller.variants"),
    ],
)
def test_schema_errors_name_the_field(edit, path):
    doc = scenario_doc()
    edit(doc)
    with pytest.raises(ScenarioError) as info:
        scenario_from_dict(doc)
    assert info.value.path == path


def test_invalid_toml(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[model\npreset = 1")
    with pytest.raises(ScenarioError):
        load_scenario(bad)
    with pytest.raises(FileNotFoundError):
        load_scenario(tmp_path / "missing.toml")


# ---------------------------------------------------------------- trace files


@pytest.fixture(scope="module")
def short_trace():
    return run_scenario(scenario_from_dict(short_doc(0.2)), "st")


def test_trace_header_and_rows(short_trace, tmp_path):
    path = write_trace_csv(short_trace, tmp_path / "st.csv")
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:4] == ["t", "q_1", "q_2", "qd_1"]
    assert lines[0].endswith("V_lyap")
    assert len(lines) == 1 + 200  # duration / control_dt rows


def test_trace_csv_round_trip_is_lossless(short_trace, tmp_path):
    path = write_trace_csv(short_trace, tmp_path / "st.csv")
    back = read_trace_csv(path, "st")
    assert back.equals(short_trace)
    assert trace_to_csv(back) == trace_to_csv(short_trace)


@given(arrays(np.float64, (5, 2), elements=st.floats(-1e6, 1e6)))
def test_rounded_is_idempotent(x):
    tr = Trace.allocate(5, 2)
    tr.t = np.arange(5) * 1e-3
    tr.q = x
    tr.V_lyap = np.abs(x[:, 0])
    once = rounded(tr)
    assert rounded(once).equals(once)


def test_long_csv(short_trace, tmp_path):
    path = write_long_csv({"st": short_trace}, tmp_path / "long.csv", series=("q",))
    lines = path.read_text().splitlines()
    assert lines[0] == "t,series,joint,value"
    assert len(lines) == 1 + 2 * len(short_trace)
    assert lines[1].split(",")[1:3] == ["st:q", "1"]
