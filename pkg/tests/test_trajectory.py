import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from usde_ctl.trajectory import Trajectory, generate_trajectory, quintic_blend

KNOTS = np.array([[0.0, 1.0], [1.0, -1.0], [1.0, -1.0], [0.5, 0.0]])
TIMES = np.array([0.0, 2.0, 3.0, 4.5])


@pytest.fixture
def traj():
    return Trajectory(TIMES, KNOTS)


def test_blend_endpoints():
    for tau, s_exp in ((0.0, 0.0), (1.0, 1.0)):
        s, ds, dds = quintic_blend(tau)
        assert s == pytest.approx(s_exp)
        assert ds == pytest.approx(0.0) and dds == pytest.approx(0.0)


def test_waypoints_reached_at_rest(traj):
    for t, q in zip(TIMES, KNOTS):
        p = traj(t)
        np.testing.assert_allclose(p.q, q, atol=1e-12)
        np.testing.assert_allclose(p.qd, 0.0, atol=1e-12)
        np.testing.assert_allclose(p.qdd, 0.0, atol=1e-12)


def test_segment_midpoint_velocity(traj):
    # peak velocity of the rest-to-rest quintic is 15/8 of the mean rate
    p = traj(1.0)
    np.testing.assert_allclose(p.q, 0.5 * (KNOTS[0] + KNOTS[1]), atol=1e-12)
    np.testing.assert_allclose(p.qd, 15 / 8 * (KNOTS[1] - KNOTS[0]) / 2.0, atol=1e-12)
    np.testing.assert_allclose(p.qdd, 0.0, atol=1e-12)


def test_hold_segment_is_constant(traj):
    for t in np.linspace(2.0, 3.0, 11):
        p = traj(t)
        np.testing.assert_allclose(p.q, KNOTS[1], atol=1e-12)
        np.testing.assert_array_equal(p.qd, 0.0)


@given(st.floats(0.0, 4.5 - 2e-4))
def test_derivatives_are_consistent(t):
    tr = Trajectory(TIMES, KNOTS)
    h = 1e-5
    a, b = max(t - h, 0.0), min(t + h, 4.5)
    lo, hi = tr(a), tr(b)
    np.testing.assert_allclose((hi.q - lo.q) / (b - a), tr(t).qd, atol=1e-6)
    np.testing.assert_allclose((hi.qd - lo.qd) / (b - a), tr(t).qdd, atol=1e-4)


def test_out_of_range_raises(traj):
    with pytest.raises(ValueError):
        traj(-0.1)
    with pytest.raises(ValueError):
        generate_trajectory(traj, 4.6)


@pytest.mark.parametrize(
    "times, knots",
    [([0.0, 1.0], [[0.0]]), ([0.0, 0.0], [[0.0], [1.0]]), ([0.0, 1.0], [[0.0], [np.nan]])],
)
def test_invalid_construction(times, knots):
    with pytest.raises(ValueError):
        Trajectory(np.array(times), np.array(knots))


def test_single_knot_and_hold():
    p = Trajectory(np.array([0.0]), np.array([[0.2, 0.3]]))(0.0)
    np.testing.assert_array_equal(p.q, [0.2, 0.3])
    h = Trajectory.hold([0.1, 0.2, 0.3], 2.0)
    assert h.dof == 3 and h.duration == 2.0
    np.testing.assert_array_equal(h(1.3).q, [0.1, 0.2, 0.3])
