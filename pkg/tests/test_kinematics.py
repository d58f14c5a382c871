import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asyncplan.scene import (
    EgoState,
    InvalidStateError,
    Trajectory,
    arc_length,
    propagate_bicycle,
    resample_trajectory,
    wrap_angle,
)


def test_zero_steer_straight_motion():
    state = EgoState(x=0.0, y=0.0, heading=0.0, vx=10.0)
    nxt = propagate_bicycle(state, accel=0.0, steer=0.0, dt=0.1, wheelbase=3.0)
    assert nxt.x == pytest.approx(1.0, abs=1e-12)
    assert nxt.y == 0.0
    assert nxt.heading == 0.0


def test_zero_velocity_fixed_point():
    state = EgoState(x=4.0, y=-2.0, heading=0.7, vx=0.0)
    for steer in (-0.4, 0.0, 0.3):
        nxt = propagate_bicycle(state, accel=0.0, steer=steer, dt=0.1)
        assert (nxt.x, nxt.y, nxt.heading) == (state.x, state.y, state.heading)


def _arc_oracle(speed, steer, wheelbase, dt, n_steps, heading0=0.0):
    """Closed-form positions of the semi-implicit update under constant inputs.

    Each step turns by dpsi then moves speed*dt along the new heading, so the
    displacement is a geometric series in the complex plane.
    """
    dpsi = speed / wheelbase * math.tan(steer) * dt
    step = speed * dt * np.exp(1j * (heading0 + dpsi * np.arange(1, n_steps + 1)))
    return np.cumsum(step)


def test_constant_steer_matches_closed_form_arc():
    speed, steer, wheelbase, dt = 5.0, 0.1, 3.0, 0.1
    state = EgoState(x=0.0, y=0.0, heading=0.0, vx=speed)
    oracle = _arc_oracle(speed, steer, wheelbase, dt, n_steps=50)
    for k in range(50):
        state = propagate_bicycle(state, accel=0.0, steer=steer, dt=dt, wheelbase=wheelbase)
        assert state.x == pytest.approx(oracle[k].real, abs=1e-9)
        assert state.y == pytest.approx(oracle[k].imag, abs=1e-9)
    # Single-step heading increment matches the stated law.
    assert propagate_bicycle(
        EgoState(x=0, y=0, heading=0, vx=speed), 0.0, steer, dt, wheelbase
    ).heading == pytest.approx(speed * math.tan(steer) / wheelbase * dt, abs=1e-15)


def test_non_finite_inputs_rejected():
    state = EgoState(x=0.0, y=0.0, heading=0.0, vx=1.0)
    with pytest.raises(InvalidStateError):
        propagate_bicycle(state, accel=float("nan"), steer=0.0, dt=0.1)
    with pytest.raises(InvalidStateError):
        propagate_bicycle(state, accel=0.0, steer=float("inf"), dt=0.1)
    with pytest.raises(InvalidStateError):
        EgoState(x=float("nan"), y=0.0, heading=0.0)


@settings(max_examples=200)
@given(
    v=st.floats(0.0, 30.0),
    accel=st.floats(-20.0, 5.0),
    steer=st.floats(-0.6, 0.6),
)
def test_speed_never_negative(v, accel, steer):
    state = EgoState(x=0.0, y=0.0, heading=0.0, vx=v)
    nxt = propagate_bicycle(state, accel, steer, dt=0.1)
    assert nxt.speed >= 0.0


@settings(max_examples=100)
@given(steer=st.floats(-0.5, 0.5), v=st.floats(0.1, 20.0))
def test_zero_steer_preserves_heading_exactly(steer, v):
    state = EgoState(x=1.0, y=2.0, heading=0.5, vx=v)
    nxt = propagate_bicycle(state, accel=0.0, steer=0.0, dt=0.1)
    assert nxt.heading == state.heading
    # collinear displacement
    assert math.atan2(nxt.y - state.y, nxt.x - state.x) == pytest.approx(state.heading)


def _traj(points, dt=0.1):
    pts = np.asarray(points, dtype=float)
    if pts.shape[1] == 2:
        pts = np.hstack([pts, np.zeros((len(pts), 1))])
    return Trajectory(dt=dt, points=pts)


def test_arc_length_single_point():
    assert arc_length(_traj([[0.0, 0.0]])) == 0.0


def test_arc_length_3_4_5():
    assert arc_length(_traj([[0.0, 0.0], [3.0, 4.0]])) == 5.0


def test_arc_length_quarter_circle_oracle():
    n = 80
    theta = np.linspace(0.0, math.pi / 2, n)
    pts = np.stack([10.0 * np.cos(theta), 10.0 * np.sin(theta)], axis=1)
    measured = arc_length(_traj(pts))
    analytic = math.pi / 2 * 10.0
    # chord-sum expectation for n-1 equal subtended angles
    chord_sum = (n - 1) * 2.0 * 10.0 * math.sin((math.pi / 2) / (n - 1) / 2.0)
    assert measured == pytest.approx(chord_sum, abs=1e-12)
    assert measured == pytest.approx(analytic, abs=analytic - chord_sum + 1e-12)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=2, max_size=20),
       st.integers(min_value=1, max_value=18))
def test_arc_length_additive_under_concatenation(points, cut):
    cut = min(cut, len(points) - 1)
    full = _traj(points)
    head = _traj(points[: cut + 1])
    tail = _traj(points[cut:])
    assert arc_length(full) == pytest.approx(arc_length(head) + arc_length(tail), rel=1e-12, abs=1e-9)


def test_resample_identity_at_input_grid():
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.5, 0.1], [2.0, 2.0, 0.3]])
    traj = Trajectory(dt=0.5, points=pts)
    out = resample_trajectory(traj, dt_out=0.5, horizon=1.0)
    assert np.array_equal(out.points, pts)


def test_resample_linear_midpoint():
    traj = Trajectory(dt=1.0, points=np.array([[0.0, 0.0, 0.0], [2.0, 4.0, 0.2]]))
    out = resample_trajectory(traj, dt_out=0.5, horizon=1.0)
    assert out.points[1][:2] == pytest.approx([1.0, 2.0])
    assert out.points[1][2] == pytest.approx(0.1)
    assert np.array_equal(out.points[0], traj.points[0])


def test_resample_heading_shortest_arc_across_seam():
    traj = Trajectory(dt=1.0, points=np.array([[0.0, 0.0, -3.0], [1.0, 0.0, 3.0]]))
    out = resample_trajectory(traj, dt_out=0.1, horizon=1.0)
    headings = out.points[:, 2]
    # shortest arc from -3.0 to +3.0 passes through +-pi, never through 0
    assert np.all(np.abs(headings) >= 2.99)
    # unit-circle oracle: interpolate on the circle and compare circle points
    for t, h in zip(np.linspace(0, 1, 11), headings):
        expected = np.exp(1j * (-3.0 + t * wrap_angle(6.0)))
        assert abs(np.exp(1j * h) - expected) < 1e-12


def test_resample_out_of_range():
    traj = Trajectory(dt=0.1, points=np.zeros((5, 3)))
    with pytest.raises(InvalidStateError):
        resample_trajectory(traj, dt_out=0.1, horizon=1.0)


def test_resample_idempotent():
    rng = np.random.default_rng(0)
    pts = np.cumsum(rng.normal(size=(31, 3)), axis=0)
    traj = Trajectory(dt=0.1, points=pts)
    once = resample_trajectory(traj, dt_out=0.2, horizon=3.0)
    twice = resample_trajectory(once, dt_out=0.2, horizon=3.0)
    assert np.array_equal(once.points, twice.points)
