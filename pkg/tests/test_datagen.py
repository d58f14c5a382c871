import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asyncplan.datagen import (
    Command,
    RoutingInstruction,
    path_to_instructions,
    waypoints_to_control,
    waypoints_to_highlevel,
)
from asyncplan.scene import Trajectory


def traj_from_xy(xy, dt=0.1):
    xy = np.asarray(xy, dtype=float)
    return Trajectory(dt=dt, points=np.column_stack([xy, np.zeros(len(xy))]))


def straight_then_arc(straight_len=10.0, radius=15.0, angle=math.pi / 2, step=0.25):
    xs = np.arange(0.0, straight_len, step)
    pts = [(x, 0.0) for x in xs]
    n_arc = int(radius * abs(angle) / step)
    center = (straight_len, radius)
    for k in range(n_arc + 1):
        theta = -math.pi / 2 + angle * k / n_arc
        pts.append((center[0] + radius * math.cos(theta),
                    center[1] + radius * math.sin(theta)))
    return np.array(pts)


def test_stop_boundary_exact():
    # 0.499 m total -> Stop; 0.501 m -> not Stop
    n = 80
    short = np.column_stack([np.linspace(0, 0.499, n), np.zeros(n)])
    longer = np.column_stack([np.linspace(0, 0.501, n), np.zeros(n)])
    assert path_to_instructions(traj_from_xy(short)) == [RoutingInstruction(Command.STOP)]
    out = path_to_instructions(traj_from_xy(longer))
    assert out[0].cmd != Command.STOP


def test_straight_path_single_instruction():
    xy = np.column_stack([np.linspace(0, 40, 81), np.zeros(81)])
    out = path_to_instructions(traj_from_xy(xy))
    assert out == [RoutingInstruction(Command.GO_STRAIGHT, 0.0)]


def test_straight_then_left_arc_boundary_at_ten_meters():
    xy = straight_then_arc(straight_len=10.0, angle=math.pi / 2)
    out = path_to_instructions(traj_from_xy(xy))
    assert [i.cmd for i in out] == [Command.GO_STRAIGHT, Command.TURN_LEFT]
    assert out[0].distance_m == 0.0
    assert out[1].distance_m == pytest.approx(10.0, abs=0.8)


def test_pure_arc_turn_from_start():
    xy = straight_then_arc(straight_len=0.25, angle=-math.pi / 2)
    out = path_to_instructions(traj_from_xy(xy))
    assert out[-1].cmd == Command.TURN_RIGHT
    assert out[-1].distance_m < 1.5


def test_mirror_symmetry_swaps_turns():
    xy = straight_then_arc(straight_len=12.0, angle=math.pi / 3)
    mirrored = xy * np.array([1.0, -1.0])
    orig = path_to_instructions(traj_from_xy(xy))
    flip = path_to_instructions(traj_from_xy(mirrored))
    swap = {Command.TURN_LEFT: Command.TURN_RIGHT,
            Command.TURN_RIGHT: Command.TURN_LEFT,
            Command.GO_STRAIGHT: Command.GO_STRAIGHT,
            Command.STOP: Command.STOP}
    assert [swap[i.cmd] for i in orig] == [i.cmd for i in flip]
    assert [i.distance_m for i in orig] == pytest.approx([i.distance_m for i in flip])


def test_no_consecutive_duplicate_commands():
    # straight, slight wiggle under threshold, straight: still one instruction
    xs = np.linspace(0, 60, 240)
    ys = 0.3 * np.sin(xs / 8.0)
    out = path_to_instructions(traj_from_xy(np.column_stack([xs, ys])))
    for a, b in zip(out, out[1:]):
        assert a.cmd != b.cmd


@settings(max_examples=60, deadline=None)
@given(
    straight=st.floats(2.0, 30.0),
    radius=st.floats(8.0, 40.0),
    angle=st.floats(0.45, 1.5),
    sign=st.sampled_from([1.0, -1.0]),
)
def test_mirror_symmetry_property(straight, radius, angle, sign):
    xy = straight_then_arc(straight, radius, sign * angle)
    mirrored = xy * np.array([1.0, -1.0])
    orig = path_to_instructions(traj_from_xy(xy))
    flip = path_to_instructions(traj_from_xy(mirrored))
    swap = {Command.TURN_LEFT: Command.TURN_RIGHT,
            Command.TURN_RIGHT: Command.TURN_LEFT,
            Command.GO_STRAIGHT: Command.GO_STRAIGHT,
            Command.STOP: Command.STOP}
    assert [swap[i.cmd] for i in orig] == [i.cmd for i in flip]


def test_waypoints_to_highlevel_cases():
    # constant speed straight
    xy = np.column_stack([np.arange(0, 8, 0.5) * 6.0, np.zeros(16)])
    assert waypoints_to_highlevel(traj_from_xy(xy, dt=0.5)) == ("maintain speed", "go straight")

    # decelerating to below 0.5 m/s -> stop takes precedence
    speeds = np.linspace(6.0, 0.2, 16)
    xs = np.concatenate([[0.0], np.cumsum(speeds * 0.5)])
    vel, _ = waypoints_to_highlevel(traj_from_xy(np.column_stack([xs, np.zeros(17)]), dt=0.5))
    assert vel == "stop"

    # speeding up through a left arc
    speeds = np.linspace(4.0, 7.0, 16)
    headings = np.linspace(0.0, math.radians(50), 16)
    steps = speeds * 0.5
    xy = np.zeros((17, 2))
    xy[1:, 0] = np.cumsum(steps * np.cos(headings))
    xy[1:, 1] = np.cumsum(steps * np.sin(headings))
    assert waypoints_to_highlevel(traj_from_xy(xy, dt=0.5)) == ("accelerate", "turn left")


def test_waypoints_to_control_uniform_and_quadratic():
    # uniform 1 m spacing at 0.1 s -> v = 10, a = 0
    xy = np.column_stack([np.arange(20) * 1.0, np.zeros(20)])
    v, a = waypoints_to_control(traj_from_xy(xy))
    assert v == pytest.approx(10.0)
    assert a == pytest.approx(0.0, abs=1e-12)

    # quadratic spacing for constant a = 1
    ts = np.arange(30) * 0.1
    xs = 0.5 * 1.0 * ts ** 2
    v, a = waypoints_to_control(traj_from_xy(np.column_stack([xs, np.zeros(30)])))
    assert a == pytest.approx(1.0, abs=1e-9)

    # repeated single point
    v, a = waypoints_to_control(traj_from_xy(np.zeros((2, 2))))
    assert (v, a) == (0.0, 0.0)


def test_stop_instruction_distance_invariant():
    with pytest.raises(ValueError):
        RoutingInstruction(Command.STOP, 5.0)
