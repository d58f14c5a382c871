"""Rule-based conversion between pathways, routing instructions, and controls.

A pathway shorter than 0.5 m over the window maps to a lone Stop. Otherwise
the path splits into turn and straight segments at 20 degrees of accumulated
heading change, each stamped with the arc distance from the path start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..scene.geometry import (
    interpolate_polyline,
    polyline_arc_lengths,
    project_to_polyline,
    wrap_angle,
)
from ..scene.types import Trajectory, VectorScene

STOP_PATH_LENGTH = 0.5        # below this 8 s arc length, the pathway means "stop"
TURN_THRESHOLD = math.radians(20.0)
STEP_CURVATURE_EPS = math.radians(0.08)   # per-sample heading change that counts as turning
ROUTE_LOOKAHEAD = 60.0        # reference-path truncation for simulation-time instructions


class Command(str, Enum):
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    GO_STRAIGHT = "go_straight"
    STOP = "stop"


@dataclass(frozen=True)
class RoutingInstruction:
    cmd: Command
    distance_m: float = 0.0

    def __post_init__(self):
        if self.distance_m < 0:
            raise ValueError("instruction distance must be >= 0")
        if self.cmd == Command.STOP and self.distance_m != 0.0:
            raise ValueError("stop instructions carry distance 0")

    def to_dict(self) -> dict:
        return {"cmd": self.cmd.value, "distance_m": self.distance_m}

    @classmethod
    def from_dict(cls, raw: dict) -> "RoutingInstruction":
        return cls(cmd=Command(raw["cmd"]), distance_m=float(raw.get("distance_m", 0.0)))


def _segment_headings(xy: np.ndarray) -> np.ndarray:
    d = np.diff(xy, axis=0)
    return np.arctan2(d[:, 1], d[:, 0])


def _dedupe(xy: np.ndarray, min_gap: float = 1e-6) -> np.ndarray:
    keep = [0]
    for i in range(1, len(xy)):
        if np.hypot(*(xy[i] - xy[keep[-1]])) > min_gap:
            keep.append(i)
    return xy[keep]


def path_to_instructions(pathway: Trajectory) -> list[RoutingInstruction]:
    """Segment a pathway into distance-stamped routing instructions."""
    if len(pathway) < 2:
        return [RoutingInstruction(Command.STOP)]
    xy = _dedupe(pathway.xy)
    if len(xy) < 2:
        return [RoutingInstruction(Command.STOP)]
    total = float(polyline_arc_lengths(xy)[-1])
    if total < STOP_PATH_LENGTH:
        return [RoutingInstruction(Command.STOP)]
    return segment_polyline(xy)


def segment_polyline(xy: np.ndarray) -> list[RoutingInstruction]:
    """Turn/straight segmentation of a polyline with distances from its start."""
    headings = _segment_headings(xy)
    arcs = polyline_arc_lengths(xy)
    n = len(headings)
    raw: list[tuple[Command, float]] = []

    anchor = 0           # index of the current segment start (into headings)
    i = 1
    while i < n:
        drift = wrap_angle(headings[i] - headings[anchor])
        if abs(drift) < TURN_THRESHOLD:
            i += 1
            continue
        sign = 1.0 if drift > 0 else -1.0
        # Walk back from the trigger to where this turn actually began.
        t0 = i
        while t0 > anchor:
            step = wrap_angle(headings[t0] - headings[t0 - 1])
            if step * sign <= 0 or abs(step) <= STEP_CURVATURE_EPS:
                break
            t0 -= 1
        if t0 > anchor:
            raw.append((Command.GO_STRAIGHT, float(arcs[anchor])))
        # Walk forward while the turn continues.
        end = i
        while end + 1 < n:
            step = wrap_angle(headings[end + 1] - headings[end])
            if step * sign <= 0 or abs(step) <= STEP_CURVATURE_EPS:
                break
            end += 1
        raw.append((Command.TURN_LEFT if sign > 0 else Command.TURN_RIGHT, float(arcs[t0])))
        anchor = end
        i = end + 1

    # Trailing span: classify by its net heading change.
    if anchor < n - 1:
        net = wrap_angle(headings[n - 1] - headings[anchor])
        if net >= TURN_THRESHOLD:
            cmd = Command.TURN_LEFT
        elif net <= -TURN_THRESHOLD:
            cmd = Command.TURN_RIGHT
        else:
            cmd = Command.GO_STRAIGHT
        raw.append((cmd, float(arcs[anchor])))

    if not raw:
        raw.append((Command.GO_STRAIGHT, 0.0))

    merged: list[RoutingInstruction] = []
    for cmd, dist in raw:
        if merged and merged[-1].cmd == cmd:
            continue
        merged.append(RoutingInstruction(cmd, dist))
    return merged


def route_instructions(scene: VectorScene, lookahead: float = ROUTE_LOOKAHEAD) -> list[RoutingInstruction]:
    """Simulation-time instructions from the route reference truncated ahead.

    The scene is ego-relative, so the reference starts at the projection of the
    origin onto the route and extends `lookahead` meters.
    """
    from ..scene.geometry import interpolate_polyline_batch
    from ..scene.route import route_path  # local import avoids a package cycle

    lanes = {lane.id: lane for lane in scene.lanes}
    pts, _ = route_path(lanes, scene.route_lane_ids)
    start_arc, _ = project_to_polyline(0.0, 0.0, pts)
    arcs = polyline_arc_lengths(pts)
    end_arc = min(float(arcs[-1]), start_arc + lookahead)
    if end_arc - start_arc < STOP_PATH_LENGTH:
        return [RoutingInstruction(Command.STOP)]
    grid = np.arange(start_arc, end_arc, 1.0)
    ahead = interpolate_polyline_batch(pts, grid)[:, :2]
    if len(ahead) < 2:
        return [RoutingInstruction(Command.STOP)]
    return segment_polyline(_dedupe(ahead))


def waypoints_to_highlevel(waypoints: Trajectory) -> tuple[str, str]:
    """(velocity command, routing command) for a timestamped waypoint window.

    Velocity: end speed under 0.5 m/s means stop; otherwise the end/start speed
    ratio beyond +-10% means accelerate/decelerate, else maintain. Routing uses
    the net heading change at +-20 degrees.
    """
    if len(waypoints) < 2:
        raise ValueError("need at least two waypoints")
    xy = waypoints.xy
    dt = waypoints.dt
    speeds = np.hypot(*np.diff(xy, axis=0).T) / dt
    start_speed = float(speeds[0])
    end_speed = float(speeds[-1])

    if end_speed < 0.5:
        velocity = "stop"
    elif start_speed < 1e-9:
        velocity = "accelerate"
    elif end_speed / start_speed > 1.1:
        velocity = "accelerate"
    elif end_speed / start_speed < 0.9:
        velocity = "decelerate"
    else:
        velocity = "maintain speed"

    moved = _dedupe(xy)
    if len(moved) < 2:
        routing = "go straight"
    else:
        headings = _segment_headings(moved)
        net = wrap_angle(headings[-1] - headings[0])
        if net >= TURN_THRESHOLD:
            routing = "turn left"
        elif net <= -TURN_THRESHOLD:
            routing = "turn right"
        else:
            routing = "go straight"
    return velocity, routing


def waypoints_to_control(waypoints: Trajectory) -> tuple[float, float]:
    """(mean speed, mean acceleration) from finite differences over the window."""
    if len(waypoints) < 2:
        raise ValueError("need at least two waypoints")
    xy = waypoints.xy
    dt = waypoints.dt
    speeds = np.hypot(*np.diff(xy, axis=0).T) / dt
    if len(speeds) == 1:
        return float(speeds[0]), 0.0
    accels = np.diff(speeds) / dt
    return float(speeds.mean()), float(accels.mean())
