"""Synthetic scenario archetypes.

Six archetypes approximate the challenging closed-loop situations the evaluation
targets: car following, 90-degree turns, pedestrian yields, lane changes, and
congested standstill. Generation is a pure function of (archetype, seed).
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import rotation
from .types import (
    AgentScript,
    AgentState,
    EgoState,
    Lane,
    LightSchedule,
    Scenario,
)

ARCHETYPES = (
    "straight_with_lead",
    "left_turn",
    "right_turn",
    "stop_for_pedestrian",
    "lane_change",
    "stationary_in_traffic",
)

LANE_HALF_WIDTH = 2.0
DEFAULT_DURATION = 36.0


class UnsupportedArchetypeError(ValueError):
    pass


def _straight_points(start: np.ndarray, heading: float, length: float, spacing: float = 2.0) -> np.ndarray:
    n = max(2, int(math.ceil(length / spacing)) + 1)
    s = np.linspace(0.0, length, n)
    direction = np.array([math.cos(heading), math.sin(heading)])
    return start[None, :] + s[:, None] * direction[None, :]


def _arc_points(start: np.ndarray, heading: float, radius: float, angle: float, spacing: float = 1.0) -> np.ndarray:
    """Circular arc from `start` tangent to `heading`; positive angle turns left."""
    n = max(3, int(math.ceil(abs(angle) * radius / spacing)) + 1)
    sign = 1.0 if angle >= 0 else -1.0
    center = start + radius * np.array([math.cos(heading + sign * math.pi / 2),
                                        math.sin(heading + sign * math.pi / 2)])
    theta0 = math.atan2(start[1] - center[1], start[0] - center[0])
    thetas = theta0 + np.linspace(0.0, angle, n)
    return center[None, :] + radius * np.stack([np.cos(thetas), np.sin(thetas)], axis=1)


def _band_polygon(centerline: np.ndarray, half_width: float = LANE_HALF_WIDTH) -> np.ndarray:
    """Drivable band around a centerline: left offsets then reversed right offsets."""
    pts = np.asarray(centerline)
    d = np.diff(pts, axis=0)
    tangents = np.vstack([d, d[-1:]])
    tangents = tangents / np.maximum(1e-9, np.hypot(tangents[:, 0], tangents[:, 1]))[:, None]
    normals = np.stack([-tangents[:, 1], tangents[:, 0]], axis=1)
    left = pts + half_width * normals
    right = pts - half_width * normals
    return np.vstack([left, right[::-1]])


def _lane(lane_id: str, centerline: np.ndarray, limit: float, **kw) -> Lane:
    return Lane(
        id=lane_id,
        centerline=centerline,
        speed_limit=limit,
        drivable_polygon=_band_polygon(centerline),
        **kw,
    )


def _vehicle(agent_id: str, x: float, y: float, heading: float, speed: float,
             half_length: float = 2.3, half_width: float = 0.9) -> AgentState:
    return AgentState(id=agent_id, x=x, y=y, heading=heading, speed=speed,
                      half_length=half_length, half_width=half_width, kind="vehicle")


def _static(agent: AgentState) -> AgentScript:
    return AgentScript(state=agent, behavior="script",
                       polyline=np.array([[agent.x, agent.y]]), speeds=np.zeros(0))


def generate_scenario(archetype: str, seed: int, duration: float = DEFAULT_DURATION) -> Scenario:
    """Build a deterministic synthetic scenario for the given archetype and seed."""
    if archetype not in ARCHETYPES:
        raise UnsupportedArchetypeError(
            f"unknown archetype {archetype!r}; expected one of {ARCHETYPES}")
    rng = np.random.default_rng([seed, ARCHETYPES.index(archetype)])
    builder = {
        "straight_with_lead": _gen_straight_with_lead,
        "left_turn": lambda r, d: _gen_turn(r, d, left=True),
        "right_turn": lambda r, d: _gen_turn(r, d, left=False),
        "stop_for_pedestrian": _gen_stop_for_pedestrian,
        "lane_change": _gen_lane_change,
        "stationary_in_traffic": _gen_stationary_in_traffic,
    }[archetype]
    lanes, ego, agents, route, schedule = builder(rng, duration)
    return Scenario(
        id=f"{archetype}-{seed:04d}",
        archetype=archetype,
        lanes=tuple(lanes),
        ego=ego,
        agents=tuple(agents),
        route_lane_ids=tuple(route),
        duration=duration,
        seed=seed,
        light_schedule=tuple(schedule),
    )


def _gen_straight_with_lead(rng, duration):
    limit = float(rng.uniform(8.0, 13.0))
    seg = float(rng.uniform(120.0, 160.0))
    origin = np.array([-20.0, 0.0])
    l0 = _straight_points(origin, 0.0, seg)
    l1 = _straight_points(l0[-1], 0.0, seg)
    has_left = rng.random() < 0.5
    lanes = [
        _lane("l0", l0, limit, successors=("l1",), left_neighbor="p0" if has_left else None),
        _lane("l1", l1, limit, left_neighbor="p1" if has_left else None),
    ]
    if has_left:
        lanes.append(_lane("p0", l0 + np.array([0.0, 3.5]), limit, successors=("p1",), right_neighbor="l0"))
        lanes.append(_lane("p1", l1 + np.array([0.0, 3.5]), limit, right_neighbor="l1"))

    ego_speed = float(rng.uniform(4.0, min(9.0, limit)))
    ego = EgoState(x=float(rng.uniform(2.0, 8.0)), y=0.0, heading=0.0, vx=ego_speed)

    lead_speed = float(rng.uniform(3.6, min(9.0, limit)))
    gap = float(rng.uniform(3.0, 10.0))
    lead = _vehicle("lead", ego.x + ego.half_length + gap + 2.3, 0.0, 0.0, lead_speed)
    agents = [AgentScript(state=lead, behavior="idm", lane_id="l0",
                          target_speed=lead_speed)]
    if has_left and rng.random() < 0.6:
        side = _vehicle("side", ego.x + float(rng.uniform(-10.0, 25.0)), 3.5, 0.0,
                        float(rng.uniform(3.0, limit)))
        agents.append(AgentScript(state=side, behavior="idm", lane_id="p0",
                                  target_speed=side.speed))

    schedule = []
    if rng.random() < 0.35:
        # Red phase on the far segment forces a stop, then releases.
        t_green = float(rng.uniform(10.0, 20.0))
        schedule = [LightSchedule("l1", 0.0, "red"), LightSchedule("l1", t_green, "green")]
    return lanes, ego, agents, ["l0", "l1"], schedule


def _gen_turn(rng, duration, left: bool):
    limit = float(rng.uniform(7.0, 11.0))
    approach_len = float(rng.uniform(45.0, 65.0))
    radius = float(rng.uniform(10.0, 16.0))
    exit_len = float(rng.uniform(60.0, 90.0))
    angle = math.pi / 2 if left else -math.pi / 2

    origin = np.array([-20.0, 0.0])
    approach = _straight_points(origin, 0.0, approach_len)
    arc = _arc_points(approach[-1], 0.0, radius, angle)
    exit_heading = angle
    exit_pts = _straight_points(arc[-1], exit_heading, exit_len)
    lanes = [
        _lane("approach", approach, limit, successors=("turn",)),
        _lane("turn", arc, min(limit, 6.0), successors=("exit",)),
        _lane("exit", exit_pts, limit),
    ]

    ego_speed = float(rng.uniform(4.0, min(8.0, limit)))
    ego = EgoState(x=float(rng.uniform(2.0, 10.0)), y=0.0, heading=0.0, vx=ego_speed)

    agents = []
    if rng.random() < 0.4:
        gap = float(rng.uniform(8.0, 20.0))
        lead = _vehicle("lead", ego.x + gap, 0.0, 0.0, float(rng.uniform(3.5, limit)))
        agents.append(AgentScript(state=lead, behavior="idm", lane_id="approach",
                                  target_speed=lead.speed))

    schedule = []
    roll = rng.random()
    if roll < 0.25:
        t_green = float(rng.uniform(6.0, 14.0))
        schedule = [LightSchedule("turn", 0.0, "red"), LightSchedule("turn", t_green, "green")]
    elif roll < 0.45:
        schedule = [LightSchedule("turn", 0.0, "green")]
    return lanes, ego, agents, ["approach", "turn", "exit"], schedule


def _gen_stop_for_pedestrian(rng, duration):
    limit = float(rng.uniform(8.0, 12.0))
    seg = 150.0
    l0 = _straight_points(np.array([-20.0, 0.0]), 0.0, seg)
    l1 = _straight_points(l0[-1], 0.0, seg)
    lanes = [_lane("l0", l0, limit, successors=("l1",)), _lane("l1", l1, limit)]

    ego = EgoState(x=float(rng.uniform(2.0, 6.0)), y=0.0, heading=0.0,
                   vx=float(rng.uniform(7.0, 10.0)))

    # time the crossing so the pedestrian reaches the corridor as the ego
    # closes in; the ego roughly holds the speed limit until it must yield
    start_y = -5.0
    end_y = 5.0
    walk_speed = float(rng.uniform(0.7, 1.1))
    t_corridor = (abs(start_y) - 2.0) / walk_speed
    eta_factor = float(rng.uniform(1.0, 1.25))
    cross_x = ego.x + max(20.0, limit * t_corridor * eta_factor)
    ped = AgentState(id="ped", x=cross_x, y=start_y, heading=math.pi / 2,
                     speed=walk_speed, half_length=0.4, half_width=0.4, kind="pedestrian")
    script = AgentScript(
        state=ped,
        behavior="script",
        polyline=np.array([[cross_x, start_y], [cross_x, end_y]]),
        speeds=np.array([walk_speed]),
    )
    return lanes, ego, [script], ["l0", "l1"], []


def _gen_lane_change(rng, duration):
    limit = float(rng.uniform(8.0, 12.0))
    length = 200.0
    to_left = rng.random() < 0.5
    offset = 3.5 if to_left else -3.5
    a = _straight_points(np.array([-20.0, 0.0]), 0.0, length)
    b = a + np.array([0.0, offset])
    lane_a = _lane("a", a, limit,
                   left_neighbor="b" if to_left else None,
                   right_neighbor=None if to_left else "b")
    lane_b = _lane("b", b, limit,
                   right_neighbor="a" if to_left else None,
                   left_neighbor=None if to_left else "a")
    lanes = [lane_a, lane_b]

    ego = EgoState(x=float(rng.uniform(2.0, 10.0)), y=0.0, heading=0.0,
                   vx=float(rng.uniform(5.0, 9.0)))
    agents = []
    if rng.random() < 0.6:
        # Slow vehicle ahead on the original lane motivates the change.
        slow = _vehicle("slow", ego.x + float(rng.uniform(35.0, 55.0)), 0.0, 0.0,
                        float(rng.uniform(2.0, 4.0)))
        agents.append(AgentScript(state=slow, behavior="idm", lane_id="a",
                                  target_speed=slow.speed))
    return lanes, ego, agents, ["a", "b"], []


def _gen_stationary_in_traffic(rng, duration):
    limit = float(rng.uniform(8.0, 12.0))
    seg = 150.0
    l0 = _straight_points(np.array([-20.0, 0.0]), 0.0, seg)
    p0 = l0 + np.array([0.0, 3.5])
    lanes = [
        _lane("l0", l0, limit, left_neighbor="p0"),
        _lane("p0", p0, limit, right_neighbor="l0"),
    ]
    ego_x = float(rng.uniform(15.0, 25.0))
    ego = EgoState(x=ego_x, y=0.0, heading=0.0, vx=0.0)

    agents = []
    gap = float(rng.uniform(2.5, 4.0))
    lead_x = ego_x + ego.half_length + gap + 2.3
    agents.append(_static(_vehicle("lead", lead_x, 0.0, 0.0, 0.0)))
    agents.append(_static(_vehicle("lead2", lead_x + float(rng.uniform(7.0, 10.0)), 0.0, 0.0, 0.0)))
    agents.append(_static(_vehicle("rear", ego_x - float(rng.uniform(7.0, 10.0)), 0.0, 0.0, 0.0)))
    n_side = int(rng.integers(2, 4))
    for i in range(n_side):
        x = ego_x + float(rng.uniform(-8.0, 12.0))
        agents.append(_static(_vehicle(f"side{i}", x, 3.5, 0.0, 0.0)))
    return lanes, ego, agents, ["l0"], []
