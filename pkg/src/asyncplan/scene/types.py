"""Domain value types for scenes, trajectories, and scenarios.

All types are immutable after construction and safe to share across threads.
Coordinates are meters, headings radians wrapped to (-pi, pi], speeds m/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .geometry import polyline_arc_lengths, wrap_angle

TICK_DT = 0.1           # simulation tick, 10 Hz
HISTORY_LEN = 20        # history frames fed to the planner
MAX_AGENTS = 20         # agent slots in a vectorized scene
PLAN_HORIZON_STEPS = 80  # 8 s planning horizon at 10 Hz

# Default ego box (4.7 m x 1.9 m sedan) and rear-axle wheelbase.
EGO_HALF_LENGTH = 2.35
EGO_HALF_WIDTH = 0.95
EGO_WHEELBASE = 3.089

AGENT_KINDS = ("vehicle", "pedestrian", "static_object")
LIGHT_STATES = ("green", "yellow", "red", "unknown")


class InvalidStateError(ValueError):
    """A state value violates its invariants (non-finite, bad ranges)."""


def _check_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidStateError(f"{name} contains non-finite value {v!r}")


def _frozen_array(data, shape_hint: str, min_rows: int = 0) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2:
        raise InvalidStateError(f"expected 2-D array for {shape_hint}, got shape {arr.shape}")
    if len(arr) < min_rows:
        raise InvalidStateError(f"{shape_hint} needs at least {min_rows} rows, got {len(arr)}")
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class EgoState:
    """Ego vehicle state. Velocities and accelerations are in the body frame."""

    x: float
    y: float
    heading: float
    vx: float = 0.0
    vy: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    steering: float = 0.0
    half_length: float = EGO_HALF_LENGTH
    half_width: float = EGO_HALF_WIDTH

    def __post_init__(self):
        _check_finite("EgoState", self.x, self.y, self.heading, self.vx, self.vy,
                      self.ax, self.ay, self.steering)
        if self.half_length <= 0 or self.half_width <= 0:
            raise InvalidStateError("ego bounding box half-extents must be positive")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class AgentState:
    id: str
    x: float
    y: float
    heading: float
    speed: float
    half_length: float
    half_width: float
    kind: str = "vehicle"

    def __post_init__(self):
        _check_finite("AgentState", self.x, self.y, self.heading, self.speed)
        if self.speed < 0:
            raise InvalidStateError(f"agent {self.id}: speed must be >= 0, got {self.speed}")
        if self.half_length <= 0 or self.half_width <= 0:
            raise InvalidStateError(f"agent {self.id}: box half-extents must be positive")
        if self.kind not in AGENT_KINDS:
            raise InvalidStateError(f"agent {self.id}: unknown kind {self.kind!r}")
        object.__setattr__(self, "heading", wrap_angle(self.heading))


@dataclass(frozen=True)
class Lane:
    """A lane with centerline geometry, regulatory attributes, and drivable area."""

    id: str
    centerline: np.ndarray               # (N, 2), monotone arc length
    speed_limit: float
    left_neighbor: Optional[str] = None
    right_neighbor: Optional[str] = None
    traffic_light: str = "unknown"
    successors: tuple[str, ...] = ()
    drivable_polygon: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        center = _frozen_array(self.centerline, f"lane {self.id} centerline", min_rows=2)
        seg = np.hypot(np.diff(center[:, 0]), np.diff(center[:, 1]))
        if np.any(seg == 0.0):
            raise InvalidStateError(f"lane {self.id}: consecutive centerline points must be distinct")
        if self.speed_limit <= 0:
            raise InvalidStateError(f"lane {self.id}: speed_limit must be positive")
        if self.traffic_light not in LIGHT_STATES:
            raise InvalidStateError(f"lane {self.id}: unknown traffic light state {self.traffic_light!r}")
        object.__setattr__(self, "centerline", center)
        poly = np.asarray(self.drivable_polygon, dtype=np.float64).reshape(-1, 2)
        poly = np.ascontiguousarray(poly)
        poly.flags.writeable = False
        object.__setattr__(self, "drivable_polygon", poly)
        object.__setattr__(self, "successors", tuple(self.successors))

    @property
    def length(self) -> float:
        return float(polyline_arc_lengths(self.centerline)[-1])

    def with_light(self, state: str) -> "Lane":
        return replace(self, traffic_light=state)


@dataclass(frozen=True)
class Trajectory:
    """Timestamped 2D poses at a fixed step."""

    dt: float
    points: np.ndarray                   # (N, 3) of (x, y, heading)
    start_time: float = 0.0

    def __post_init__(self):
        if self.dt <= 0:
            raise InvalidStateError(f"trajectory dt must be positive, got {self.dt}")
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidStateError(f"trajectory points must be (N, 3), got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidStateError("trajectory contains non-finite points")
        pts = np.ascontiguousarray(pts)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (self.dt == other.dt and self.start_time == other.start_time
                and np.array_equal(self.points, other.points))

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, :2]

    @property
    def duration(self) -> float:
        return (len(self.points) - 1) * self.dt if len(self.points) else 0.0

    def time_of(self, index: int) -> float:
        return self.start_time + index * self.dt


@dataclass(frozen=True)
class AgentHistory:
    """One agent slot in a vectorized scene: 20 historical states plus a validity mask."""

    id: str
    kind: str
    half_length: float
    half_width: float
    states: np.ndarray                   # (HISTORY_LEN, 4) of (x, y, heading, speed)
    valid: np.ndarray                    # (HISTORY_LEN,) bool

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if states.shape != (HISTORY_LEN, 4):
            raise InvalidStateError(f"agent history states must be ({HISTORY_LEN}, 4), got {states.shape}")
        if valid.shape != (HISTORY_LEN,):
            raise InvalidStateError(f"agent history mask must be ({HISTORY_LEN},), got {valid.shape}")
        states = np.ascontiguousarray(states)
        states.flags.writeable = False
        valid = np.ascontiguousarray(valid)
        valid.flags.writeable = False
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "valid", valid)

    @property
    def current(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class VectorScene:
    """Vectorized snapshot in the ego frame: the last history pose is the origin."""

    ego_history: tuple[EgoState, ...]    # exactly HISTORY_LEN, oldest first
    agents: tuple[AgentHistory, ...]     # up to MAX_AGENTS
    lanes: tuple[Lane, ...]
    route_lane_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.ego_history) != HISTORY_LEN:
            raise InvalidStateError(f"ego history must hold {HISTORY_LEN} states, got {len(self.ego_history)}")
        if len(self.agents) > MAX_AGENTS:
            raise InvalidStateError(f"at most {MAX_AGENTS} agents allowed, got {len(self.agents)}")
        last = self.ego_history[-1]
        if abs(last.x) > 1e-9 or abs(last.y) > 1e-9 or abs(last.heading) > 1e-9:
            raise InvalidStateError("scene must be ego-relative: last history pose at origin, heading 0")
        object.__setattr__(self, "ego_history", tuple(self.ego_history))
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "lanes", tuple(self.lanes))
        object.__setattr__(self, "route_lane_ids", tuple(self.route_lane_ids))

    @property
    def current_ego(self) -> EgoState:
        return self.ego_history[-1]

    def lane_by_id(self, lane_id: str) -> Lane:
        for lane in self.lanes:
            if lane.id == lane_id:
                return lane
        raise KeyError(lane_id)


@dataclass(frozen=True)
class AgentScript:
    """Initial agent state plus its behavior over the scenario.

    behavior "idm": car-following along its lane chain, reacting to traffic.
    behavior "script": follows a polyline with per-segment speeds; a single
    point or exhausted polyline means the agent holds its last pose.
    """

    state: AgentState
    behavior: str = "idm"
    polyline: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    speeds: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lane_id: Optional[str] = None
    target_speed: Optional[float] = None

    def __post_init__(self):
        if self.behavior not in ("idm", "script"):
            raise InvalidStateError(f"unknown agent behavior {self.behavior!r}")
        poly = np.ascontiguousarray(np.asarray(self.polyline, dtype=np.float64).reshape(-1, 2))
        poly.flags.writeable = False
        speeds = np.ascontiguousarray(np.asarray(self.speeds, dtype=np.float64).reshape(-1))
        speeds.flags.writeable = False
        if self.behavior == "script" and len(poly) >= 2 and len(speeds) != len(poly) - 1:
            raise InvalidStateError("script agents need one speed per polyline segment")
        object.__setattr__(self, "polyline", poly)
        object.__setattr__(self, "speeds", speeds)


@dataclass(frozen=True)
class LightSchedule:
    """One traffic-light transition: lane `lane_id` switches to `state` at `time`."""

    lane_id: str
    time: float
    state: str

    def __post_init__(self):
        if self.state not in LIGHT_STATES:
            raise InvalidStateError(f"unknown light state {self.state!r}")


@dataclass(frozen=True)
class Scenario:
    id: str
    archetype: str
    lanes: tuple[Lane, ...]
    ego: EgoState
    agents: tuple[AgentScript, ...]
    route_lane_ids: tuple[str, ...]
    duration: float
    seed: int
    light_schedule: tuple[LightSchedule, ...] = ()

    def __post_init__(self):
        if self.duration <= 0:
            raise InvalidStateError("scenario duration must be positive")
        if not self.route_lane_ids:
            raise InvalidStateError("scenario needs a route")
        object.__setattr__(self, "lanes", tuple(self.lanes))
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "route_lane_ids", tuple(self.route_lane_ids))
        object.__setattr__(self, "light_schedule", tuple(sorted(self.light_schedule, key=lambda e: (e.time, e.lane_id))))
        lanes_by_id = {lane.id: lane for lane in self.lanes}
        for rid in self.route_lane_ids:
            if rid not in lanes_by_id:
                raise InvalidStateError(f"route lane {rid!r} not in map")

    def lane_by_id(self, lane_id: str) -> Lane:
        for lane in self.lanes:
            if lane.id == lane_id:
                return lane
        raise KeyError(lane_id)

    def route_polyline(self) -> np.ndarray:
        """Concatenated route-lane centerlines with duplicate joints removed."""
        pieces: list[np.ndarray] = []
        for rid in self.route_lane_ids:
            center = self.lane_by_id(rid).centerline
            if pieces and np.allclose(pieces[-1][-1], center[0]):
                center = center[1:]
            pieces.append(np.asarray(center))
        return np.vstack(pieces)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / TICK_DT))


def route_successor_map(lanes: Sequence[Lane]) -> dict[str, tuple[str, ...]]:
    return {lane.id: lane.successors for lane in lanes}
