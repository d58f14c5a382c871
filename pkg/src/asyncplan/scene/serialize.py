"""Scenario JSON serialization.

The on-disk format is UTF-8 JSON with SI units and 64-bit floats; see README
for the schema. Round trips are identity and re-serialization is byte-stable.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .types import (
    AgentScript,
    AgentState,
    EgoState,
    Lane,
    LightSchedule,
    Scenario,
)


class ScenarioParseError(ValueError):
    """Raised on schema violations; the message includes the offending path."""


def _get(obj: dict, key: str, path: str, expected=None):
    if not isinstance(obj, dict):
        raise ScenarioParseError(f"{path}: expected object, got {type(obj).__name__}")
    if key not in obj:
        raise ScenarioParseError(f"{path}.{key}: missing required field")
    value = obj[key]
    if expected is not None and not isinstance(value, expected):
        raise ScenarioParseError(
            f"{path}.{key}: expected {getattr(expected, '__name__', expected)}, "
            f"got {type(value).__name__}")
    return value


def _points(value: Any, path: str) -> np.ndarray:
    if not isinstance(value, list):
        raise ScenarioParseError(f"{path}: expected list of [x, y] pairs")
    for i, pt in enumerate(value):
        if not (isinstance(pt, list) and len(pt) == 2
                and all(isinstance(c, (int, float)) for c in pt)):
            raise ScenarioParseError(f"{path}[{i}]: expected [x, y] numbers")
    return np.asarray(value, dtype=np.float64).reshape(-1, 2)


def _ego_to_dict(ego: EgoState) -> dict:
    return {
        "x": ego.x, "y": ego.y, "heading": ego.heading,
        "vx": ego.vx, "vy": ego.vy, "ax": ego.ax, "ay": ego.ay,
        "steering": ego.steering,
        "half_length": ego.half_length, "half_width": ego.half_width,
    }


def _agent_to_dict(script: AgentScript) -> dict:
    a = script.state
    out = {
        "id": a.id, "x": a.x, "y": a.y, "heading": a.heading, "speed_mps": a.speed,
        "half_length": a.half_length, "half_width": a.half_width, "kind": a.kind,
        "behavior": script.behavior,
    }
    if script.behavior == "script":
        out["polyline"] = script.polyline.tolist()
        out["speeds"] = script.speeds.tolist()
    else:
        out["lane_id"] = script.lane_id
        out["target_speed"] = script.target_speed
    return out


def save_scenario(scenario: Scenario) -> bytes:
    doc = {
        "id": scenario.id,
        "archetype": scenario.archetype,
        "duration_s": scenario.duration,
        "seed": scenario.seed,
        "map": {
            "lanes": [
                {
                    "id": lane.id,
                    "centerline": lane.centerline.tolist(),
                    "speed_limit_mps": lane.speed_limit,
                    "left": lane.left_neighbor,
                    "right": lane.right_neighbor,
                    "traffic_light": lane.traffic_light,
                    "successors": list(lane.successors),
                    "drivable_polygon": lane.drivable_polygon.tolist(),
                }
                for lane in scenario.lanes
            ]
        },
        "route": list(scenario.route_lane_ids),
        "ego": _ego_to_dict(scenario.ego),
        "agents": [_agent_to_dict(s) for s in scenario.agents],
        "traffic_light_schedule": [
            {"lane_id": e.lane_id, "time_s": e.time, "state": e.state}
            for e in scenario.light_schedule
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=True).encode("utf-8")


def load_scenario(data: bytes) -> Scenario:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ScenarioParseError(f"$: not valid UTF-8 JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ScenarioParseError("$: top level must be an object")

    lanes = []
    lane_list = _get(_get(doc, "map", "$", dict), "lanes", "$.map", list)
    for i, raw in enumerate(lane_list):
        path = f"$.map.lanes[{i}]"
        try:
            lanes.append(Lane(
                id=_get(raw, "id", path, str),
                centerline=_points(_get(raw, "centerline", path), f"{path}.centerline"),
                speed_limit=float(_get(raw, "speed_limit_mps", path, (int, float))),
                left_neighbor=raw.get("left"),
                right_neighbor=raw.get("right"),
                traffic_light=_get(raw, "traffic_light", path, str),
                successors=tuple(_get(raw, "successors", path, list)),
                drivable_polygon=_points(_get(raw, "drivable_polygon", path), f"{path}.drivable_polygon"),
            ))
        except ValueError as exc:
            if isinstance(exc, ScenarioParseError):
                raise
            raise ScenarioParseError(f"{path}: {exc}") from None

    ego_raw = _get(doc, "ego", "$", dict)
    try:
        ego = EgoState(**{k: float(_get(ego_raw, k, "$.ego", (int, float)))
                          for k in ("x", "y", "heading", "vx", "vy", "ax", "ay",
                                    "steering", "half_length", "half_width")})
    except ValueError as exc:
        if isinstance(exc, ScenarioParseError):
            raise
        raise ScenarioParseError(f"$.ego: {exc}") from None

    agents = []
    for i, raw in enumerate(_get(doc, "agents", "$", list)):
        path = f"$.agents[{i}]"
        try:
            state = AgentState(
                id=_get(raw, "id", path, str),
                x=float(_get(raw, "x", path, (int, float))),
                y=float(_get(raw, "y", path, (int, float))),
                heading=float(_get(raw, "heading", path, (int, float))),
                speed=float(_get(raw, "speed_mps", path, (int, float))),
                half_length=float(_get(raw, "half_length", path, (int, float))),
                half_width=float(_get(raw, "half_width", path, (int, float))),
                kind=_get(raw, "kind", path, str),
            )
            behavior = _get(raw, "behavior", path, str)
            if behavior == "script":
                agents.append(AgentScript(
                    state=state, behavior="script",
                    polyline=_points(_get(raw, "polyline", path), f"{path}.polyline"),
                    speeds=np.asarray(_get(raw, "speeds", path, list), dtype=np.float64),
                ))
            elif behavior == "idm":
                target = raw.get("target_speed")
                agents.append(AgentScript(
                    state=state, behavior="idm",
                    lane_id=raw.get("lane_id"),
                    target_speed=float(target) if target is not None else None,
                ))
            else:
                raise ScenarioParseError(f"{path}.behavior: unknown behavior {behavior!r}")
        except ValueError as exc:
            if isinstance(exc, ScenarioParseError):
                raise
            raise ScenarioParseError(f"{path}: {exc}") from None

    schedule = []
    for i, raw in enumerate(doc.get("traffic_light_schedule", [])):
        path = f"$.traffic_light_schedule[{i}]"
        schedule.append(LightSchedule(
            lane_id=_get(raw, "lane_id", path, str),
            time=float(_get(raw, "time_s", path, (int, float))),
            state=_get(raw, "state", path, str),
        ))

    try:
        return Scenario(
            id=_get(doc, "id", "$", str),
            archetype=_get(doc, "archetype", "$", str),
            lanes=tuple(lanes),
            ego=ego,
            agents=tuple(agents),
            route_lane_ids=tuple(_get(doc, "route", "$", list)),
            duration=float(_get(doc, "duration_s", "$", (int, float))),
            seed=int(_get(doc, "seed", "$", int)),
            light_schedule=tuple(schedule),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioParseError):
            raise
        raise ScenarioParseError(f"$: {exc}") from None
