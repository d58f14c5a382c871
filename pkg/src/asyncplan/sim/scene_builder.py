"""Assemble ego-relative vectorized scenes from simulation or log history."""

from __future__ import annotations

from dataclasses import replace
from typing import Mapping, Sequence

import numpy as np

from ..scene.geometry import to_frame, wrap_angle
from ..scene.types import (
    HISTORY_LEN,
    MAX_AGENTS,
    AgentHistory,
    AgentState,
    EgoState,
    Lane,
    VectorScene,
)


def build_vector_scene(
    ego_states: Sequence[EgoState],
    agent_frames: Sequence[Sequence[AgentState]],
    lanes: Sequence[Lane],
    lights: Mapping[str, str],
    route_lane_ids: Sequence[str],
) -> VectorScene:
    """Vectorize the last HISTORY_LEN frames relative to the newest ego pose.

    Shorter histories pad by repeating the oldest frame. Agents are the ones
    present in the newest frame, nearest first, capped at MAX_AGENTS.
    """
    if not ego_states or len(ego_states) != len(agent_frames):
        raise ValueError("ego and agent histories must align and be non-empty")
    ego_states = list(ego_states)[-HISTORY_LEN:]
    agent_frames = [list(frame) for frame in agent_frames[-HISTORY_LEN:]]
    while len(ego_states) < HISTORY_LEN:
        ego_states.insert(0, ego_states[0])
        agent_frames.insert(0, agent_frames[0])

    anchor = ego_states[-1]

    ego_rel = []
    for s in ego_states:
        x, y = to_frame(np.array([[s.x, s.y]]), anchor.x, anchor.y, anchor.heading)[0]
        x = 0.0 if abs(x) < 1e-12 else x
        y = 0.0 if abs(y) < 1e-12 else y
        ego_rel.append(replace(s, x=x, y=y, heading=wrap_angle(s.heading - anchor.heading)))
    h_last = ego_rel[-1].heading
    if abs(h_last) < 1e-12:
        ego_rel[-1] = replace(ego_rel[-1], heading=0.0)

    current_agents = sorted(
        agent_frames[-1],
        key=lambda a: ((a.x - anchor.x) ** 2 + (a.y - anchor.y) ** 2, a.id),
    )[:MAX_AGENTS]

    tracks = []
    for agent in current_agents:
        states = np.zeros((HISTORY_LEN, 4))
        valid = np.zeros(HISTORY_LEN, dtype=bool)
        for t, frame in enumerate(agent_frames):
            match = next((a for a in frame if a.id == agent.id), None)
            if match is None:
                continue
            x, y = to_frame(np.array([[match.x, match.y]]), anchor.x, anchor.y, anchor.heading)[0]
            states[t] = (x, y, wrap_angle(match.heading - anchor.heading), match.speed)
            valid[t] = True
        tracks.append(AgentHistory(
            id=agent.id, kind=agent.kind,
            half_length=agent.half_length, half_width=agent.half_width,
            states=states, valid=valid,
        ))

    rel_lanes = []
    for lane in lanes:
        center = to_frame(lane.centerline, anchor.x, anchor.y, anchor.heading)
        poly = to_frame(lane.drivable_polygon, anchor.x, anchor.y, anchor.heading) \
            if len(lane.drivable_polygon) else lane.drivable_polygon
        rel_lanes.append(replace(
            lane,
            centerline=center,
            drivable_polygon=poly,
            traffic_light=lights.get(lane.id, lane.traffic_light),
        ))

    return VectorScene(
        ego_history=tuple(ego_rel),
        agents=tuple(tracks),
        lanes=tuple(rel_lanes),
        route_lane_ids=tuple(route_lane_ids),
    )
