"""Vectorized-scene featurization into fixed-shape batch arrays."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..scene.geometry import interpolate_polyline_batch, polyline_arc_lengths
from ..scene.types import VectorScene
from .config import PlannerConfig

# feature widths
EGO_FRAME_F = 8         # x, y, cos, sin, vx, vy, ax, ay
AGENT_FRAME_F = 6       # x, y, cos, sin, speed, valid
AGENT_EXTRA_F = 5       # kind one-hot (3), half_length, half_width
LANE_POINT_F = 13       # x, y, dx, dy, limit, light one-hot (4), on_route, left, right

POS_SCALE = 0.1
SPEED_SCALE = 0.1
ACCEL_SCALE = 0.2

_KIND_INDEX = {"vehicle": 0, "pedestrian": 1, "static_object": 2}
_LIGHT_INDEX = {"green": 0, "yellow": 1, "red": 2, "unknown": 3}


def ego_feature_dim(config: PlannerConfig) -> int:
    return config.history * EGO_FRAME_F


def agent_feature_dim(config: PlannerConfig) -> int:
    return config.history * AGENT_FRAME_F + AGENT_EXTRA_F


def featurize_scenes(scenes: Sequence[VectorScene], config: PlannerConfig) -> dict:
    """Batch arrays: ego (B,Fe), agents (B,A,Fa), agent_valid (B,A),
    lanes (B,L,P,Fl), lane_valid (B,L). Agent/lane slots pad with zeros."""
    b = len(scenes)
    h = config.history
    a_max = config.max_agents
    l_max = max(1, max(len(s.lanes) for s in scenes))
    p = config.lane_points

    ego = np.zeros((b, h * EGO_FRAME_F))
    agents = np.zeros((b, a_max, h * AGENT_FRAME_F + AGENT_EXTRA_F))
    agent_valid = np.zeros((b, a_max), dtype=bool)
    lanes = np.zeros((b, l_max, p, LANE_POINT_F))
    lane_valid = np.zeros((b, l_max), dtype=bool)

    for i, scene in enumerate(scenes):
        rows = np.array([
            [s.x * POS_SCALE, s.y * POS_SCALE, np.cos(s.heading), np.sin(s.heading),
             s.vx * SPEED_SCALE, s.vy * SPEED_SCALE, s.ax * ACCEL_SCALE, s.ay * ACCEL_SCALE]
            for s in scene.ego_history
        ])
        ego[i] = rows.reshape(-1)

        for j, track in enumerate(scene.agents[:a_max]):
            st = track.states
            frames = np.column_stack([
                st[:, 0] * POS_SCALE, st[:, 1] * POS_SCALE,
                np.cos(st[:, 2]), np.sin(st[:, 2]),
                st[:, 3] * SPEED_SCALE,
                track.valid.astype(np.float64),
            ])
            frames[~track.valid, :5] = 0.0
            extra = np.zeros(AGENT_EXTRA_F)
            extra[_KIND_INDEX[track.kind]] = 1.0
            extra[3] = track.half_length * POS_SCALE
            extra[4] = track.half_width * POS_SCALE
            agents[i, j] = np.concatenate([frames.reshape(-1), extra])
            agent_valid[i, j] = bool(track.valid.any())

        route = set(scene.route_lane_ids)
        for j, lane in enumerate(scene.lanes[:l_max]):
            total = float(polyline_arc_lengths(lane.centerline)[-1])
            grid = np.linspace(0.0, total, p)
            poses = interpolate_polyline_batch(lane.centerline, grid)
            feat = np.zeros((p, LANE_POINT_F))
            feat[:, 0] = poses[:, 0] * POS_SCALE
            feat[:, 1] = poses[:, 1] * POS_SCALE
            feat[:, 2] = np.cos(poses[:, 2])
            feat[:, 3] = np.sin(poses[:, 2])
            feat[:, 4] = lane.speed_limit * SPEED_SCALE
            feat[:, 5 + _LIGHT_INDEX[lane.traffic_light]] = 1.0
            feat[:, 9] = 1.0 if lane.id in route else 0.0
            feat[:, 10] = 1.0 if lane.left_neighbor else 0.0
            feat[:, 11] = 1.0 if lane.right_neighbor else 0.0
            # point distance to the ego origin, so pooling can tell which lane
            # the ego is on (scaled and negated: max-pool keeps the closest)
            feat[:, 12] = -np.hypot(poses[:, 0], poses[:, 1]) * POS_SCALE
            lanes[i, j] = feat
            lane_valid[i, j] = True

    return {
        "ego": ego,
        "agents": agents,
        "agent_valid": agent_valid,
        "lanes": lanes,
        "lane_valid": lane_valid,
    }
