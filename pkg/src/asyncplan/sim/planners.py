"""Rule-based baseline planner and the planner protocol."""

from __future__ import annotations

import math
from typing import Optional, Protocol, Sequence

import numpy as np

from ..datagen.instructions import Command, RoutingInstruction
from ..planner.types import InstructionFeature
from ..scene.geometry import (
    interpolate_polyline,
    interpolate_polyline_batch,
    polyline_arc_lengths,
    project_to_polyline,
    wrap_angle,
)
from ..scene.route import route_path
from ..scene.types import PLAN_HORIZON_STEPS, TICK_DT, Trajectory, VectorScene
from .idm import IdmParams, idm_accel

LEADER_SCAN_RANGE = 100.0
CORRIDOR_MARGIN = 0.4
RECOVERY_TAU = 0.7   # s; lateral offset to the reference path decays with this constant


class Planner(Protocol):
    name: str

    def plan(
        self,
        scene: VectorScene,
        instructions: Sequence[RoutingInstruction],
        feature: Optional[InstructionFeature],
    ) -> Trajectory:
        """80-point ego-frame trajectory starting at the current pose."""
        ...


class IdmPlanner:
    """Car-following along the route reference path.

    Yields to the nearest agent blocking the route corridor, stops for red or
    yellow lights at the lane boundary, and honors an injected Stop override by
    braking at the comfortable deceleration.
    """

    name = "idm"

    def __init__(self, params: Optional[IdmParams] = None):
        self.params = params

    def plan(self, scene, instructions=(), feature=None) -> Trajectory:
        ego = scene.current_ego
        lanes = {lane.id: lane for lane in scene.lanes}
        path, limits = route_path(lanes, scene.route_lane_ids)
        arcs = polyline_arc_lengths(path)
        start_arc, _ = project_to_polyline(0.0, 0.0, path)

        stop_override = any(i.cmd == Command.STOP for i in instructions)
        limit_idx = min(int(np.searchsorted(arcs, start_arc, side="right")), len(limits) - 1)
        params = self.params or IdmParams(v0=float(limits[limit_idx]))

        gap, v_lead = self._leader(scene, lanes, path, start_arc, ego.half_length)

        v = ego.speed
        arc = start_arc
        rel_gap = gap
        arcs_out = np.empty(PLAN_HORIZON_STEPS - 1)
        for k in range(PLAN_HORIZON_STEPS - 1):
            if stop_override:
                accel = -params.b if v > 0 else 0.0
            else:
                accel = idm_accel(v, v_lead, rel_gap, params)
            v = max(0.0, v + accel * TICK_DT)
            arc += v * TICK_DT
            if rel_gap is not None:
                rel_gap += ((v_lead or 0.0) - v) * TICK_DT
                rel_gap = max(rel_gap, 1e-3)
            arcs_out[k] = arc

        points = np.zeros((PLAN_HORIZON_STEPS, 3))
        points[1:] = interpolate_polyline_batch(path, arcs_out)

        # ease any lateral offset back onto the reference instead of snapping
        p0 = interpolate_polyline(path, start_arc)
        tangent = np.array([math.cos(p0[2]), math.sin(p0[2])])
        offset_vec = -np.array([p0[0], p0[1]])  # path point -> ego (origin)
        lateral = tangent[0] * offset_vec[1] - tangent[1] * offset_vec[0]
        if abs(lateral) > 1e-6:
            ts = np.arange(1, PLAN_HORIZON_STEPS) * TICK_DT
            decay = lateral * np.exp(-ts / RECOVERY_TAU)
            headings = points[1:, 2]
            normals = np.column_stack([-np.sin(headings), np.cos(headings)])
            points[1:, :2] += normals * decay[:, None]
        return Trajectory(dt=TICK_DT, points=points, start_time=0.0)

    def _leader(self, scene, lanes, path, start_arc, ego_half_length):
        """Nearest blocking obstacle ahead: (bumper gap, leader speed) or (None, None)."""
        best_gap, best_speed = None, None

        def consider(gap, speed):
            nonlocal best_gap, best_speed
            if gap is not None and (best_gap is None or gap < best_gap):
                best_gap, best_speed = gap, speed

        for agent in scene.agents:
            if not agent.valid[-1]:
                continue
            x, y, heading, speed = agent.current
            width = scene.current_ego.half_width + agent.half_width + CORRIDOR_MARGIN
            # consider the agent where it is and where it is about to be, so
            # crossing traffic entering the corridor triggers yielding early
            lookahead = (0.0, 0.8, 1.6, 2.4)
            best = None
            for dt_ahead in lookahead:
                px = x + speed * math.cos(heading) * dt_ahead
                py = y + speed * math.sin(heading) * dt_ahead
                arc, lateral = project_to_polyline(px, py, path)
                ahead = arc - start_arc
                if lateral <= width and 0 < ahead <= LEADER_SCAN_RANGE:
                    if best is None or ahead < best:
                        best = ahead
            if best is None:
                continue
            # longitudinal closing speed along the path tangent
            _, _, tangent = interpolate_polyline(path, start_arc + best)
            v_along = speed * math.cos(wrap_angle(heading - tangent))
            gap = best - agent.half_length - ego_half_length
            consider(max(gap, 1e-3) if gap > -2.0 else 1e-3, max(0.0, v_along))

        # red/yellow route lanes act as a stop line at their entry
        for rid in scene.route_lane_ids:
            lane = lanes[rid]
            if lane.traffic_light not in ("red", "yellow"):
                continue
            entry = lane.centerline[0]
            entry_arc, _ = project_to_polyline(entry[0], entry[1], path)
            ahead = entry_arc - start_arc
            if 0.5 < ahead <= LEADER_SCAN_RANGE:
                consider(max(ahead - ego_half_length, 1e-3), 0.0)

        return best_gap, best_speed
