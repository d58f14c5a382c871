"""Closed-loop wrapper around the learned planner network."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..scene.geometry import interpolate_polyline_batch
from ..scene.types import TICK_DT, Trajectory, VectorScene
from .model import PlannerNet
from .proposals import score_proposals, trajectory_variants
from .types import InstructionFeature

MAX_PLAN_ACCEL = 2.5     # m/s^2, speed-profile clamp for executed plans
MAX_PLAN_DECEL = 4.5


def _boxcar(values: np.ndarray, window: int) -> np.ndarray:
    if window <= 1 or len(values) < window:
        return values
    kernel = np.ones(window) / window
    pad = window // 2
    # odd reflection keeps linear segments exact at the edges
    if values.ndim == 1:
        padded = np.pad(values, (pad, pad), mode="reflect", reflect_type="odd")
        return np.convolve(padded, kernel, mode="valid")[:len(values)]
    padded = np.pad(values, ((pad, pad), (0, 0)), mode="reflect", reflect_type="odd")
    return np.column_stack([
        np.convolve(padded[:, j], kernel, mode="valid")[:len(values)]
        for j in range(values.shape[1])
    ])


def kinematic_projection(points: np.ndarray, v0: float) -> np.ndarray:
    """Re-time a predicted path onto a feasible speed profile.

    The path geometry is lightly smoothed (prediction jitter would otherwise
    alias into phantom arc length), then the per-tick speed changes are
    clamped, so raw network output cannot command impossible jumps to the
    tracker. Returns (T, 3) starting at the origin pose.
    """
    pts = np.asarray(points, dtype=np.float64)
    smooth_xy = _boxcar(pts[:, :2], 5)
    smooth_xy[0] = pts[0, :2]
    seg = np.hypot(*np.diff(smooth_xy, axis=0).T)
    raw_speeds = _boxcar(seg / TICK_DT, 3)
    v = v0
    arcs = np.empty(len(pts))
    arcs[0] = 0.0
    for k, target in enumerate(raw_speeds):
        v = float(np.clip(target, v - MAX_PLAN_DECEL * TICK_DT, v + MAX_PLAN_ACCEL * TICK_DT))
        v = max(v, 0.0)
        arcs[k + 1] = arcs[k] + v * TICK_DT
    total = float(seg.sum())
    if total < 1e-9:
        return np.repeat(pts[:1], len(pts), axis=0)
    out = interpolate_polyline_batch(smooth_xy, np.minimum(arcs, total))
    out[0] = pts[0]
    return out


class LearnedPlanner:
    """Adapts a PlannerNet to the simulator's planner protocol.

    The executable plan is the current pose followed by the predicted future,
    re-timed through the kinematic feasibility projection (ego frame). With
    `use_scorer`, the prediction competes against lateral/speed fallback
    variants under the proposal scorer.
    """

    def __init__(self, model: PlannerNet, use_scorer: bool = False,
                 feasibility: bool = True):
        self.model = model
        self.use_scorer = use_scorer
        self.feasibility = feasibility
        self.name = "learned_scored" if use_scorer else "learned"

    def plan(self, scene: VectorScene, instructions: Sequence = (),
             feature: Optional[InstructionFeature] = None) -> Trajectory:
        vector = feature.vector if feature is not None else None
        pred = self.model.decode(scene, vector)
        future = pred.ego_trajectory[0]                    # (T, 3)
        points = np.vstack([[0.0, 0.0, 0.0], future[:-1]])
        if self.feasibility:
            points = kinematic_projection(points, scene.current_ego.speed)
        plan = Trajectory(dt=TICK_DT, points=points, start_time=0.0)
        if not self.use_scorer:
            return plan
        return score_proposals(trajectory_variants(plan), scene)
