"""Trajectory proposal scoring against constant-velocity agent projections."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..scene.geometry import obb_overlap, points_to_polygon_distance
from ..scene.types import TICK_DT, Trajectory, VectorScene

COLLISION_PENALTY = 100.0
DRIVABLE_PENALTY = 50.0
PROGRESS_WEIGHT = 5.0
COMFORT_BONUS = 1.0
MAX_ABS_ACCEL = 3.5
MAX_ABS_JERK = 8.0


def score_proposals(candidates: Sequence[Trajectory], scene: VectorScene) -> Trajectory:
    """Pick the best candidate under a collision/drivable/progress/comfort proxy.

    Candidates are ego-frame trajectories. Ties keep the first candidate.
    """
    if not candidates:
        raise ValueError("score_proposals needs at least one candidate")
    scores = [proposal_score(c, scene) for c in candidates]
    best = 0
    for i, s in enumerate(scores):
        if s > scores[best]:
            best = i
    return candidates[best]


def proposal_score(candidate: Trajectory, scene: VectorScene) -> float:
    ego = scene.current_ego
    pts = candidate.points
    n = len(pts)

    # agents projected at constant speed and heading
    collision = False
    for track in scene.agents:
        if not track.valid[-1]:
            continue
        ax, ay, ah, aspeed = track.current
        avx, avy = aspeed * math.cos(ah), aspeed * math.sin(ah)
        reach = (aspeed + 15.0) * candidate.duration + 10.0
        if math.hypot(ax, ay) > reach:
            continue
        for k in range(1, n, 2):
            t = k * TICK_DT
            if obb_overlap(pts[k, 0], pts[k, 1], pts[k, 2], ego.half_length, ego.half_width,
                           ax + avx * t, ay + avy * t, ah,
                           track.half_length, track.half_width):
                collision = True
                break
        if collision:
            break

    polygons = [lane.drivable_polygon for lane in scene.lanes if len(lane.drivable_polygon) >= 3]
    if polygons:
        dists = np.min([points_to_polygon_distance(pts[:, :2], poly) for poly in polygons], axis=0)
        off_road = bool(dists.max() > 0.5)
    else:
        off_road = False

    seg = np.hypot(*np.diff(pts[:, :2], axis=0).T)
    progress = float(seg.sum())
    speeds = seg / TICK_DT
    accels = np.diff(speeds) / TICK_DT if len(speeds) > 1 else np.zeros(1)
    jerks = np.diff(accels) / TICK_DT if len(accels) > 1 else np.zeros(1)
    comfortable = bool(np.abs(accels).max(initial=0.0) <= MAX_ABS_ACCEL
                       and np.abs(jerks).max(initial=0.0) <= MAX_ABS_JERK)

    score = 0.0
    if collision:
        score -= COLLISION_PENALTY
    if off_road:
        score -= DRIVABLE_PENALTY
    score += PROGRESS_WEIGHT * progress / max(1.0, candidate.duration * 15.0)
    if comfortable:
        score += COMFORT_BONUS
    return score


def trajectory_variants(base: Trajectory) -> list[Trajectory]:
    """The prediction plus lateral-offset and speed-scaled fallbacks."""
    variants = [base]
    pts = base.points
    n = len(pts)
    ramp = np.clip(np.arange(n) * TICK_DT / 2.0, 0.0, 1.0)  # full offset after 2 s

    for offset in (-1.0, -0.5, 0.5, 1.0):
        shifted = pts.copy()
        normals = np.column_stack([-np.sin(pts[:, 2]), np.cos(pts[:, 2])])
        shifted[:, :2] += (offset * ramp)[:, None] * normals
        variants.append(Trajectory(dt=base.dt, points=shifted, start_time=base.start_time))

    arcs = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts[:, :2], axis=0).T))])
    from ..scene.geometry import interpolate_polyline_batch
    for factor in (0.7, 0.4, 0.0):
        if arcs[-1] > 1e-6:
            slowed = interpolate_polyline_batch(pts[:, :2], arcs * factor)
            slowed[0] = pts[0]
        else:
            slowed = np.repeat(pts[:1], n, axis=0)
        variants.append(Trajectory(dt=base.dt, points=slowed, start_time=base.start_time))
    return variants
