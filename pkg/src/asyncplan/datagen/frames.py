"""Fine-tuning frame extraction from closed-loop rollouts.

Samples are taken every 8 s once a full 20-frame history exists, each pairing
an ego-relative vectorized scene with the 8 s ground-truth futures, routing
instructions derived from the future pathway, and alignment targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..guidance.model import AlignmentTargets, LIGHT_CLASSES
from ..scene.geometry import project_to_polyline, to_frame, wrap_angle
from ..scene.types import (
    HISTORY_LEN,
    PLAN_HORIZON_STEPS,
    TICK_DT,
    Scenario,
    Trajectory,
    VectorScene,
)
from ..sim.engine import RolloutLog
from ..sim.scene_builder import build_vector_scene
from .instructions import RoutingInstruction, path_to_instructions

SAMPLE_STRIDE_S = 8.0
DECISION_RATIO = 0.1          # +-10% future/current speed for accelerate/decelerate
LOW_SPEED = 0.5


@dataclass(frozen=True)
class FinetuneSample:
    scene: VectorScene
    instructions: tuple[RoutingInstruction, ...]
    targets: AlignmentTargets
    ego_future: np.ndarray        # (T, 3) ego-frame
    agent_futures: np.ndarray     # (A_scene, T, 2) ego-frame, scene agent order
    future_valid: np.ndarray      # (A_scene,)
    scenario_id: str
    archetype: str
    t: float
    split: str = "train"


def extract_finetune_frames(log: RolloutLog, scenario: Scenario,
                            include_start: bool = False) -> tuple[list[FinetuneSample], int]:
    """Samples at 8 s strides once a full history exists; returns
    (samples, skipped_for_horizon).

    `include_start` additionally samples the first simulation frames (front-
    padded histories), which every closed-loop run begins with; training on
    them keeps scenario starts in-distribution.
    """
    records = log.records
    t_horizon = PLAN_HORIZON_STEPS
    first = HISTORY_LEN
    stride = int(round(SAMPLE_STRIDE_S / TICK_DT))
    samples: list[FinetuneSample] = []
    skipped = 0
    indices = list(range(first, len(records), stride))
    if include_start:
        indices = [0, 10] + indices
    for i in indices:
        if i + t_horizon > len(records) - 1:
            skipped += 1
            continue
        samples.append(_sample_at(log, scenario, i))
    return samples, skipped


def _sample_at(log: RolloutLog, scenario: Scenario, i: int) -> FinetuneSample:
    records = log.records
    history = records[max(0, i - HISTORY_LEN + 1): i + 1]
    scene = build_vector_scene(
        [r.ego for r in history],
        [r.agents for r in history],
        scenario.lanes,
        dict(records[i].lights),
        scenario.route_lane_ids,
    )
    anchor = records[i].ego

    future = records[i + 1: i + 1 + PLAN_HORIZON_STEPS]
    ego_xy = to_frame(np.array([[r.ego.x, r.ego.y] for r in future]),
                      anchor.x, anchor.y, anchor.heading)
    ego_head = np.array([wrap_angle(r.ego.heading - anchor.heading) for r in future])
    ego_future = np.column_stack([ego_xy, ego_head])

    n_slots = len(scene.agents)
    agent_futures = np.zeros((n_slots, PLAN_HORIZON_STEPS, 2))
    future_valid = np.zeros(n_slots, dtype=bool)
    for j, track in enumerate(scene.agents):
        ok = True
        for k, rec in enumerate(future):
            match = next((a for a in rec.agents if a.id == track.id), None)
            if match is None:
                ok = False
                break
            agent_futures[j, k] = to_frame(
                np.array([[match.x, match.y]]), anchor.x, anchor.y, anchor.heading)[0]
        future_valid[j] = ok and bool(track.valid[-1])

    pathway = Trajectory(dt=TICK_DT, points=ego_future, start_time=records[i].t)
    instructions = tuple(path_to_instructions(pathway))

    targets = _alignment_targets(scene, anchor, future, ego_future, scenario)
    return FinetuneSample(
        scene=scene, instructions=instructions, targets=targets,
        ego_future=ego_future, agent_futures=agent_futures, future_valid=future_valid,
        scenario_id=scenario.id, archetype=scenario.archetype, t=records[i].t,
    )


def _closest_route_lane(scene: VectorScene, x: float = 0.0, y: float = 0.0):
    best, best_dist = None, np.inf
    for lane in scene.lanes:
        if lane.id not in scene.route_lane_ids:
            continue
        _, dist = project_to_polyline(x, y, lane.centerline)
        if dist < best_dist:
            best, best_dist = lane, dist
    return best


def _successor_closure(scene: VectorScene, lane_id: str) -> set[str]:
    lanes = {lane.id: lane for lane in scene.lanes}
    closure = {lane_id}
    frontier = [lane_id]
    while frontier:
        for nxt in lanes[frontier.pop()].successors:
            if nxt not in closure:
                closure.add(nxt)
                frontier.append(nxt)
    return closure


def _alignment_targets(scene: VectorScene, anchor, future, ego_future: np.ndarray,
                       scenario: Scenario) -> AlignmentTargets:
    x_va = np.array([anchor.vx, anchor.vy, anchor.ax, anchor.ay])

    current_speed = anchor.speed
    future_speed = float(np.mean([r.ego.speed for r in future]))
    if current_speed < LOW_SPEED:
        x_dec = 0 if future_speed > 1.0 else 2
    elif future_speed > current_speed * (1.0 + DECISION_RATIO):
        x_dec = 0
    elif future_speed < current_speed * (1.0 - DECISION_RATIO):
        x_dec = 1
    else:
        x_dec = 2

    lane = _closest_route_lane(scene)
    if lane is None:
        x_traf = LIGHT_CLASSES.index("unknown")
        x_adj = np.zeros(2)
        x_chg = 0.0
    else:
        x_traf = LIGHT_CLASSES.index(lane.traffic_light)
        x_adj = np.array([1.0 if lane.left_neighbor else 0.0,
                          1.0 if lane.right_neighbor else 0.0])
        # lane change: the future path's closest lane leaves the successor chain
        closure = _successor_closure(scene, lane.id)
        x_chg = 0.0
        for xy in ego_future[::10]:
            closest = min(
                scene.lanes,
                key=lambda l: project_to_polyline(xy[0], xy[1], l.centerline)[1],
            )
            if closest.id not in closure:
                x_chg = 1.0
                break
    return AlignmentTargets(x_va=x_va, x_dec=x_dec, x_traf=x_traf, x_adj=x_adj, x_chg=x_chg)


def assign_splits(samples: Sequence[FinetuneSample], val_fraction: float = 0.2,
                  seed: int = 0) -> list[FinetuneSample]:
    """Stratified train/val split over disjoint scenario ids."""
    from dataclasses import replace

    by_arch: dict[str, list[str]] = {}
    for s in samples:
        ids = by_arch.setdefault(s.archetype, [])
        if s.scenario_id not in ids:
            ids.append(s.scenario_id)
    val_ids = set()
    rng = np.random.default_rng(seed)
    for arch in sorted(by_arch):
        ids = sorted(by_arch[arch])
        n_val = max(1, int(round(len(ids) * val_fraction)))
        val_ids.update(rng.choice(ids, size=n_val, replace=False))
    return [replace(s, split="val" if s.scenario_id in val_ids else "train")
            for s in samples]
