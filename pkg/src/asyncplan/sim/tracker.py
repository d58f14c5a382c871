"""Trajectory tracking: exact replay and pure pursuit."""

from __future__ import annotations

import math

import numpy as np

from ..scene.geometry import wrap_angle
from ..scene.types import EGO_WHEELBASE, TICK_DT, EgoState, InvalidStateError, Trajectory

PURSUIT_LOOKAHEAD_S = 1.0
PURSUIT_SPEED_GAIN = 1.0


def track_trajectory(
    ego: EgoState,
    plan: Trajectory,
    mode: str = "replay",
    wheelbase: float = EGO_WHEELBASE,
) -> tuple[float, float]:
    """Controls (accel, steer) that follow the plan for the next tick.

    `replay` inverts the bicycle update so the next propagate lands exactly on
    the plan's second point (the pose 0.1 s ahead). `pursuit` steers toward a
    1 s lookahead point with proportional speed control. A degenerate plan
    (all points coincident) commands a full stop.
    """
    if len(plan) < 2:
        raise InvalidStateError("plan needs at least 2 points")
    if abs(plan.dt - TICK_DT) > 1e-9:
        raise InvalidStateError(f"plans must be sampled at {TICK_DT} s, got {plan.dt}")
    if mode not in ("replay", "pursuit"):
        raise InvalidStateError(f"unknown tracker mode {mode!r}")

    xy = plan.xy
    if np.hypot(*(xy - xy[0]).T).max() < 1e-9:
        return (-ego.speed / TICK_DT, 0.0)

    if mode == "replay":
        return _replay_controls(ego, xy[1], wheelbase)
    return _pursuit_controls(ego, plan, wheelbase)


def _replay_controls(ego: EgoState, target: np.ndarray, wheelbase: float) -> tuple[float, float]:
    dx = target[0] - ego.x
    dy = target[1] - ego.y
    dist = math.hypot(dx, dy)
    speed_next = dist / TICK_DT
    accel = (speed_next - ego.speed) / TICK_DT
    if speed_next < 1e-12:
        return (accel, 0.0)
    heading_next = math.atan2(dy, dx)
    dpsi = wrap_angle(heading_next - ego.heading)
    steer = math.atan(dpsi * wheelbase / (speed_next * TICK_DT))
    return (accel, steer)


def _pursuit_controls(ego: EgoState, plan: Trajectory, wheelbase: float) -> tuple[float, float]:
    xy = plan.xy
    look_idx = min(len(xy) - 1, int(round(PURSUIT_LOOKAHEAD_S / TICK_DT)))
    target = xy[look_idx]
    dx = target[0] - ego.x
    dy = target[1] - ego.y
    dist = math.hypot(dx, dy)
    if dist < 1e-6:
        steer = 0.0
    else:
        alpha = wrap_angle(math.atan2(dy, dx) - ego.heading)
        steer = math.atan(2.0 * wheelbase * math.sin(alpha) / dist)

    # speed target from the plan's near-term spacing
    v_plan = math.hypot(*(xy[1] - xy[0])) / TICK_DT
    accel = PURSUIT_SPEED_GAIN * (v_plan - ego.speed)
    return (accel, steer)
