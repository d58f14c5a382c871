"""Ego motion model and trajectory utilities."""

from __future__ import annotations

import math

import numpy as np

from .geometry import wrap_angle
from .types import EGO_WHEELBASE, EgoState, InvalidStateError, Trajectory


def propagate_bicycle(
    state: EgoState,
    accel: float,
    steer: float,
    dt: float,
    wheelbase: float = EGO_WHEELBASE,
) -> EgoState:
    """Advance the ego one step with a semi-implicit rear-axle kinematic bicycle.

    Speed updates first and is clamped at zero; the heading then turns with the
    new speed, and the position advances along the new heading.
    """
    if not (math.isfinite(accel) and math.isfinite(steer) and math.isfinite(dt)):
        raise InvalidStateError("propagate_bicycle: non-finite input")
    if dt <= 0:
        raise InvalidStateError(f"propagate_bicycle: dt must be positive, got {dt}")
    if wheelbase <= 0:
        raise InvalidStateError(f"propagate_bicycle: wheelbase must be positive, got {wheelbase}")

    speed = max(0.0, state.speed + accel * dt)
    yaw_rate = speed / wheelbase * math.tan(steer)
    heading = wrap_angle(state.heading + yaw_rate * dt)
    x = state.x + speed * dt * math.cos(heading)
    y = state.y + speed * dt * math.sin(heading)
    applied_accel = (speed - state.speed) / dt  # differs from `accel` when clamped at 0
    return EgoState(
        x=x,
        y=y,
        heading=heading,
        vx=speed,
        vy=0.0,
        ax=applied_accel,
        ay=speed * yaw_rate,
        steering=steer,
        half_length=state.half_length,
        half_width=state.half_width,
    )


def arc_length(traj: Trajectory) -> float:
    """Sum of consecutive point distances; a single point has length 0."""
    if len(traj) < 1:
        raise InvalidStateError("arc_length needs at least one point")
    if len(traj) == 1:
        return 0.0
    xy = traj.xy
    return float(np.hypot(np.diff(xy[:, 0]), np.diff(xy[:, 1])).sum())


def interpolate_heading(h0: float, h1: float, t: float) -> float:
    """Shortest-arc interpolation between two headings, t in [0, 1]."""
    return wrap_angle(h0 + wrap_angle(h1 - h0) * t)


def resample_trajectory(traj: Trajectory, dt_out: float, horizon: float) -> Trajectory:
    """Resample onto a [0, horizon] grid at dt_out spacing.

    Positions interpolate linearly, headings along the shortest arc. The first
    output point is the first input point. Raises if the input does not cover
    the requested horizon.
    """
    if dt_out <= 0:
        raise InvalidStateError(f"dt_out must be positive, got {dt_out}")
    coverage = traj.duration
    n_out = int(round(horizon / dt_out))
    if horizon > coverage + 1e-9:
        raise InvalidStateError(
            f"horizon {horizon} s exceeds trajectory coverage {coverage:.3f} s")

    pts = traj.points
    out = np.empty((n_out + 1, 3))
    for k in range(n_out + 1):
        t = k * dt_out
        pos = t / traj.dt
        i = min(int(pos), len(pts) - 1)
        frac = pos - i
        if frac <= 1e-12 or i >= len(pts) - 1:
            out[k] = pts[i]
        else:
            p0, p1 = pts[i], pts[i + 1]
            out[k, 0] = p0[0] + (p1[0] - p0[0]) * frac
            out[k, 1] = p0[1] + (p1[1] - p0[1]) * frac
            out[k, 2] = interpolate_heading(p0[2], p1[2], frac)
    return Trajectory(dt=dt_out, points=out, start_time=traj.start_time)
