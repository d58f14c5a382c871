"""Closed-loop evaluation metrics and the composite score.

Eight sub-metrics are computed from a rollout log against its scenario map.
The composite is a weighted mean of progress, TTC, speed-limit, and comfort,
gated multiplicatively by collision, drivable, making-progress, and direction
compliance. Hard-subset selection keeps the lowest scorers per scenario type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .scene.geometry import (
    obb_corners,
    obb_overlap,
    points_to_polygon_distance,
    project_to_polyline,
    wrap_angle,
)
from .scene.route import reference_progress, scenario_route_path
from .scene.types import TICK_DT, Scenario
from .sim.engine import RolloutLog

DRIVABLE_TOLERANCE = 0.3          # m outside the drivable region before failing
DIRECTION_COMPLIANT = 2.0         # m of reverse motion per 1 s window
DIRECTION_VIOLATION = 6.0
SPEED_VIOLATION_SCALE = 2.23      # m/s of overspeed that zeroes a frame
TTC_BOUND = 0.95                  # s
TTC_HORIZON = 3.0
TTC_STEP = 0.1
PROGRESS_THRESHOLD = 0.2          # making-progress cut (strict)


@dataclass(frozen=True)
class ComfortThresholds:
    """Kinematic comfort bounds (SI). Longitudinal acceleration is asymmetric."""

    min_lon_accel: float = -4.05
    max_lon_accel: float = 2.40
    max_abs_lat_accel: float = 4.89
    max_abs_yaw_rate: float = 0.95
    max_abs_yaw_accel: float = 1.93
    max_abs_lon_jerk: float = 4.13
    max_abs_jerk: float = 8.37

    def __post_init__(self):
        if self.min_lon_accel >= 0 or self.max_lon_accel <= 0:
            raise ValueError("longitudinal accel bounds must straddle zero")
        for name in ("max_abs_lat_accel", "max_abs_yaw_rate", "max_abs_yaw_accel",
                     "max_abs_lon_jerk", "max_abs_jerk"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_COMFORT = ComfortThresholds()


@dataclass(frozen=True)
class MetricReport:
    drivable: float
    direction: float
    comfort: float
    progress: float
    collisions: float
    speed_limit: float
    ttc: float
    making_progress: float
    score: float = field(default=-1.0)

    def __post_init__(self):
        checks = {
            "drivable": (self.drivable, (0.0, 1.0)),
            "direction": (self.direction, (0.0, 0.5, 1.0)),
            "comfort": (self.comfort, (0.0, 1.0)),
            "collisions": (self.collisions, (0.0, 0.5, 1.0)),
            "ttc": (self.ttc, (0.0, 1.0)),
            "making_progress": (self.making_progress, (0.0, 1.0)),
        }
        for name, (value, allowed) in checks.items():
            if value not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {value}")
        for name, value in (("progress", self.progress), ("speed_limit", self.speed_limit)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        expected = composite_score(
            self.progress, self.ttc, self.speed_limit, self.comfort,
            self.collisions, self.drivable, self.making_progress, self.direction)
        if self.score < 0:
            object.__setattr__(self, "score", expected)
        elif abs(self.score - expected) > 1e-9:
            raise ValueError(f"score {self.score} inconsistent with composite {expected}")

    def to_dict(self) -> dict:
        return {
            "drivable": self.drivable, "direction": self.direction,
            "comfort": self.comfort, "progress": self.progress,
            "collisions": self.collisions, "speed_limit": self.speed_limit,
            "ttc": self.ttc, "making_progress": self.making_progress,
            "score": self.score,
        }


def composite_score(progress, ttc, speed_limit, comfort,
                    collisions, drivable, making_prog, direction) -> float:
    weighted = (progress * 5.0 + ttc * 5.0 + speed_limit * 4.0 + comfort * 2.0) / 16.0
    return 100.0 * weighted * collisions * drivable * making_prog * direction


# -- geometry helpers (vectorized over frames) ----------------------------------


def _ego_corner_clearances(log: RolloutLog, scenario: Scenario) -> np.ndarray:
    """Per-frame max corner distance to the drivable region union."""
    corners = np.vstack([
        obb_corners(r.ego.x, r.ego.y, r.ego.heading, r.ego.half_length, r.ego.half_width)
        for r in log.records
    ])
    polygons = [lane.drivable_polygon for lane in scenario.lanes if len(lane.drivable_polygon) >= 3]
    if not polygons:
        return np.zeros(len(log.records))
    dists = np.min([points_to_polygon_distance(corners, poly) for poly in polygons], axis=0)
    return dists.reshape(len(log.records), 4).max(axis=1)


# -- sub-metrics --------------------------------------------------------------


def drivable_compliance(log: RolloutLog, scenario: Scenario,
                        tolerance: float = DRIVABLE_TOLERANCE) -> float:
    """1 unless some frame has an ego corner more than `tolerance` outside."""
    if not log.records:
        return 1.0
    return 0.0 if _ego_corner_clearances(log, scenario).max() > tolerance else 1.0


def direction_compliance(log: RolloutLog, scenario: Scenario) -> float:
    """Score the worst 1 s window of motion against the route direction."""
    if len(log.records) < 2:
        return 1.0
    path, _ = scenario_route_path(scenario)
    pos = np.array([[r.ego.x, r.ego.y] for r in log.records])
    moves = np.diff(pos, axis=0)
    backward = np.zeros(len(moves))
    for i, (p, m) in enumerate(zip(pos[:-1], moves)):
        arc, _ = project_to_polyline(p[0], p[1], path)
        a0 = np.asarray(_interp(path, arc))
        a1 = np.asarray(_interp(path, arc + 0.5))
        tangent = a1 - a0
        norm = np.hypot(*tangent)
        if norm < 1e-9:
            continue
        progress = float(m @ tangent) / norm
        backward[i] = max(0.0, -progress)
    window = max(1, int(round(1.0 / TICK_DT)))
    worst = max(
        float(backward[i:i + window].sum())
        for i in range(max(1, len(backward) - window + 1))
    )
    if worst < DIRECTION_COMPLIANT:
        return 1.0
    if worst > DIRECTION_VIOLATION:
        return 0.0
    return 0.5


def _interp(path: np.ndarray, arc: float) -> tuple[float, float]:
    from .scene.geometry import interpolate_polyline
    x, y, _ = interpolate_polyline(path, arc)
    return x, y


def comfort(log: RolloutLog, thresholds: ComfortThresholds = DEFAULT_COMFORT) -> float:
    """1 iff all finite-difference kinematic profiles stay inside bounds."""
    if len(log.records) < 4:
        raise ValueError("comfort needs at least 4 frames for jerk differences")
    profiles = comfort_profiles(log)
    t = thresholds
    ok = (
        profiles["lon_accel"].min(initial=0.0) >= t.min_lon_accel
        and profiles["lon_accel"].max(initial=0.0) <= t.max_lon_accel
        and np.abs(profiles["lat_accel"]).max(initial=0.0) <= t.max_abs_lat_accel
        and np.abs(profiles["yaw_rate"]).max(initial=0.0) <= t.max_abs_yaw_rate
        and np.abs(profiles["yaw_accel"]).max(initial=0.0) <= t.max_abs_yaw_accel
        and np.abs(profiles["lon_jerk"]).max(initial=0.0) <= t.max_abs_lon_jerk
        and profiles["jerk_mag"].max(initial=0.0) <= t.max_abs_jerk
    )
    return 1.0 if ok else 0.0


def comfort_profiles(log: RolloutLog) -> dict[str, np.ndarray]:
    """Finite-difference kinematics from logged ego poses."""
    pos = np.array([[r.ego.x, r.ego.y] for r in log.records])
    headings = np.array([r.ego.heading for r in log.records])
    dt = TICK_DT
    speeds = np.hypot(*np.diff(pos, axis=0).T) / dt                  # n-1
    lon_accel = np.diff(speeds) / dt                                 # n-2
    yaw_rate = np.array([wrap_angle(d) for d in np.diff(headings)]) / dt  # n-1
    yaw_accel = np.diff(yaw_rate) / dt                               # n-2
    lat_accel = speeds[1:] * yaw_rate[1:]                            # n-2, aligned with lon_accel
    lon_jerk = np.diff(lon_accel) / dt                               # n-3
    lat_jerk = np.diff(lat_accel) / dt                               # n-3
    jerk_mag = np.hypot(lon_jerk, lat_jerk)
    return {
        "speed": speeds, "lon_accel": lon_accel, "lat_accel": lat_accel,
        "yaw_rate": yaw_rate, "yaw_accel": yaw_accel,
        "lon_jerk": lon_jerk, "jerk_mag": jerk_mag,
    }


def progress_ratio(log: RolloutLog, scenario: Scenario) -> float:
    """Ego progress along the route relative to speed-limit travel."""
    if not log.records:
        return 0.0
    start = (log.records[0].ego.x, log.records[0].ego.y)
    reference = reference_progress(scenario, start)
    if reference <= 0.0:
        return 1.0
    path, _ = scenario_route_path(scenario)
    arcs = [project_to_polyline(r.ego.x, r.ego.y, path)[0] for r in log.records]
    achieved = max(arcs) - arcs[0]
    return float(np.clip(achieved / reference, 0.0, 1.0))


def making_progress(progress: float) -> float:
    return 1.0 if progress > PROGRESS_THRESHOLD else 0.0


def at_fault_collisions(log: RolloutLog) -> float:
    """1 with no at-fault events; 0.5 for a single static-object strike; else 0."""
    at_fault = [c for c in log.collisions if c.at_fault]
    if not at_fault:
        return 1.0
    if len(at_fault) == 1 and at_fault[0].agent_kind == "static_object":
        return 0.5
    return 0.0


def speed_limit_compliance(log: RolloutLog, scenario: Scenario,
                           scale: float = SPEED_VIOLATION_SCALE) -> float:
    """1 minus the mean per-frame overspeed fraction (saturating at `scale`)."""
    if not log.records:
        return 1.0
    path, limits = scenario_route_path(scenario)
    from .scene.geometry import polyline_arc_lengths
    arcs = polyline_arc_lengths(path)
    deductions = []
    for r in log.records:
        arc, _ = project_to_polyline(r.ego.x, r.ego.y, path)
        idx = int(np.clip(np.searchsorted(arcs, arc, side="right") - 1, 0, len(limits) - 1))
        overspeed = max(0.0, r.ego.speed - float(limits[idx]))
        deductions.append(min(1.0, overspeed / scale))
    return float(1.0 - np.mean(deductions))


def ttc_within_bound(log: RolloutLog, bound: float = TTC_BOUND,
                     horizon: float = TTC_HORIZON) -> float:
    """1 iff every frame's constant-velocity time to collision exceeds the bound."""
    return 1.0 if min_ttc(log, horizon) > bound else 0.0


def min_ttc(log: RolloutLog, horizon: float = TTC_HORIZON) -> float:
    """Minimum projected TTC over frames and agents; inf when nothing overlaps."""
    best = math.inf
    steps = int(round(horizon / TTC_STEP))
    for r in log.records:
        ego = r.ego
        if not r.agents:
            continue
        evx = ego.speed * math.cos(ego.heading)
        evy = ego.speed * math.sin(ego.heading)
        for a in r.agents:
            # bounding-circle prefilter over the whole horizon
            closing = ego.speed + a.speed
            reach = closing * horizon + a.half_length + ego.half_length + 2.0
            if math.hypot(a.x - ego.x, a.y - ego.y) > reach:
                continue
            avx = a.speed * math.cos(a.heading)
            avy = a.speed * math.sin(a.heading)
            for k in range(1, steps + 1):
                t = k * TTC_STEP
                if t >= best:
                    break
                if obb_overlap(
                    ego.x + evx * t, ego.y + evy * t, ego.heading,
                    ego.half_length, ego.half_width,
                    a.x + avx * t, a.y + avy * t, a.heading,
                    a.half_length, a.half_width,
                ):
                    best = min(best, t)
                    break
    return best


def compute_report(log: RolloutLog, scenario: Scenario,
                   thresholds: ComfortThresholds = DEFAULT_COMFORT) -> MetricReport:
    progress = progress_ratio(log, scenario)
    return MetricReport(
        drivable=drivable_compliance(log, scenario),
        direction=direction_compliance(log, scenario),
        comfort=comfort(log, thresholds),
        progress=progress,
        collisions=at_fault_collisions(log),
        speed_limit=speed_limit_compliance(log, scenario),
        ttc=ttc_within_bound(log),
        making_progress=making_progress(progress),
    )


def select_hard_subset(scores: Mapping[str, tuple[str, float]], n: int) -> list[str]:
    """Per scenario type, the ids of the n lowest scores (ties by id ascending)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    by_type: dict[str, list[tuple[float, str]]] = {}
    for sid, (stype, score) in scores.items():
        by_type.setdefault(stype, []).append((score, sid))
    selected: list[str] = []
    for stype in sorted(by_type):
        entries = sorted(by_type[stype], key=lambda e: (e[0], e[1]))
        selected.extend(sid for _, sid in entries[:n])
    return selected
