"""Route reference paths: concatenated lane centerlines with lane-change blends."""

from __future__ import annotations

import numpy as np

from .geometry import (
    interpolate_polyline_batch,
    polyline_arc_lengths,
    project_points_to_polyline,
    project_to_polyline,
)
from .types import Lane, Scenario

# A neighbor-to-neighbor route transition eases laterally over this distance.
BLEND_LENGTH = 30.0
BLEND_START_FRAC = 0.3
SAMPLE_SPACING = 0.5


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


_BLEND_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _blend_params(lane: Lane, nxt: Lane) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(arc grid on `lane`, blend weights, matched arcs on `nxt`)."""
    total = float(polyline_arc_lengths(lane.centerline)[-1])
    n_total = float(polyline_arc_lengths(nxt.centerline)[-1])
    key = (lane.id, nxt.id, round(total, 6), round(n_total, 6))
    hit = _BLEND_CACHE.get(key)
    if hit is not None:
        return hit
    s_start = BLEND_START_FRAC * total
    s_end = min(total, s_start + BLEND_LENGTH)
    grid = np.arange(0.0, s_end + SAMPLE_SPACING, SAMPLE_SPACING)
    own = interpolate_polyline_batch(lane.centerline, grid)[:, :2]
    w = _smoothstep((grid - s_start) / max(1e-9, s_end - s_start))
    neighbor_arcs = project_points_to_polyline(own, nxt.centerline)
    if len(_BLEND_CACHE) > 256:
        _BLEND_CACHE.clear()
    _BLEND_CACHE[key] = (grid, w, neighbor_arcs)
    return _BLEND_CACHE[key]


def route_path(lanes: dict[str, Lane], route_ids: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Reference drive path along the route.

    Successor lanes concatenate; neighbor lanes blend laterally starting at a
    fixed fraction of the current lane. Returns (points (N,2), speed limit per
    point (N,)) sampled at SAMPLE_SPACING.
    """
    points: list[np.ndarray] = []
    limits: list[np.ndarray] = []

    def _append(pts: np.ndarray, limit: float) -> None:
        if points and len(pts) and np.allclose(points[-1][-1], pts[0]):
            pts = pts[1:]
        if len(pts):
            points.append(pts)
            limits.append(np.full(len(pts), limit))

    i = 0
    while i < len(route_ids):
        lane = lanes[route_ids[i]]
        nxt = lanes[route_ids[i + 1]] if i + 1 < len(route_ids) else None
        is_neighbor_hop = nxt is not None and nxt.id in (lane.left_neighbor, lane.right_neighbor)
        if not is_neighbor_hop:
            _append(np.asarray(lane.centerline), lane.speed_limit)
            i += 1
            continue

        # Lateral blend from this lane into its neighbor. The blend geometry in
        # arc space is invariant under rigid frames, so it caches across steps.
        grid, w, neighbor_arcs = _blend_params(lane, nxt)
        own = interpolate_polyline_batch(lane.centerline, grid)[:, :2]
        neighbor_pts = interpolate_polyline_batch(nxt.centerline, neighbor_arcs)[:, :2]
        blended = (1.0 - w[:, None]) * own + w[:, None] * neighbor_pts
        _append(blended, lane.speed_limit)
        # Continue along the neighbor from where the blend lands.
        exit_arc = float(neighbor_arcs[-1])
        n_total = float(polyline_arc_lengths(nxt.centerline)[-1])
        remainder_grid = np.arange(exit_arc, n_total + SAMPLE_SPACING, SAMPLE_SPACING)
        remainder = interpolate_polyline_batch(nxt.centerline, remainder_grid)[:, :2]
        _append(remainder, nxt.speed_limit)
        i += 2

    pts = np.vstack(points)
    lim = np.concatenate(limits)
    return _resample(pts, lim, SAMPLE_SPACING)


def _resample(pts: np.ndarray, limits: np.ndarray, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    arcs = polyline_arc_lengths(pts)
    total = float(arcs[-1])
    if total < spacing:
        return pts, limits
    grid = np.arange(0.0, total + spacing / 2, spacing)
    out = interpolate_polyline_batch(pts, grid)[:, :2]
    idx = np.clip(np.searchsorted(arcs, grid, side="right") - 1, 0, len(limits) - 1)
    return out, limits[idx]


def scenario_route_path(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    lanes = {lane.id: lane for lane in scenario.lanes}
    return route_path(lanes, scenario.route_lane_ids)


def reference_progress(scenario: Scenario, start_xy: tuple[float, float]) -> float:
    """Distance achievable along the route at the speed limit within the scenario
    duration, capped by the remaining route length."""
    pts, limits = scenario_route_path(scenario)
    arcs = polyline_arc_lengths(pts)
    start_arc, _ = project_to_polyline(start_xy[0], start_xy[1], pts)
    remaining = float(arcs[-1]) - start_arc
    budget = scenario.duration
    dist = 0.0
    arc = start_arc
    # walk sample-by-sample; samples are SAMPLE_SPACING apart
    idx = int(np.clip(np.searchsorted(arcs, arc, side="right") - 1, 0, len(limits) - 1))
    while budget > 0 and dist < remaining and idx < len(arcs) - 1:
        seg = float(arcs[idx + 1] - max(arc, arcs[idx]))
        limit = float(limits[idx])
        t = seg / limit
        if t > budget:
            dist += budget * limit
            break
        dist += seg
        budget -= t
        idx += 1
        arc = float(arcs[idx])
    return float(min(dist, remaining))
