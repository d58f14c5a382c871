"""Small 2D geometry helpers shared by the simulator, metrics, and planners."""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(theta, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def wrap_angle_array(theta: np.ndarray) -> np.ndarray:
    wrapped = np.remainder(np.asarray(theta, dtype=np.float64) + np.pi, TWO_PI) - np.pi
    # remainder lands in [-pi, pi); move the -pi edge to +pi for (-pi, pi]
    wrapped[wrapped == -np.pi] = np.pi
    return wrapped


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def to_frame(points: np.ndarray, origin_x: float, origin_y: float, origin_heading: float) -> np.ndarray:
    """Transform world points (N,2) into the frame anchored at the given pose."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    shifted = pts - np.array([origin_x, origin_y])
    return shifted @ rotation(origin_heading)  # R(-h) applied as right-multiplication by R(h)


def from_frame(points: np.ndarray, origin_x: float, origin_y: float, origin_heading: float) -> np.ndarray:
    """Inverse of :func:`to_frame`."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return pts @ rotation(origin_heading).T + np.array([origin_x, origin_y])


def obb_corners(cx: float, cy: float, heading: float, half_length: float, half_width: float) -> np.ndarray:
    """Corners of an oriented box, counter-clockwise, shape (4, 2)."""
    c, s = math.cos(heading), math.sin(heading)
    lx, wy = half_length, half_width
    local = np.array([[lx, wy], [-lx, wy], [-lx, -wy], [lx, -wy]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([cx, cy])


def obb_overlap(
    ax: float, ay: float, ah: float, ahl: float, ahw: float,
    bx: float, by: float, bh: float, bhl: float, bhw: float,
) -> bool:
    """Oriented-box overlap via the separating axis theorem. Touching counts as overlap."""
    ca = obb_corners(ax, ay, ah, ahl, ahw)
    cb = obb_corners(bx, by, bh, bhl, bhw)
    for heading in (ah, ah + math.pi / 2, bh, bh + math.pi / 2):
        axis = np.array([math.cos(heading), math.sin(heading)])
        pa = ca @ axis
        pb = cb @ axis
        if pa.max() < pb.min() or pb.max() < pa.min():
            return False
    return True


def point_in_polygon(px: float, py: float, polygon: np.ndarray) -> bool:
    """Even-odd rule point-in-polygon test; boundary points count as inside."""
    poly = np.asarray(polygon, dtype=np.float64)
    n = len(poly)
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = poly[i]
        xj, yj = poly[j]
        if point_segment_distance(px, py, xi, yi, xj, yj) == 0.0:
            return True
        if (yi > py) != (yj > py):
            x_cross = (xj - xi) * (py - yi) / (yj - yi) + xi
            if px < x_cross:
                inside = not inside
        j = i
    return inside


def point_segment_distance(px: float, py: float, x1: float, y1: float, x2: float, y2: float) -> float:
    dx, dy = x2 - x1, y2 - y1
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0.0:
        return math.hypot(px - x1, py - y1)
    t = ((px - x1) * dx + (py - y1) * dy) / seg_sq
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (x1 + t * dx), py - (y1 + t * dy))


def point_to_polygon_distance(px: float, py: float, polygon: np.ndarray) -> float:
    """Distance from a point to a polygon; 0 inside or on the boundary."""
    if point_in_polygon(px, py, polygon):
        return 0.0
    poly = np.asarray(polygon, dtype=np.float64)
    n = len(poly)
    return min(
        point_segment_distance(px, py, poly[i][0], poly[i][1], poly[(i + 1) % n][0], poly[(i + 1) % n][1])
        for i in range(n)
    )


def points_to_polygon_distance(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Vectorized distance from each point to a polygon; 0 inside or on the
    boundary."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    poly = np.asarray(polygon, dtype=np.float64)
    a = poly
    b = np.roll(poly, -1, axis=0)
    d = b - a
    seg_sq = np.maximum((d * d).sum(axis=1), 1e-18)
    rel = pts[:, None, :] - a[None]
    t = np.clip((rel * d[None]).sum(-1) / seg_sq[None], 0.0, 1.0)
    proj = a[None] + t[..., None] * d[None]
    edge_dist = np.sqrt(((pts[:, None, :] - proj) ** 2).sum(-1)).min(axis=1)

    # even-odd crossing parity
    px = pts[:, 0:1]
    py = pts[:, 1:2]
    y1, y2 = a[None, :, 1], b[None, :, 1]
    x1, x2 = a[None, :, 0], b[None, :, 0]
    cond = (y1 > py) != (y2 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = np.where(cond, (x2 - x1) * (py - y1) / np.where(y2 == y1, 1.0, y2 - y1) + x1, np.inf)
    inside = (np.sum(cond & (px < x_cross), axis=1) % 2) == 1
    return np.where(inside, 0.0, edge_dist)


def polyline_arc_lengths(points: np.ndarray) -> np.ndarray:
    """Cumulative arc length at every vertex of a polyline, starting at 0."""
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) < 2:
        return np.zeros(len(pts))
    seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    return np.concatenate([[0.0], np.cumsum(seg)])


def project_to_polyline(px: float, py: float, points: np.ndarray) -> tuple[float, float]:
    """Project a point onto a polyline.

    Returns (arc length of the projection, distance to the polyline).
    """
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) == 1:
        return 0.0, math.hypot(px - pts[0, 0], py - pts[0, 1])
    a = pts[:-1]
    d = pts[1:] - a
    seg_sq = np.maximum((d * d).sum(axis=1), 1e-18)
    p = np.array([px, py])
    t = np.clip(((p - a) * d).sum(axis=1) / seg_sq, 0.0, 1.0)
    proj = a + t[:, None] * d
    dist_sq = ((p - proj) ** 2).sum(axis=1)
    i = int(dist_sq.argmin())
    arcs = polyline_arc_lengths(pts)
    return float(arcs[i] + t[i] * math.sqrt(seg_sq[i])), float(math.sqrt(dist_sq[i]))


def project_points_to_polyline(pts_query: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Arc lengths of the projections of many points onto a polyline. (N,)"""
    pts = np.asarray(points, dtype=np.float64)
    q = np.asarray(pts_query, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 1:
        return np.zeros(len(q))
    a = pts[:-1]
    d = pts[1:] - a
    seg_sq = np.maximum((d * d).sum(axis=1), 1e-18)
    # (N, M) parameter of each query point on each segment
    t = np.clip(((q[:, None, :] - a[None]) * d[None]).sum(-1) / seg_sq[None], 0.0, 1.0)
    proj = a[None] + t[..., None] * d[None]
    dist_sq = ((q[:, None, :] - proj) ** 2).sum(-1)
    idx = dist_sq.argmin(axis=1)
    arcs = polyline_arc_lengths(pts)
    rows = np.arange(len(q))
    return arcs[idx] + t[rows, idx] * np.sqrt(seg_sq[idx])


def interpolate_polyline_batch(points: np.ndarray, arcs_query: np.ndarray) -> np.ndarray:
    """Poses (x, y, tangent heading) at arc lengths along a polyline, clamped to
    its ends. Returns (N, 3)."""
    pts = np.asarray(points, dtype=np.float64)
    q = np.atleast_1d(np.asarray(arcs_query, dtype=np.float64))
    if len(pts) == 1:
        out = np.zeros((len(q), 3))
        out[:, 0] = pts[0, 0]
        out[:, 1] = pts[0, 1]
        return out
    arcs = polyline_arc_lengths(pts)
    q = np.clip(q, 0.0, arcs[-1])
    idx = np.clip(np.searchsorted(arcs, q, side="right") - 1, 0, len(pts) - 2)
    seg = pts[idx + 1] - pts[idx]
    seg_len = np.maximum(arcs[idx + 1] - arcs[idx], 1e-18)
    t = (q - arcs[idx]) / seg_len
    xy = pts[idx] + t[:, None] * seg
    heading = np.arctan2(seg[:, 1], seg[:, 0])
    return np.column_stack([xy, heading])


def interpolate_polyline(points: np.ndarray, arc: float) -> tuple[float, float, float]:
    """Pose (x, y, tangent heading) at a given arc length along a polyline.

    Arc values beyond the ends clamp to the end poses.
    """
    x, y, heading = interpolate_polyline_batch(points, np.array([arc]))[0]
    return float(x), float(y), float(heading)
