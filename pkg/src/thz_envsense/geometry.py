"""Planar geometry primitives for convex-polygon scenes.

All polygons are convex, counter-clockwise, stored as (n, 2) float arrays.
Point containment uses the closed rule: a point exactly on an edge counts
as inside.
"""

from __future__ import annotations

import numpy as np

# Parameter-space tolerance for treating a segment/polygon contact as an
# endpoint graze rather than a blocking intersection.
EDGE_T_EPS = 1e-9

# Minimum cross product for a vertex to count as strictly convex.
CONVEXITY_EPS = 1e-9


def polygon_area(vertices: np.ndarray) -> float:
    """Signed area (positive for counter-clockwise order)."""
    x = vertices[:, 0]
    y = vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def is_strictly_convex_ccw(vertices: np.ndarray, eps: float = CONVEXITY_EPS) -> bool:
    """True if every interior turn is a strict left turn."""
    n = len(vertices)
    if n < 3:
        return False
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    c = np.roll(vertices, -2, axis=0)
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    return bool(np.all(cross > eps))


def edge_frames(vertices: np.ndarray):
    """Per-edge origin, unit tangent, unit inward normal, and length.

    Returns (origins, tangents, normals, lengths) with one row per edge.
    For a CCW polygon the inward normal is the tangent rotated +90 degrees.
    """
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    d = b - a
    lengths = np.hypot(d[:, 0], d[:, 1])
    tangents = d / lengths[:, None]
    normals = np.stack([-tangents[:, 1], tangents[:, 0]], axis=1)
    return a, tangents, normals, lengths


def points_in_convex_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Closed containment test for an array of points, shape (..., 2)."""
    origins, _, normals, _ = edge_frames(vertices)
    px = points[..., 0]
    py = points[..., 1]
    inside = np.ones(px.shape, dtype=bool)
    for (ax, ay), (nx, ny) in zip(origins, normals):
        inside &= (px - ax) * nx + (py - ay) * ny >= 0.0
    return inside


def point_in_convex_polygon(point, vertices: np.ndarray) -> bool:
    return bool(points_in_convex_polygon(np.asarray(point, dtype=float), vertices))


def convex_polygons_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    """Separating-axis test; contact at a point or edge counts as overlap."""
    for poly in (a, b):
        _, _, normals, _ = edge_frames(poly)
        for n in normals:
            pa = a @ n
            pb = b @ n
            if pa.min() > pb.max() or pb.min() > pa.max():
                return False
    return True


def clip_segments_to_polygon(p0: np.ndarray, p1: np.ndarray, vertices: np.ndarray):
    """Liang-Barsky clip of segments p0->p1 against a closed convex polygon.

    p0 and p1 broadcast against each other with trailing dimension 2. Returns
    (t0, t1): the parameter interval of each segment lying inside the polygon.
    An empty intersection is flagged by t0 > t1.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    shape = np.broadcast_shapes(p0.shape[:-1], p1.shape[:-1])
    t0 = np.zeros(shape)
    t1 = np.ones(shape)
    origins, _, normals, _ = edge_frames(vertices)
    for (ax, ay), (nx, ny) in zip(origins, normals):
        s = (p0[..., 0] - ax) * nx + (p0[..., 1] - ay) * ny
        d = (p1[..., 0] - p0[..., 0]) * nx + (p1[..., 1] - p0[..., 1]) * ny
        with np.errstate(divide="ignore", invalid="ignore"):
            tc = np.where(d != 0.0, -s / np.where(d != 0.0, d, 1.0), 0.0)
        t0 = np.where(d > 0.0, np.maximum(t0, tc), t0)
        t1 = np.where(d < 0.0, np.minimum(t1, tc), t1)
        # Parallel to the edge and strictly outside: no intersection at all.
        t0 = np.where((d == 0.0) & (s < 0.0), np.inf, t0)
    return t0, t1


def segments_blocked_by_polygon(p0: np.ndarray, p1: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Whether the open segments (p0, p1) hit the polygon interior or boundary.

    Contacts confined to a parameter window of EDGE_T_EPS around either
    endpoint are ignored, so interaction points sitting exactly on a polygon
    boundary do not block their own legs.
    """
    t0, t1 = clip_segments_to_polygon(p0, p1, vertices)
    feasible = t1 >= t0
    span = t1 - t0
    mid = 0.5 * (t0 + t1)
    penetrates = span > EDGE_T_EPS
    interior_touch = (span <= EDGE_T_EPS) & (mid > EDGE_T_EPS) & (mid < 1.0 - EDGE_T_EPS)
    return feasible & (penetrates | interior_touch)
