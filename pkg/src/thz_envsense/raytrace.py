"""Ray-traced received-signal-strength maps.

Between the transmitter and every grid cell we enumerate the direct path,
one specular reflection per obstacle edge (image-source construction), and
one diffraction per obstacle vertex visible from both endpoints. Each path
contributes its power independently; per-cell RSS is the power sum plus
the noise floor.

`trace_paths` is the per-receiver reference; `compute_rss` evaluates the
identical arithmetic for all cells at once (scalar and vectorized results
agree to rounding because they share the same kernels).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import ChannelParams, beam_gain, free_space_gain, to_dbm
from .geometry import points_in_convex_polygon, segments_blocked_by_polygon
from .scenario import GridSpec, Scene, rasterize_obstacles

# Serialized stand-in for blocked (obstacle) cells; in memory they are NaN.
BLOCKED_DBM = -174.0


class PathKind(str, Enum):
    LOS = "los"
    REFLECTION = "reflection"
    DIFFRACTION = "diffraction"


@dataclass(frozen=True)
class RayPath:
    kind: PathKind
    total_length_m: float
    interaction_xy: tuple[float, float] | None
    extra_loss_db: float

    def __post_init__(self):
        if self.kind is PathKind.LOS and self.interaction_xy is not None:
            raise ValueError("direct path carries no interaction point")


@dataclass(frozen=True)
class RadioMap:
    """Per-cell RSS in dBm; obstacle cells are NaN."""

    grid: GridSpec
    values_dbm: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values_dbm, dtype=float)
        object.__setattr__(self, "values_dbm", v)
        if v.shape != self.grid.shape:
            raise ValueError("map shape does not match the grid")

    @property
    def blocked_mask(self) -> np.ndarray:
        return np.isnan(self.values_dbm)


def segment_blocked(p, q, scene: Scene) -> bool:
    """True if the open segment (p, q) hits any obstacle interior or boundary.

    Endpoints lying exactly on an obstacle boundary (reflection points,
    diffraction vertices) do not block their own segment.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.array_equal(p, q):
        raise ValueError("segment endpoints must differ")
    for obs in scene.obstacles:
        if bool(segments_blocked_by_polygon(p, q, obs.vertices)):
            return True
    return False


def _blocked_any(p0, p1, scene: Scene) -> np.ndarray:
    """Vectorized segment_blocked over broadcast endpoint arrays."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    shape = np.broadcast_shapes(p0.shape[:-1], p1.shape[:-1])
    blocked = np.zeros(shape, dtype=bool)
    for obs in scene.obstacles:
        blocked |= segments_blocked_by_polygon(p0, p1, obs.vertices)
    return blocked


def _reflection_geometry(tx: np.ndarray, rx: np.ndarray, a: np.ndarray, tangent: np.ndarray,
                         normal: np.ndarray, length: float):
    """Specular points for one edge against an array of receivers.

    Returns (valid, spec_points). ``a`` is the edge origin, ``tangent`` and
    ``normal`` its unit frame (normal pointing into the obstacle), ``rx``
    has shape (..., 2). A valid image-source reflection needs both
    endpoints strictly on the exterior side and the specular point on the
    closed edge segment.
    """
    d_tx = (tx[0] - a[0]) * normal[0] + (tx[1] - a[1]) * normal[1]
    if d_tx >= 0.0:
        return None, None
    mirror = np.array([tx[0] - 2.0 * d_tx * normal[0], tx[1] - 2.0 * d_tx * normal[1]])
    d_rx = (rx[..., 0] - a[0]) * normal[0] + (rx[..., 1] - a[1]) * normal[1]
    valid = d_rx < 0.0
    d_m = -d_tx  # mirror distance to the edge line, > 0
    denom = d_m - d_rx
    t = np.where(valid, d_m / np.where(valid, denom, 1.0), 0.0)
    sx = mirror[0] + t * (rx[..., 0] - mirror[0])
    sy = mirror[1] + t * (rx[..., 1] - mirror[1])
    u = (sx - a[0]) * tangent[0] + (sy - a[1]) * tangent[1]
    valid &= (u >= 0.0) & (u <= length)
    return valid, np.stack([sx, sy], axis=-1)


def _scene_edges(scene: Scene):
    for obs in scene.obstacles:
        verts = obs.vertices
        nxt = np.roll(verts, -1, axis=0)
        d = nxt - verts
        lengths = np.hypot(d[:, 0], d[:, 1])
        tangents = d / lengths[:, None]
        normals = np.stack([-tangents[:, 1], tangents[:, 0]], axis=1)
        for k in range(4):
            yield verts[k], tangents[k], normals[k], float(lengths[k])


def trace_paths(scene: Scene, rx, params: ChannelParams) -> list[RayPath]:
    """All propagation paths from the transmitter to one receiver point."""
    tx = scene.bs_xy
    rx = np.asarray(rx, dtype=float)
    xmin, ymin, xmax, ymax = scene.grid.bounds
    if not (xmin <= rx[0] <= xmax and ymin <= rx[1] <= ymax):
        raise ValueError("receiver outside the scene rectangle")
    for obs in scene.obstacles:
        if bool(points_in_convex_polygon(rx, obs.vertices)):
            raise ValueError("receiver inside an obstacle")

    paths: list[RayPath] = []
    direct = float(np.hypot(rx[0] - tx[0], rx[1] - tx[1]))
    if direct > 0.0 and not segment_blocked(tx, rx, scene):
        paths.append(RayPath(PathKind.LOS, direct, None, 0.0))

    rx1 = rx[None, :]
    for a, tangent, normal, length in _scene_edges(scene):
        valid, spec = _reflection_geometry(tx, rx1, a, tangent, normal, length)
        if valid is None or not bool(valid[0]):
            continue
        s = spec[0]
        if bool(_blocked_any(tx[None, :], s[None, :], scene)[0]):
            continue
        if bool(_blocked_any(s[None, :], rx1, scene)[0]):
            continue
        total = float(np.hypot(*(s - tx)) + np.hypot(*(rx - s)))
        paths.append(RayPath(PathKind.REFLECTION, total, (float(s[0]), float(s[1])),
                             params.reflection_loss_db))

    for obs in scene.obstacles:
        for v in obs.vertices:
            if np.hypot(*(v - tx)) == 0.0 or np.hypot(*(v - rx)) == 0.0:
                continue
            if bool(_blocked_any(tx[None, :], v[None, :], scene)[0]):
                continue
            if bool(_blocked_any(v[None, :], rx[None, :], scene)[0]):
                continue
            leg_in = float(np.hypot(*(v - tx)))
            leg_out = float(np.hypot(*(rx - v)))
            detour = leg_in + leg_out - direct
            loss = params.diffraction_loss_db + 20.0 * np.log10(1.0 + detour)
            paths.append(RayPath(PathKind.DIFFRACTION, leg_in + leg_out,
                                 (float(v[0]), float(v[1])), float(loss)))
    return paths


def received_power_w(paths: list[RayPath], tx: np.ndarray, rx, params: ChannelParams) -> float:
    """Power sum over paths plus the noise floor, in watts."""
    rx = np.asarray(rx, dtype=float)
    total = params.noise_w
    for path in paths:
        if path.kind is PathKind.LOS:
            aim = rx
        else:
            aim = np.asarray(path.interaction_xy)
        ang = float(np.arctan2(aim[1] - tx[1], aim[0] - tx[0]))
        loss = 10.0 ** (-path.extra_loss_db / 10.0)
        total += (params.tx_power_w * beam_gain(ang, params)
                  * free_space_gain(path.total_length_m, params) * loss)
    return total


def compute_rss(scene: Scene, params: ChannelParams) -> RadioMap:
    """RSS map over all grid cells; obstacle cells get the blocked sentinel."""
    grid = scene.grid
    tx = scene.bs_xy
    mask = rasterize_obstacles(scene)
    centers = grid.cell_centers().reshape(-1, 2)
    n = centers.shape[0]

    dx = centers[:, 0] - tx[0]
    dy = centers[:, 1] - tx[1]
    direct = np.hypot(dx, dy)
    at_tx = direct == 0.0

    p_tx = params.tx_power_w
    linear = np.full(n, params.noise_w)

    los_ok = ~at_tx & ~_blocked_any(tx[None, :], centers, scene)
    if np.any(los_ok):
        ang = np.arctan2(dy[los_ok], dx[los_ok])
        linear[los_ok] += p_tx * beam_gain(ang, params) * free_space_gain(direct[los_ok], params)

    refl_lin = 10.0 ** (-params.reflection_loss_db / 10.0)
    for a, tangent, normal, length in _scene_edges(scene):
        valid, spec = _reflection_geometry(tx, centers, a, tangent, normal, length)
        if valid is None:
            continue
        valid = valid & ~at_tx
        if not np.any(valid):
            continue
        s = spec[valid]
        ok = ~_blocked_any(tx[None, :], s, scene) & ~_blocked_any(s, centers[valid], scene)
        if not np.any(ok):
            continue
        s = s[ok]
        pts = centers[valid][ok]
        total = np.hypot(s[:, 0] - tx[0], s[:, 1] - tx[1]) + np.hypot(pts[:, 0] - s[:, 0], pts[:, 1] - s[:, 1])
        ang = np.arctan2(s[:, 1] - tx[1], s[:, 0] - tx[0])
        contrib = p_tx * beam_gain(ang, params) * free_space_gain(total, params) * refl_lin
        linear[np.flatnonzero(valid)[ok]] += contrib

    diff_lin = 10.0 ** (-params.diffraction_loss_db / 10.0)
    for obs in scene.obstacles:
        for v in obs.vertices:
            leg_in = float(np.hypot(v[0] - tx[0], v[1] - tx[1]))
            if leg_in == 0.0:
                continue
            if bool(_blocked_any(tx[None, :], v[None, :], scene)[0]):
                continue
            leg_out = np.hypot(centers[:, 0] - v[0], centers[:, 1] - v[1])
            ok = (leg_out > 0.0) & ~at_tx & ~_blocked_any(v[None, :], centers, scene)
            if not np.any(ok):
                continue
            total = leg_in + leg_out[ok]
            detour = total - direct[ok]
            ang = float(np.arctan2(v[1] - tx[1], v[0] - tx[0]))
            contrib = (p_tx * beam_gain(ang, params) * free_space_gain(total, params)
                       * diff_lin / np.square(1.0 + detour))
            linear[ok] += contrib

    linear[at_tx] = p_tx + params.noise_w
    values = to_dbm(linear).reshape(grid.shape)
    values[mask] = np.nan
    return RadioMap(grid=grid, values_dbm=values)


def radiomap_to_bytes(rmap: RadioMap) -> bytes:
    """Row-major float32 little-endian; blocked cells as BLOCKED_DBM."""
    out = np.where(np.isnan(rmap.values_dbm), BLOCKED_DBM, rmap.values_dbm)
    return out.astype("<f4").tobytes(order="C")


def radiomap_from_bytes(data: bytes, grid: GridSpec) -> RadioMap:
    vals = np.frombuffer(data, dtype="<f4")
    if vals.size != grid.n_cells:
        raise ValueError(f"expected {grid.n_cells} float32 values, got {vals.size}")
    arr = vals.astype(float).reshape(grid.shape)
    arr = np.where(arr == BLOCKED_DBM, np.nan, arr)
    return RadioMap(grid=grid, values_dbm=arr)
