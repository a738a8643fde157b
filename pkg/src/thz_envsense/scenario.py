"""Random obstacle scenes on a fixed analysis grid.

A scene is a set of disjoint convex quadrilaterals dropped into a
rectangular area with the transmitter at the center. Scene sampling is a
pure function of (config, grid, seed), so corpora are reproducible
record-by-record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (
    convex_polygons_overlap,
    is_strictly_convex_ccw,
    point_in_convex_polygon,
    points_in_convex_polygon,
    polygon_area,
)

# World coordinates are stored rounded to micrometers so that JSON
# serialization at 6 decimal places is lossless.
COORD_DECIMALS = 6


class PlacementError(RuntimeError):
    """Raised when rejection sampling cannot place the requested obstacles."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform analysis grid over a rectangular area.

    Rows run along the area length (y), columns along the width (x).
    ``origin`` is the world coordinate of the center of cell (0, 0).
    """

    n_rows: int = 48
    n_cols: int = 48
    area_length_m: float = 16.0
    area_width_m: float = 20.0
    origin: tuple[float, float] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.n_rows <= 0 or self.n_cols <= 0:
            raise ValueError("grid counts must be positive")
        if self.area_length_m <= 0 or self.area_width_m <= 0:
            raise ValueError("area dimensions must be positive")
        if self.origin is None:
            object.__setattr__(self, "origin", (self.cell_width_m / 2.0, self.cell_height_m / 2.0))

    @property
    def cell_height_m(self) -> float:
        return self.area_length_m / self.n_rows

    @property
    def cell_width_m(self) -> float:
        return self.area_width_m / self.n_cols

    @property
    def n_cells(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def cell_center(self, row: int, col: int) -> np.ndarray:
        ox, oy = self.origin
        return np.array([ox + col * self.cell_width_m, oy + row * self.cell_height_m])

    def cell_centers(self) -> np.ndarray:
        """World coordinates of all cell centers, shape (n_rows, n_cols, 2)."""
        ox, oy = self.origin
        xs = ox + np.arange(self.n_cols) * self.cell_width_m
        ys = oy + np.arange(self.n_rows) * self.cell_height_m
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        ox, oy = self.origin
        col = int(round((x - ox) / self.cell_width_m))
        row = int(round((y - oy) / self.cell_height_m))
        if not (0 <= row < self.n_rows and 0 <= col < self.n_cols):
            raise ValueError(f"point ({x}, {y}) outside the grid")
        return row, col

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the scene rectangle."""
        return (0.0, 0.0, self.area_width_m, self.area_length_m)

    @property
    def center(self) -> np.ndarray:
        return np.array([self.area_width_m / 2.0, self.area_length_m / 2.0])


@dataclass(frozen=True)
class Obstacle:
    """Strictly convex quadrilateral, vertices counter-clockwise, shape (4, 2)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", v)
        if v.shape != (4, 2):
            raise ValueError("obstacle needs exactly 4 vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("obstacle vertices must be finite")
        if not is_strictly_convex_ccw(v):
            raise ValueError("obstacle must be strictly convex and counter-clockwise")

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Closed containment: boundary points count as inside."""
        return points_in_convex_polygon(np.asarray(points, dtype=float), self.vertices)


@dataclass(frozen=True)
class Scene:
    """Immutable obstacle deployment with the transmitter location."""

    obstacles: tuple[Obstacle, ...]
    bs_xy: np.ndarray
    grid: GridSpec
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "bs_xy", np.asarray(self.bs_xy, dtype=float))
        xmin, ymin, xmax, ymax = self.grid.bounds
        for obs in self.obstacles:
            v = obs.vertices
            if v[:, 0].min() < xmin or v[:, 0].max() > xmax or v[:, 1].min() < ymin or v[:, 1].max() > ymax:
                raise ValueError("obstacle outside the scene rectangle")
            if point_in_convex_polygon(self.bs_xy, v):
                raise ValueError("transmitter inside an obstacle")
        for i in range(len(self.obstacles)):
            for j in range(i + 1, len(self.obstacles)):
                if convex_polygons_overlap(self.obstacles[i].vertices, self.obstacles[j].vertices):
                    raise ValueError("obstacles overlap")


@dataclass(frozen=True)
class ScenarioConfig:
    """Obstacle attribute distribution: count, size, and placement limits."""

    obstacle_count_choices: tuple[int, ...] = (1, 2, 3, 4, 5)
    size_range_m: tuple[float, float] = (0.75, 2.0)
    margin_m: float = 0.5
    max_attempts: int = 10_000
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "obstacle_count_choices", tuple(sorted(set(self.obstacle_count_choices))))
        if not self.obstacle_count_choices:
            raise ValueError("obstacle_count_choices must be non-empty")
        lo, hi = self.size_range_m
        if not (0 < lo <= hi):
            raise ValueError("size_range_m must satisfy 0 < min <= max")
        if any(c < 0 for c in self.obstacle_count_choices):
            raise ValueError("obstacle counts must be non-negative")


def _sample_quad(cfg: ScenarioConfig, grid: GridSpec, rng: np.random.Generator) -> np.ndarray | None:
    """One candidate quadrilateral: sorted angles + radial vertices.

    Returns rounded (4, 2) vertices, or None when the draw fails the
    convexity or placement-box checks.
    """
    lo, hi = cfg.size_range_m
    radii = rng.uniform(lo, hi, size=4)
    rmax = float(radii.max())
    pad = cfg.margin_m + rmax + 1e-6
    xmin, ymin, xmax, ymax = grid.bounds
    if xmin + pad >= xmax - pad or ymin + pad >= ymax - pad:
        raise PlacementError(
            f"obstacles of circumradius up to {hi} m cannot fit with margin {cfg.margin_m} m"
        )
    center = rng.uniform([xmin + pad, ymin + pad], [xmax - pad, ymax - pad])
    angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=4))
    verts = center + radii[:, None] * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    verts = np.round(verts, COORD_DECIMALS)
    if not is_strictly_convex_ccw(verts):
        return None
    return verts


def sample_scene(cfg: ScenarioConfig, grid: GridSpec, rng: np.random.Generator | None = None,
                 seed: int | None = None) -> Scene:
    """Sample one scene by rejection.

    Every candidate quadrilateral counts against ``cfg.max_attempts``;
    exhausting the budget raises PlacementError (the config is too dense
    for the area).
    """
    if rng is None:
        if seed is None:
            seed = cfg.seed if cfg.seed is not None else 0
        rng = np.random.default_rng(seed)
    if seed is None:
        seed = cfg.seed if cfg.seed is not None else 0

    count = int(rng.choice(np.array(cfg.obstacle_count_choices)))
    bs_xy = np.round(grid.center, COORD_DECIMALS)

    placed: list[np.ndarray] = []
    attempts = 0
    while len(placed) < count:
        attempts += 1
        if attempts > cfg.max_attempts:
            raise PlacementError(
                f"failed to place {count} obstacles after {cfg.max_attempts} attempts"
            )
        verts = _sample_quad(cfg, grid, rng)
        if verts is None:
            continue
        if point_in_convex_polygon(bs_xy, verts):
            continue
        if any(convex_polygons_overlap(verts, prev) for prev in placed):
            continue
        placed.append(verts)

    return Scene(
        obstacles=tuple(Obstacle(v) for v in placed),
        bs_xy=bs_xy,
        grid=grid,
        seed=int(seed),
    )


def rasterize_obstacles(scene: Scene) -> np.ndarray:
    """Boolean (n_rows, n_cols) mask: cell center inside any obstacle.

    The closed-polygon rule applies, so a center exactly on an obstacle
    edge is marked occupied.
    """
    centers = scene.grid.cell_centers()
    mask = np.zeros(scene.grid.shape, dtype=bool)
    for obs in scene.obstacles:
        mask |= obs.contains(centers)
    return mask


def scene_to_json(scene: Scene) -> str:
    """Canonical JSON for a scene (coordinates in meters, 6 decimals)."""
    doc = {
        "seed": scene.seed,
        "bs": [round(float(c), COORD_DECIMALS) for c in scene.bs_xy],
        "obstacles": [
            [[round(float(x), COORD_DECIMALS) for x in v] for v in obs.vertices]
            for obs in scene.obstacles
        ],
        "grid": {
            "rows": scene.grid.n_rows,
            "cols": scene.grid.n_cols,
            "length_m": scene.grid.area_length_m,
            "width_m": scene.grid.area_width_m,
        },
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def scene_from_json(text: str) -> Scene:
    doc = json.loads(text)
    grid = GridSpec(
        n_rows=doc["grid"]["rows"],
        n_cols=doc["grid"]["cols"],
        area_length_m=doc["grid"]["length_m"],
        area_width_m=doc["grid"]["width_m"],
    )
    return Scene(
        obstacles=tuple(Obstacle(np.array(v, dtype=float)) for v in doc["obstacles"]),
        bs_xy=np.array(doc["bs"], dtype=float),
        grid=grid,
        seed=int(doc["seed"]),
    )


def scene_without(scene: Scene, index: int) -> Scene:
    """Copy of the scene with one obstacle deleted."""
    kept = tuple(o for k, o in enumerate(scene.obstacles) if k != index)
    return Scene(obstacles=kept, bs_xy=scene.bs_xy, grid=scene.grid, seed=scene.seed)
