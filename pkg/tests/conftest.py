import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from thz_envsense.channel import ChannelParams
from thz_envsense.scenario import GridSpec, Scene, ScenarioConfig, sample_scene


@pytest.fixture
def grid():
    return GridSpec()


@pytest.fixture
def params():
    return ChannelParams()


@pytest.fixture
def empty_scene(grid):
    return Scene(obstacles=(), bs_xy=grid.center, grid=grid, seed=0)


def make_scene(seed, counts=(1, 2, 3, 4, 5), grid=None):
    grid = grid or GridSpec()
    cfg = ScenarioConfig(obstacle_count_choices=counts)
    return sample_scene(cfg, grid, rng=np.random.default_rng(seed), seed=seed)


def random_free_point(scene, rng):
    """Point inside the scene rectangle, outside every obstacle."""
    xmin, ymin, xmax, ymax = scene.grid.bounds
    while True:
        p = rng.uniform([xmin, ymin], [xmax, ymax])
        if not any(obs.contains(p) for obs in scene.obstacles):
            return p
