import numpy as np
import pytest
import torch

from thz_envsense.dataset import GenerateConfig, generate_dataset
from thz_envsense.scenario import ScenarioConfig


def build_corpus(out_dir, n_scenes, seed, counts=(1, 2, 3, 4, 5), rate=0.5):
    cfg = GenerateConfig(
        n_scenes=n_scenes,
        master_seed=seed,
        scenario=ScenarioConfig(obstacle_count_choices=counts),
        sampling_rate=rate,
        workers=2,
    )
    generate_dataset(cfg, out_dir)
    return out_dir


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    return build_corpus(tmp_path_factory.mktemp("tiny"), n_scenes=8, seed=900)


@pytest.fixture(autouse=True)
def _seeded():
    torch.manual_seed(0)
    np.random.seed(0)
