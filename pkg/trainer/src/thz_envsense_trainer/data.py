"""Reader for thz-envsense dataset directories.

Consumes the on-disk contract only: manifest.json plus the per-scene
3-plane float32 encodings. The per-cell loss weights equal the gray level
of the complete encoding, so no extra file is needed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

SUPPORTED_VERSION = "1"


class CorpusFormatError(RuntimeError):
    pass


@dataclass(frozen=True)
class Corpus:
    """All records of one dataset directory as stacked tensors."""

    scene_ids: tuple[int, ...]
    priors: torch.Tensor    # (N, 3, H, W) in [0, 1]
    targets: torch.Tensor   # (N, 3, H, W) in [0, 1]
    weights: torch.Tensor   # (N, H, W) in [0, 1]
    sampling_rate: float = 0.5

    def __len__(self) -> int:
        return len(self.scene_ids)

    @property
    def grid_shape(self) -> tuple[int, int]:
        return tuple(self.priors.shape[-2:])

    def subset(self, indices) -> "Corpus":
        idx = list(indices)
        return Corpus(
            scene_ids=tuple(self.scene_ids[i] for i in idx),
            priors=self.priors[idx],
            targets=self.targets[idx],
            weights=self.weights[idx],
            sampling_rate=self.sampling_rate,
        )


def _read_planes(path: Path, shape: tuple[int, int]) -> np.ndarray:
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    expected = 3 * shape[0] * shape[1]
    if raw.size != expected:
        raise CorpusFormatError(f"{path}: expected {expected} float32 values, got {raw.size}")
    return raw.reshape(3, *shape).copy()


def load_corpus(dataset_dir) -> Corpus:
    base = Path(dataset_dir)
    manifest_path = base / "manifest.json"
    if not manifest_path.exists():
        raise CorpusFormatError(f"no manifest.json under {dataset_dir}")
    doc = json.loads(manifest_path.read_text())
    if doc.get("version") != SUPPORTED_VERSION:
        raise CorpusFormatError(
            f"dataset version {doc.get('version')!r}, supported {SUPPORTED_VERSION!r}")
    shape = (doc["grid"]["rows"], doc["grid"]["cols"])

    ids = []
    priors = []
    targets = []
    for rec in sorted(doc["records"], key=lambda r: r["scene_id"]):
        ids.append(int(rec["scene_id"]))
        priors.append(_read_planes(base / rec["files"]["enc_prior"], shape))
        targets.append(_read_planes(base / rec["files"]["enc_complete"], shape))

    priors_t = torch.from_numpy(np.stack(priors)).float()
    targets_t = torch.from_numpy(np.stack(targets)).float()
    # The complete encoding is gray: any plane is the weight map.
    weights_t = targets_t[:, 0].clone()
    return Corpus(scene_ids=tuple(ids), priors=priors_t, targets=targets_t, weights=weights_t,
                  sampling_rate=float(doc["sampling_rate"]))


def synthesize_prior(target: torch.Tensor, rate: float,
                     generator: torch.Generator | None = None) -> torch.Tensor:
    """Fresh prior encoding for one complete map (3, H, W).

    Re-simulates the observation process: sensors drawn uniformly without
    replacement over non-obstacle cells (gray level < 1) at the given
    rate, measured cells keep their gray value, everything else turns red
    [1, 0, 0]. Matches the corpus generator's prior encoding distribution.
    """
    gray = target[0]
    free = (gray < 1.0).flatten().nonzero(as_tuple=True)[0]
    k = int(round(rate * free.numel()))
    order = torch.randperm(free.numel(), generator=generator)
    chosen = free[order[:k]]
    prior = torch.zeros_like(target)
    prior[0] = 1.0
    flat = prior.view(3, -1)
    flat[:, chosen] = gray.flatten()[chosen]
    return prior
