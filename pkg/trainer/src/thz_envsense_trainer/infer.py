"""Batch inference: prior encodings in, gen_{id}.f32 predictions out.

Output files are 3-plane row-major float32 little-endian in [0, 1], the
format the benchmark's ``evaluate`` command consumes directly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .data import load_corpus
from .train import load_generator


def infer(checkpoint_path, dataset_dir, out_dir, batch_size: int = 32,
          mirror_ensemble: bool = False) -> list[Path]:
    """Run the generator over a corpus.

    With ``mirror_ensemble`` the prediction is the per-cell maximum of the
    plain forward pass and the one mirrored across the beam axis (the
    symmetry used during training); deterministic either way.
    """
    gen, _ = load_generator(checkpoint_path)
    corpus = load_corpus(dataset_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    with torch.no_grad():
        for start in range(0, len(corpus), batch_size):
            sl = slice(start, min(start + batch_size, len(corpus)))
            fake = gen(corpus.priors[sl])
            if mirror_ensemble:
                mirrored = torch.flip(gen(torch.flip(corpus.priors[sl], dims=(-2,))), dims=(-2,))
                fake = torch.maximum(fake, mirrored)
            fake = fake.clamp(0.0, 1.0)
            for offset, scene_id in enumerate(corpus.scene_ids[sl]):
                path = out / f"gen_{scene_id:06d}.f32"
                planes = fake[offset].numpy().astype("<f4")
                path.write_bytes(planes.tobytes(order="C"))
                written.append(path)
    return written
