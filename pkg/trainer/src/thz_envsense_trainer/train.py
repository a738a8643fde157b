"""Adversarial training loop.

Each generator update is preceded by ``critic_steps`` critic updates drawn
from an independently cycling batch stream; one epoch passes the training
set once through generator updates. The held-out weighted MSE is logged
every epoch, the latest checkpoint and run log are written atomically, and
training aborts if any loss goes non-finite.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import torch

from .data import Corpus, load_corpus, synthesize_prior
from .losses import critic_loss, generator_loss, loss_mse
from .models import Critic, Generator

CHECKPOINT_FORMAT = 1


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 16
    critic_steps: int = 5
    learning_rate: float = 1e-4
    beta1: float = 0.0
    beta2: float = 0.9
    gp_coefficient: float = 10.0
    mse_coefficient: float = 1000.0
    base_width: int = 64
    depth: int = 3
    seed: int = 0
    holdout_scenes: int | None = None  # used only when no eval corpus is given
    # Anti-memorization augmentation: redraw the sensor subset of each
    # training sample every step (the complete map fully determines the
    # observation process), and mirror scenes across the beam axis.
    resample_priors: bool = True
    mirror_augment: bool = True
    dropout: float = 0.0

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or self.critic_steps <= 0:
            raise ValueError("epochs, batch_size, and critic_steps must be positive")


def _check_finite(name: str, value: float) -> None:
    if not torch.isfinite(torch.tensor(value)):
        raise TrainingDiverged(f"{name} became non-finite")


def _atomic_write_bytes(path: Path, write_fn) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    write_fn(tmp)
    os.replace(tmp, path)


def _cycling_batches(n: int, batch_size: int, generator: torch.Generator):
    while True:
        order = torch.randperm(n, generator=generator)
        for start in range(0, n - batch_size + 1, batch_size):
            yield order[start:start + batch_size]


def _draw_batch(train_set: Corpus, idx: torch.Tensor, cfg: TrainConfig,
                aug_rng: torch.Generator):
    """Assemble (condition, target, weights) for one batch with augmentation."""
    cond = train_set.priors[idx].clone()
    target = train_set.targets[idx].clone()
    weights = train_set.weights[idx].clone()
    if cfg.resample_priors:
        for k in range(target.shape[0]):
            cond[k] = synthesize_prior(target[k], train_set.sampling_rate, aug_rng)
    if cfg.mirror_augment:
        flip = torch.rand(target.shape[0], generator=aug_rng) < 0.5
        for k in torch.nonzero(flip, as_tuple=True)[0]:
            cond[k] = torch.flip(cond[k], dims=(-2,))
            target[k] = torch.flip(target[k], dims=(-2,))
            weights[k] = torch.flip(weights[k], dims=(-2,))
    return cond, target, weights


def evaluate_v_mse(gen: Generator, corpus: Corpus, batch_size: int = 32) -> float:
    gen.eval()
    total = 0.0
    with torch.no_grad():
        for start in range(0, len(corpus), batch_size):
            sl = slice(start, min(start + batch_size, len(corpus)))
            fake = gen(corpus.priors[sl])
            v = loss_mse(fake, corpus.targets[sl], corpus.weights[sl])
            total += float(v) * (sl.stop - sl.start)
    gen.train()
    return total / len(corpus)


def train(train_dir, out_dir, cfg: TrainConfig = TrainConfig(), eval_dir=None):
    """Train on one corpus; returns (generator, run_log_dict).

    Writes ``checkpoint.pt`` and ``runlog.json`` under ``out_dir`` after
    every epoch. When ``eval_dir`` is None the last ``holdout_scenes``
    records of the training corpus are held out for the per-epoch metric.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    full = load_corpus(train_dir)
    if eval_dir is not None:
        train_set = full
        eval_set = load_corpus(eval_dir)
    else:
        holdout = cfg.holdout_scenes if cfg.holdout_scenes is not None else max(1, len(full) // 5)
        if holdout >= len(full):
            raise ValueError("holdout would consume the whole corpus")
        train_set = full.subset(range(len(full) - holdout))
        eval_set = full.subset(range(len(full) - holdout, len(full)))

    size = train_set.grid_shape[0]
    if train_set.grid_shape[0] != train_set.grid_shape[1]:
        raise ValueError("expected a square grid")
    batch_size = min(cfg.batch_size, len(train_set))

    torch.manual_seed(cfg.seed)
    gen = Generator(base_width=cfg.base_width, depth=cfg.depth, input_size=size,
                    dropout=cfg.dropout)
    critic = Critic(base_width=cfg.base_width, depth=cfg.depth, input_size=size)
    opt_g = torch.optim.Adam(gen.parameters(), lr=cfg.learning_rate, betas=(cfg.beta1, cfg.beta2))
    opt_d = torch.optim.Adam(critic.parameters(), lr=cfg.learning_rate, betas=(cfg.beta1, cfg.beta2))

    batch_rng = torch.Generator().manual_seed(cfg.seed + 1)
    gen_stream = _cycling_batches(len(train_set), batch_size, batch_rng)
    critic_stream = _cycling_batches(len(train_set), batch_size,
                                     torch.Generator().manual_seed(cfg.seed + 2))
    aug_rng = torch.Generator().manual_seed(cfg.seed + 3)
    gen_steps_per_epoch = max(1, len(train_set) // batch_size)

    log = {"config": asdict(cfg), "train_scenes": len(train_set),
           "eval_scenes": len(eval_set), "epochs": []}

    for epoch in range(cfg.epochs):
        d_losses = []
        g_adv = []
        g_mse = []
        for _ in range(gen_steps_per_epoch):
            for _ in range(cfg.critic_steps):
                cond, real, _ = _draw_batch(train_set, next(critic_stream), cfg, aug_rng)
                with torch.no_grad():
                    fake = gen(cond)
                opt_d.zero_grad(set_to_none=True)
                d_loss, _ = critic_loss(critic, cond, real, fake, cfg.gp_coefficient)
                d_loss.backward()
                opt_d.step()
                d_losses.append(float(d_loss.detach()))

            cond, target, weights = _draw_batch(train_set, next(gen_stream), cfg, aug_rng)
            opt_g.zero_grad(set_to_none=True)
            fake = gen(cond)
            g_loss, parts = generator_loss(critic, cond, fake, target, weights,
                                           cfg.mse_coefficient)
            g_loss.backward()
            opt_g.step()
            g_adv.append(parts["adv"])
            g_mse.append(parts["mse"])

        v_mse = evaluate_v_mse(gen, eval_set)
        mean_d = sum(d_losses) / len(d_losses)
        for name, value in (("critic loss", mean_d), ("generator mse", g_mse[-1]),
                            ("held-out v_mse", v_mse)):
            _check_finite(name, value)

        log["epochs"].append({
            "epoch": epoch,
            "v_mse": v_mse,
            "critic_loss": mean_d,
            "gen_adv": sum(g_adv) / len(g_adv),
            "gen_mse": sum(g_mse) / len(g_mse),
        })

        checkpoint = {
            "format": CHECKPOINT_FORMAT,
            "epoch": epoch,
            "config": asdict(cfg),
            "input_size": size,
            "generator": gen.state_dict(),
            "critic": critic.state_dict(),
        }
        _atomic_write_bytes(out / "checkpoint.pt", lambda p: torch.save(checkpoint, p))
        _atomic_write_bytes(out / "runlog.json",
                            lambda p: p.write_text(json.dumps(log, indent=2)))

    return gen, log


def load_generator(checkpoint_path) -> tuple[Generator, dict]:
    doc = torch.load(checkpoint_path, map_location="cpu", weights_only=False)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {doc.get('format')!r}")
    cfg = doc["config"]
    gen = Generator(base_width=cfg["base_width"], depth=cfg["depth"],
                    input_size=doc["input_size"], dropout=cfg.get("dropout", 0.0))
    gen.load_state_dict(doc["generator"])
    gen.eval()
    return gen, doc
