"""Training objectives.

The supervised term is the weighted MSE between channel-compressed maps,
identical to the benchmark's scoring formula. The adversarial term is a
Wasserstein objective with a gradient penalty that drives the critic
toward unit gradient norm along random real/fake interpolates.
"""

from __future__ import annotations

import torch


def compress(img: torch.Tensor) -> torch.Tensor:
    """(B, 3, H, W) -> (B, H, W) channel mean, clamped to [0, 1]."""
    return img.mean(dim=1).clamp(0.0, 1.0)


def loss_mse(generated: torch.Tensor, target: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Per-sample mean over cells of w^2 (compressed difference)^2, batch-averaged."""
    diff = compress(generated) - compress(target)
    per_sample = (weights.square() * diff.square()).mean(dim=(-2, -1))
    return per_sample.mean()


def interpolate(real: torch.Tensor, fake: torch.Tensor, p_mix: torch.Tensor) -> torch.Tensor:
    """Random point on the segment between paired samples: p*fake + (1-p)*real."""
    return p_mix * fake + (1.0 - p_mix) * real


def gradient_penalty(critic, condition: torch.Tensor, real: torch.Tensor,
                     fake: torch.Tensor, coefficient: float = 10.0) -> torch.Tensor:
    p_mix = torch.rand(real.shape[0], 1, 1, 1, dtype=real.dtype, device=real.device)
    mixed = interpolate(real, fake.detach(), p_mix).requires_grad_(True)
    scores = critic(condition, mixed)
    grads = torch.autograd.grad(scores.sum(), mixed, create_graph=True)[0]
    norms = grads.flatten(1).norm(2, dim=1)
    return coefficient * (norms - 1.0).square().mean()


def critic_loss(critic, condition: torch.Tensor, real: torch.Tensor, fake: torch.Tensor,
                gp_coefficient: float = 10.0):
    """Minimized by the critic: E[D(fake)] - E[D(real)] + penalty."""
    real_score = critic(condition, real).mean()
    fake_score = critic(condition, fake.detach()).mean()
    penalty = gradient_penalty(critic, condition, real, fake, gp_coefficient)
    return fake_score - real_score + penalty, {
        "real_score": float(real_score.detach()),
        "fake_score": float(fake_score.detach()),
        "penalty": float(penalty.detach()),
    }


def generator_loss(critic, condition: torch.Tensor, fake: torch.Tensor,
                   target: torch.Tensor, weights: torch.Tensor,
                   mse_coefficient: float = 1000.0):
    """Minimized by the generator: -E[D(fake)] + mse_coefficient * weighted MSE."""
    adv = -critic(condition, fake).mean()
    mse = loss_mse(fake, target, weights)
    return adv + mse_coefficient * mse, {"adv": float(adv.detach()), "mse": float(mse.detach())}
