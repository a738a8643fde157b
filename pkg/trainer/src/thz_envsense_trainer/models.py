"""Generator and critic networks.

The generator is a U-net: each downsampling stage has a mirrored
upsampling stage fed through a skip connection, and a sigmoid keeps the
output in [0, 1] to match the encoding range. The critic scores a
candidate map under its prior-encoding condition (channel concatenation)
and ends in a plain linear layer, so its output is an unbounded scalar.
"""

from __future__ import annotations

import torch
import torch.nn as nn


class Generator(nn.Module):
    def __init__(self, in_channels: int = 3, out_channels: int = 3,
                 base_width: int = 64, depth: int = 3, input_size: int = 48,
                 dropout: float = 0.0):
        super().__init__()
        if depth < 1:
            raise ValueError("depth must be at least 1")
        if input_size % (2 ** depth) != 0:
            raise ValueError(f"input size {input_size} not divisible by 2^{depth}")
        self.depth = depth

        self.down = nn.ModuleList()
        ch = in_channels
        widths = [base_width * (2 ** k) for k in range(depth)]
        for k, w in enumerate(widths):
            layers = [nn.Conv2d(ch, w, 4, stride=2, padding=1)]
            if k > 0:
                layers.append(nn.InstanceNorm2d(w, affine=True))
            layers.append(nn.LeakyReLU(0.2, inplace=True))
            self.down.append(nn.Sequential(*layers))
            ch = w

        self.up = nn.ModuleList()
        for k in reversed(range(depth)):
            out_w = widths[k - 1] if k > 0 else out_channels
            in_w = widths[k] if k == depth - 1 else widths[k] * 2
            if k > 0:
                layers = [
                    nn.ConvTranspose2d(in_w, out_w, 4, stride=2, padding=1),
                    nn.InstanceNorm2d(out_w, affine=True),
                    nn.ReLU(inplace=True),
                ]
                if dropout > 0:
                    layers.append(nn.Dropout2d(dropout))
                self.up.append(nn.Sequential(*layers))
            else:
                self.up.append(nn.Sequential(
                    nn.ConvTranspose2d(in_w, out_w, 4, stride=2, padding=1),
                    nn.Sigmoid(),
                ))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        skips = []
        for stage in self.down:
            x = stage(x)
            skips.append(x)
        x = self.up[0](skips[-1])
        for k, stage in enumerate(self.up[1:], start=1):
            x = stage(torch.cat([x, skips[-1 - k]], dim=1))
        return x


class Critic(nn.Module):
    def __init__(self, condition_channels: int = 3, candidate_channels: int = 3,
                 base_width: int = 64, depth: int = 3, input_size: int = 48):
        super().__init__()
        if input_size % (2 ** depth) != 0:
            raise ValueError(f"input size {input_size} not divisible by 2^{depth}")
        layers = []
        ch = condition_channels + candidate_channels
        size = input_size
        for k in range(depth):
            w = base_width * (2 ** k)
            layers.append(nn.Conv2d(ch, w, 4, stride=2, padding=1))
            size //= 2
            if k > 0:
                # LayerNorm rather than batch norm: per-sample statistics
                # keep the gradient penalty well defined.
                layers.append(nn.LayerNorm([w, size, size]))
            layers.append(nn.LeakyReLU(0.2, inplace=True))
            ch = w
        self.features = nn.Sequential(*layers)
        self.head = nn.Linear(ch * size * size, 1)

    def forward(self, condition: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
        x = torch.cat([condition, candidate], dim=1)
        x = self.features(x)
        return self.head(x.flatten(1)).squeeze(1)
