# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Building blocks shared by the depth generator and the image GAN."""

import torch
from torch import nn


class PatchDiscriminator(nn.Module):
    """Three-layer convolutional patch classifier with per-patch realness scores in (0, 1).

    Two stride-2 4x4 convolutions (the second instance-normalized) followed by a stride-1 scoring
    convolution and a sigmoid. A 64x64 input yields a 15x15 score map.
    """

    def __init__(self, in_channels: int, channels: int = 32) -> None:
        super().__init__()
        self.model = nn.Sequential(
            nn.Conv2d(in_channels, channels, kernel_size=4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(channels, channels * 2, kernel_size=4, stride=2, padding=1),
            nn.InstanceNorm2d(channels * 2),
            nn.LeakyReLU(0.2),
            nn.Conv2d(channels * 2, 1, kernel_size=4, stride=1, padding=1),
            nn.Sigmoid(),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.model(x)


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
