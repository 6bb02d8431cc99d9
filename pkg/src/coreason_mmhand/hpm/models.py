# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Cascaded heat-map pose machines.

`Hpm2D` refines 21 heat maps over several stages, each stage reading the shared trunk features
concatenated with the previous stage's prediction. `Hpm3D` adds a fully connected head that predicts
21 relative depths from the deepest feature map.
"""

import math
from typing import List, Tuple

import torch
from torch import nn

from coreason_mmhand.pose.types import NUM_JOINTS
from coreason_mmhand.schemas import HpmConfig


def _conv(in_ch: int, out_ch: int, kernel: int = 3, stride: int = 1) -> nn.Sequential:
    return nn.Sequential(nn.Conv2d(in_ch, out_ch, kernel, stride=stride, padding=kernel // 2), nn.ReLU(inplace=True))


class FeatureTrunk(nn.Module):
    """Shared convolutional features at 1/stride of the input resolution."""

    def __init__(self, in_channels: int, channels: int, stride: int) -> None:
        super().__init__()
        layers = [_conv(in_channels, channels)]
        layers += [_conv(channels, channels, stride=2) for _ in range(int(math.log2(stride)))]
        layers.append(_conv(channels, channels))
        self.body = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.body(x)


class Hpm2D(nn.Module):
    """Multi-stage 2D heat-map predictor.

    Attributes:
        config (HpmConfig): Architecture settings.
    """

    def __init__(self, config: HpmConfig) -> None:
        super().__init__()
        self.config = config
        t, s = config.trunk_channels, config.stage_channels
        self.trunk = FeatureTrunk(config.in_channels, t, config.stride)
        self.first_stage = nn.Sequential(_conv(t, s), _conv(s, s, 1), nn.Conv2d(s, NUM_JOINTS, 1))
        self.refine_stages = nn.ModuleList(
            nn.Sequential(_conv(t + NUM_JOINTS, s), _conv(s, s), _conv(s, s), nn.Conv2d(s, NUM_JOINTS, 1))
            for _ in range(config.num_stages - 1)
        )

    @property
    def heatmap_size(self) -> int:
        return self.config.input_size // self.config.stride

    def features_and_stages(self, x: torch.Tensor) -> Tuple[torch.Tensor, List[torch.Tensor]]:
        features = self.trunk(x)
        stages = [self.first_stage(features)]
        for stage in self.refine_stages:
            stages.append(stage(torch.cat([features, stages[-1]], dim=1)))
        return features, stages

    def forward(self, x: torch.Tensor) -> List[torch.Tensor]:
        """Return every stage's (B, 21, H', W') prediction, first stage first."""
        return self.features_and_stages(x)[1]


class Hpm3D(nn.Module):
    """Heat-map branch plus a fully connected relative-depth head.

    The depth head reads the flattened map obtained by one strided convolution over the trunk
    features concatenated with the last stage's heat maps.
    """

    def __init__(self, config: HpmConfig) -> None:
        super().__init__()
        self.config = config
        self.heatmaps = Hpm2D(config)
        side = (self.heatmaps.heatmap_size + 1) // 2
        self.deep = _conv(config.trunk_channels + NUM_JOINTS, config.trunk_channels, stride=2)
        self.depth_head = nn.Linear(config.trunk_channels * side * side, NUM_JOINTS)

    def forward(self, x: torch.Tensor) -> Tuple[List[torch.Tensor], torch.Tensor]:
        """Return (stage heat maps, (B, 21) normalized relative depths)."""
        features, stages = self.heatmaps.features_and_stages(x)
        deep = self.deep(torch.cat([features, stages[-1]], dim=1))
        return stages, self.depth_head(torch.flatten(deep, start_dim=1))


def freeze(model: nn.Module) -> nn.Module:
    """Put `model` in eval mode and stop gradients into its parameters."""
    model.eval()
    for param in model.parameters():
        param.requires_grad_(False)
    return model
