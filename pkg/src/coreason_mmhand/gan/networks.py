# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Discriminators and the fixed perceptual feature extractor."""

from pathlib import Path
from typing import Optional, Tuple

import torch
from torch import nn

from coreason_mmhand.exceptions import CheckpointError
from coreason_mmhand.layers import PatchDiscriminator
from coreason_mmhand.pose.types import NUM_JOINTS
from coreason_mmhand.utils.logger import logger

_FEATURE_WIDTHS = (16, 16, 32, 32, 64, 64, 64, 64)
_POOL_AFTER = (2, 4)


class DiscriminatorPair(nn.Module):
    """Appearance discriminator over [source image, candidate] and pose discriminator over
    [target pose heat maps, candidate]; both emit per-patch scores in (0, 1)."""

    def __init__(self, image_channels: int = 3, channels: int = 32) -> None:
        super().__init__()
        self.appearance = PatchDiscriminator(2 * image_channels, channels)
        self.pose = PatchDiscriminator(NUM_JOINTS + image_channels, channels)

    def forward(
        self, source: torch.Tensor, pose_maps: torch.Tensor, candidate: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Return (D_a(source, candidate), D_p(pose_maps, candidate))."""
        return (
            self.appearance(torch.cat([source, candidate], dim=1)),
            self.pose(torch.cat([pose_maps, candidate], dim=1)),
        )


class FeatureExtractor(nn.Module):
    """Frozen convolution stack whose activation after convolution `tap` is compared in the perceptual loss.

    Defaults to seeded random weights; `weights_path` loads a state dict saved from an instance with the
    same layer count.
    """

    def __init__(
        self,
        in_channels: int = 3,
        num_layers: int = 8,
        tap: int = 6,
        seed: int = 0,
        weights_path: Optional[str] = None,
    ) -> None:
        super().__init__()
        if not 1 <= tap <= num_layers:
            raise ValueError(f"tap must be within 1..{num_layers}, got {tap}")
        generator = torch.Generator().manual_seed(seed)
        layers = []
        ch = in_channels
        for i in range(tap):
            width = _FEATURE_WIDTHS[min(i, len(_FEATURE_WIDTHS) - 1)]
            conv = nn.Conv2d(ch, width, 3, padding=1)
            with torch.no_grad():
                bound = (6.0 / (ch * 9)) ** 0.5
                conv.weight.copy_(torch.rand(conv.weight.shape, generator=generator) * 2 * bound - bound)
                conv.bias.zero_()
            layers += [conv, nn.ReLU()]
            if i + 1 in _POOL_AFTER and i + 1 < tap:
                layers.append(nn.MaxPool2d(2))
            ch = width
        # Only convolutions up to the tap are built.
        self.features = nn.Sequential(*layers)
        self.num_layers = num_layers
        self.tap = tap
        if weights_path is not None:
            self._load(Path(weights_path))
        self.eval()
        for param in self.parameters():
            param.requires_grad_(False)

    def _load(self, path: Path) -> None:
        try:
            state = torch.load(path, map_location="cpu", weights_only=True)
            self.features.load_state_dict(state, strict=True)
        except (OSError, RuntimeError, TypeError, AttributeError) as e:
            logger.error(f"Failed to load feature extractor weights from {path}: {e}")
            raise CheckpointError(f"cannot load feature extractor weights from {path}") from e
        logger.info(f"Loaded perceptual feature weights from {path}")

    def train(self, mode: bool = True) -> "FeatureExtractor":
        # Always evaluation mode.
        return super().train(False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.features(x)
