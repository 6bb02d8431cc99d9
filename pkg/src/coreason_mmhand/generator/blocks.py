# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Modality encoders, attentional blocks and the image decoder."""

from typing import NamedTuple, Optional, Tuple

import torch
from torch import nn

from coreason_mmhand.exceptions import ShapeMismatchError


class ModalityTensors(NamedTuple):
    """Image, contour and depth codes (B, C, h, w) sharing one spatial size."""

    image: torch.Tensor
    contour: torch.Tensor
    depth: torch.Tensor

    def check(self) -> "ModalityTensors":
        """Raise `ShapeMismatchError` unless all three codes share spatial dimensions."""
        sizes = {t.shape[-2:] for t in self}
        if len(sizes) != 1:
            raise ShapeMismatchError(f"modality codes disagree on spatial size: {sorted(sizes)}")
        return self


class ModalityEncoder(nn.Module):
    """Stack of stride-2 convolutions, each instance-normalized and rectified (two by default)."""

    def __init__(self, in_channels: int, base_channels: int, code_channels: int, levels: int = 2) -> None:
        super().__init__()
        layers = []
        ch = in_channels
        for i in range(levels):
            out = code_channels if i == levels - 1 else base_channels * (2**i)
            layers += [nn.Conv2d(ch, out, 3, stride=2, padding=1), nn.InstanceNorm2d(out), nn.ReLU()]
            ch = out
        self.model = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.model(x)


class ConvUnit(nn.Module):
    """conv-norm-ReLU-conv; zero weights in `last` make the unit output exactly zero."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.body = nn.Sequential(nn.Conv2d(channels, channels, 3, padding=1), nn.InstanceNorm2d(channels), nn.ReLU())
        self.last = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.last(self.body(x))

    def zero_(self) -> "ConvUnit":
        """Zero the final convolution in place."""
        with torch.no_grad():
            self.last.weight.zero_()
            if self.last.bias is not None:
                self.last.bias.zero_()
        return self


class MabBlock(nn.Module):
    """Multi-stream attentional block.

    M = sigmoid(f_c(c)) * sigmoid(f_d(d)); I' = M * f_I(I) + I; c' = f_c(c); d' = f_d(d).

    Attributes:
        use_depth (bool): When False the mask is sigmoid(f_c(c)) and the depth code passes through.
        use_attention (bool): When False the block is a plain residual unit on I and returns no mask.
        residual_streams (bool): Also add residual connections to the contour and depth streams.
    """

    def __init__(
        self, channels: int, use_depth: bool = True, use_attention: bool = True, residual_streams: bool = False
    ) -> None:
        super().__init__()
        self.f_c = ConvUnit(channels)
        self.f_d = ConvUnit(channels)
        self.f_i = ConvUnit(channels)
        self.use_depth = use_depth
        self.use_attention = use_attention
        self.residual_streams = residual_streams

    def forward(self, state: ModalityTensors) -> Tuple[ModalityTensors, Optional[torch.Tensor]]:
        state.check()
        c = self.f_c(state.contour)
        d = self.f_d(state.depth) if self.use_depth else state.depth
        update = self.f_i(state.image)
        mask: Optional[torch.Tensor] = None
        if self.use_attention:
            mask = torch.sigmoid(c)
            if self.use_depth:
                mask = mask * torch.sigmoid(d)
            if mask.shape != update.shape:
                raise ShapeMismatchError(f"mask {tuple(mask.shape)} does not match image code {tuple(update.shape)}")
            image = mask * update + state.image
        else:
            image = update + state.image
        if self.residual_streams:
            c = c + state.contour
            if self.use_depth:
                d = d + state.depth
        return ModalityTensors(image, c, d), mask


def mab_forward(block: MabBlock, state: ModalityTensors) -> ModalityTensors:
    """Apply one block and return the updated codes."""
    return block(state)[0]


class ImageDecoder(nn.Module):
    """Transposed-convolution upsampler from the image code to pixels in [-1, 1]."""

    def __init__(self, code_channels: int, base_channels: int, out_channels: int, levels: int = 2) -> None:
        super().__init__()
        layers = []
        ch = code_channels
        for i in reversed(range(levels)):
            out = base_channels * (2 ** max(i - 1, 0))
            layers += [
                nn.ConvTranspose2d(ch, out, 3, stride=2, padding=1, output_padding=1),
                nn.InstanceNorm2d(out),
                nn.ReLU(),
            ]
            ch = out
        layers += [nn.Conv2d(ch, out_channels, 3, padding=1), nn.Tanh()]
        self.model = nn.Sequential(*layers)

    def forward(self, code: torch.Tensor) -> torch.Tensor:
        return self.model(code)
