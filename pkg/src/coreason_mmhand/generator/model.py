# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""The pose-guided image generator network."""

from typing import List, Optional, Tuple

import torch
from torch import nn

from coreason_mmhand.exceptions import ShapeMismatchError
from coreason_mmhand.generator.blocks import ImageDecoder, MabBlock, ModalityEncoder, ModalityTensors
from coreason_mmhand.schemas import GeneratorConfig
from coreason_mmhand.utils.logger import logger
from coreason_mmhand.utils.runtime import seed_everything


class MMHandGenerator(nn.Module):
    """Encoders for image, contour pair and depth pair; N attentional blocks; image decoder.

    All tensors are (B, C, H, W). Images are in [-1, 1]; contour and depth maps in [0, 1].

    Attributes:
        config (GeneratorConfig): Architecture settings.
    """

    def __init__(self, config: GeneratorConfig) -> None:
        super().__init__()
        self.config = config
        seed_everything(config.seed)
        if config.num_blocks == 0:
            logger.warning("Generator built with zero attentional blocks; output depends on the source image only")
        levels, base, code = config.decoder_depth, config.base_channels, config.code_channels
        self.encode_image = ModalityEncoder(config.image_channels, base, code, levels)
        self.encode_contour = ModalityEncoder(6, base, code, levels)
        self.encode_depth = ModalityEncoder(2, base, code, levels)
        self.blocks = nn.ModuleList(
            MabBlock(code, config.use_depth, config.use_attention, config.residual_streams)
            for _ in range(config.num_blocks)
        )
        self.decoder = ImageDecoder(code, base, config.image_channels, levels)

    def encode_modalities(
        self,
        image: torch.Tensor,
        contour_s: torch.Tensor,
        contour_t: torch.Tensor,
        depth_s: torch.Tensor,
        depth_t: torch.Tensor,
    ) -> ModalityTensors:
        """I_0 = E_I(I), c_0 = E_c(c_s ‖ c_t), d_0 = E_d(d_s ‖ d_t), concatenation in that order.

        Raises:
            ShapeMismatchError: If the inputs do not share H x W.
        """
        sizes = {t.shape[-2:] for t in (image, contour_s, contour_t, depth_s, depth_t)}
        if len(sizes) != 1:
            raise ShapeMismatchError(f"generator inputs disagree on spatial size: {sorted(sizes)}")
        return ModalityTensors(
            self.encode_image(image),
            self.encode_contour(torch.cat([contour_s, contour_t], dim=1)),
            self.encode_depth(torch.cat([depth_s, depth_t], dim=1)),
        ).check()

    def transfer(self, state: ModalityTensors) -> Tuple[ModalityTensors, List[Optional[torch.Tensor]]]:
        """Run every block; return the final codes and each block's mask."""
        masks: List[Optional[torch.Tensor]] = []
        for block in self.blocks:
            state, mask = block(state)
            masks.append(mask)
        return state, masks

    def forward(
        self,
        image: torch.Tensor,
        contour_s: torch.Tensor,
        contour_t: torch.Tensor,
        depth_s: torch.Tensor,
        depth_t: torch.Tensor,
    ) -> torch.Tensor:
        state, _ = self.transfer(self.encode_modalities(image, contour_s, contour_t, depth_s, depth_t))
        # Contour and depth codes are discarded after the last block.
        return self.decoder(state.image)
