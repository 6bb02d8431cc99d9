# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Pose-guided image generator: encoders, attentional blocks, decoder and the generation pipeline."""

from coreason_mmhand.generator.blocks import (
    ConvUnit,
    ImageDecoder,
    MabBlock,
    ModalityEncoder,
    ModalityTensors,
    mab_forward,
)
from coreason_mmhand.generator.model import MMHandGenerator
from coreason_mmhand.generator.pipeline import (
    MMHand,
    PoseEmbedder,
    condition_tensors,
    generator_forward,
    image_to_signed,
    signed_to_image,
)

__all__ = [
    "ConvUnit",
    "ImageDecoder",
    "MMHand",
    "MMHandGenerator",
    "MabBlock",
    "ModalityEncoder",
    "ModalityTensors",
    "PoseEmbedder",
    "condition_tensors",
    "generator_forward",
    "image_to_signed",
    "mab_forward",
    "signed_to_image",
]
