# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Depth-map pose embedding: the procedural oracle and the learned generator."""

from coreason_mmhand.depth.generator import (
    DepthGenerator,
    DepthRegularizers,
    DepthSample,
    DepthUNet,
    depth_mae,
    depth_samples,
    discriminator_loss,
    generate_depth,
    generator_losses,
    pretrain_regularizers,
    regularizer_config,
    train_depth_generator,
)
from coreason_mmhand.depth.oracle import (
    MIN_FOREGROUND,
    PALM_PART,
    DepthMap,
    HandRaster,
    camera_rays,
    capsule_hits,
    depth_from_raster,
    hand_primitives,
    rasterize_hand,
    slab_hits,
    synthetic_depth_oracle,
)

__all__ = [
    "MIN_FOREGROUND",
    "PALM_PART",
    "DepthGenerator",
    "DepthMap",
    "DepthRegularizers",
    "DepthSample",
    "DepthUNet",
    "HandRaster",
    "camera_rays",
    "capsule_hits",
    "depth_from_raster",
    "depth_mae",
    "depth_samples",
    "discriminator_loss",
    "generate_depth",
    "generator_losses",
    "hand_primitives",
    "pretrain_regularizers",
    "rasterize_hand",
    "regularizer_config",
    "slab_hits",
    "synthetic_depth_oracle",
    "train_depth_generator",
]
