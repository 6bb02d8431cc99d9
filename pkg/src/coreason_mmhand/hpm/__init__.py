# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Cascaded heat-map keypoint estimators: models, losses, inference and training."""

from coreason_mmhand.hpm.inference import (
    decode_keypoints,
    decode_pose,
    estimate_keypoints,
    estimate_pose,
    heatmap_targets,
    hpm2d_forward,
    hpm3d_forward,
    image_to_tensor,
    relative_depths,
    root_camera_depth,
)
from coreason_mmhand.hpm.losses import relative_depth_loss, single_stage_heatmap_loss, smooth_l1, stage_heatmap_loss
from coreason_mmhand.hpm.models import FeatureTrunk, Hpm2D, Hpm3D, freeze
from coreason_mmhand.hpm.training import hpm3d_loss, train_hpm2d, train_hpm3d, train_hpm3d_on_dataset

__all__ = [
    "FeatureTrunk",
    "Hpm2D",
    "Hpm3D",
    "decode_keypoints",
    "decode_pose",
    "estimate_keypoints",
    "estimate_pose",
    "freeze",
    "heatmap_targets",
    "hpm2d_forward",
    "hpm3d_forward",
    "hpm3d_loss",
    "image_to_tensor",
    "relative_depth_loss",
    "relative_depths",
    "root_camera_depth",
    "single_stage_heatmap_loss",
    "smooth_l1",
    "stage_heatmap_loss",
    "train_hpm2d",
    "train_hpm3d",
    "train_hpm3d_on_dataset",
]
