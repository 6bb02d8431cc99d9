# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Keypoint losses shared by estimator training and the generator's pose-consistency term."""

from typing import Sequence

import torch


def smooth_l1(t: torch.Tensor) -> torch.Tensor:
    """0.5·t² for |t| <= 1, |t| - 0.5 otherwise (elementwise)."""
    abs_t = t.abs()
    return torch.where(abs_t <= 1.0, 0.5 * t * t, abs_t - 0.5)


def single_stage_heatmap_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """(1/K)·sum_i ||H_i - H_i*||_F^2, averaged over the batch. Shapes (B, K, H, W)."""
    per_joint = ((pred - target) ** 2).sum(dim=(2, 3))
    return per_joint.mean(dim=1).mean()


def stage_heatmap_loss(stages: Sequence[torch.Tensor], target: torch.Tensor) -> torch.Tensor:
    """Stage-averaged heat-map loss: the mean of `single_stage_heatmap_loss` over stages."""
    return torch.stack([single_stage_heatmap_loss(s, target) for s in stages]).mean()


def relative_depth_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """(1/K)·sum_i smoothL1(Z_i - Z_i*), averaged over the batch. Shapes (B, K)."""
    return smooth_l1(pred - target).mean(dim=1).mean()
