# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Loss terms of the generator objective.

All functions are pure given frozen networks. Images are (B, C, H, W) tensors in the generator's
[-1, 1] range.
"""

from typing import Dict, NamedTuple, Sequence, Tuple, Union

import torch
from torch import nn

from coreason_mmhand.exceptions import ShapeMismatchError
from coreason_mmhand.hpm.losses import relative_depth_loss, stage_heatmap_loss
from coreason_mmhand.pose.types import NUM_JOINTS, HeatmapStack
from coreason_mmhand.schemas import LossWeights

EPS = 1e-7
NUM_POSE_STAGES = 6

HeatmapLike = Union[torch.Tensor, HeatmapStack]


def _same_shape(*tensors: torch.Tensor) -> None:
    shapes = {tuple(t.shape) for t in tensors}
    if len(shapes) != 1:
        raise ShapeMismatchError(f"expected equal image shapes, got {sorted(shapes)}")


def adversarial_loss(
    disc: nn.Module,
    source: torch.Tensor,
    real: torch.Tensor,
    fake: torch.Tensor,
    pose_maps: torch.Tensor,
) -> torch.Tensor:
    """E[log(D_a·D_p) on real] + E[log((1 - D_a)(1 - D_p)) on fake], outputs clamped to [eps, 1 - eps].

    Each of the real and fake sums lies in [2·log(eps), 2·log(1 - eps)].
    Discriminators maximize it; the generator minimizes it.
    """
    _same_shape(source, real, fake)
    a_real, p_real = (d.clamp(EPS, 1 - EPS) for d in disc(source, pose_maps, real))
    a_fake, p_fake = (d.clamp(EPS, 1 - EPS) for d in disc(source, pose_maps, fake))
    real_term = (torch.log(a_real) + torch.log(p_real)).mean()
    fake_term = (torch.log(1 - a_fake) + torch.log(1 - p_fake)).mean()
    return real_term + fake_term


def l1_loss(fake: torch.Tensor, real: torch.Tensor) -> torch.Tensor:
    _same_shape(fake, real)
    return (fake - real).abs().mean()


def perceptual_loss(fake: torch.Tensor, real: torch.Tensor, extractor: nn.Module) -> torch.Tensor:
    """(1 / CHW)·||phi(fake) - phi(real)||², averaged over the batch."""
    _same_shape(fake, real)
    return ((extractor(fake) - extractor(real)) ** 2).mean()


def appearance_loss(
    fake: torch.Tensor, real: torch.Tensor, extractor: nn.Module, weights: LossWeights
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Return (weighted total, L1 term, perceptual term)."""
    l1 = l1_loss(fake, real)
    perceptual = perceptual_loss(fake, real, extractor)
    return weights.l1_weight * l1 + weights.perceptual_weight * perceptual, l1, perceptual


def _as_tensor(h: HeatmapLike) -> torch.Tensor:
    if isinstance(h, HeatmapStack):
        return torch.from_numpy(h.maps)[None]
    return h


def pose_loss(
    stage_heatmaps: Sequence[HeatmapLike],
    gt_heatmaps: HeatmapLike,
    pred_depths: torch.Tensor,
    gt_depths: torch.Tensor,
    weights: LossWeights,
    num_stages: int = NUM_POSE_STAGES,
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Return (weighted total, stage-averaged heat-map term, smooth-L1 relative-depth term).

    Raises:
        ShapeMismatchError: If the stage count differs from `num_stages` or a side has other than 21 depths.
    """
    if len(stage_heatmaps) != num_stages:
        raise ShapeMismatchError(f"expected {num_stages} heat-map stages, got {len(stage_heatmaps)}")
    pred_depths = torch.as_tensor(pred_depths)
    gt_depths = torch.as_tensor(gt_depths)
    if pred_depths.ndim == 1:
        pred_depths = pred_depths[None]
    if gt_depths.ndim == 1:
        gt_depths = gt_depths[None]
    if pred_depths.shape[-1] != NUM_JOINTS or gt_depths.shape[-1] != NUM_JOINTS:
        raise ShapeMismatchError(
            f"expected {NUM_JOINTS} relative depths, got {pred_depths.shape[-1]} and {gt_depths.shape[-1]}"
        )
    stages = [_as_tensor(s) for s in stage_heatmaps]
    target = _as_tensor(gt_heatmaps).to(stages[0].dtype)
    l_xy = stage_heatmap_loss(stages, target)
    l_z = relative_depth_loss(pred_depths, gt_depths.to(pred_depths.dtype))
    return weights.heatmap_weight * l_xy + weights.depth_weight * l_z, l_xy, l_z


class JointLoss(NamedTuple):
    """Weighted objective and each term's weighted contribution (keys adv, l1, perceptual, heatmap, depth)."""

    total: torch.Tensor
    breakdown: Dict[str, torch.Tensor]


def joint_loss(
    l_adv: torch.Tensor,
    l_1: torch.Tensor,
    l_p: torch.Tensor,
    l_xy: torch.Tensor,
    l_z: torch.Tensor,
    weights: LossWeights,
) -> JointLoss:
    """alpha·L_adv + (tau1·L_1 + tau2·L_p) + (gamma1·L_xy + gamma2·L_z)."""
    breakdown = {
        "adv": weights.adv_weight * l_adv,
        "l1": weights.l1_weight * l_1,
        "perceptual": weights.perceptual_weight * l_p,
        "heatmap": weights.heatmap_weight * l_xy,
        "depth": weights.depth_weight * l_z,
    }
    total = breakdown["adv"] + breakdown["l1"] + breakdown["perceptual"] + breakdown["heatmap"] + breakdown["depth"]
    return JointLoss(total, breakdown)
