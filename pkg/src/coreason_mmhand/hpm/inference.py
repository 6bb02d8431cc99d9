# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Numpy-facing inference wrappers, training targets and pose decoding for the estimators."""

from typing import List, Tuple

import numpy as np
import torch

from coreason_mmhand.exceptions import DecodeError, ShapeMismatchError
from coreason_mmhand.hpm.models import Hpm2D, Hpm3D
from coreason_mmhand.pose.core import backproject, camera_depths, render_heatmaps
from coreason_mmhand.pose.types import NUM_JOINTS, Camera, HeatmapStack, Pose2D, Pose3D
from coreason_mmhand.schemas import HpmConfig


def image_to_tensor(image: np.ndarray, config: HpmConfig) -> torch.Tensor:
    """(H, W[, C]) array in [0, 1] -> (1, C, H, W) float tensor, checking the configured resolution."""
    arr = np.asarray(image, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    expected = (config.input_size, config.input_size, config.in_channels)
    if arr.shape != expected:
        raise ShapeMismatchError(f"estimator expects input of shape {expected}, got {arr.shape}")
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(2, 0, 1)))[None]


def _to_stack(maps: torch.Tensor, config: HpmConfig) -> HeatmapStack:
    # Heat-map stacks hold values in [0, 1]; raw predictions can overshoot either way.
    arr = maps.detach().cpu().double().clamp(0.0, 1.0).numpy()
    return HeatmapStack(maps=arr, sigma=config.heatmap_sigma, stride=config.stride)


def hpm2d_forward(model: Hpm2D, image: np.ndarray) -> List[HeatmapStack]:
    """Run the estimator in eval mode and return every stage's heat maps."""
    x = image_to_tensor(image, model.config)
    model.eval()
    with torch.no_grad():
        stages = model(x)
    return [_to_stack(s[0], model.config) for s in stages]


def hpm3d_forward(model: Hpm3D, image: np.ndarray) -> Tuple[HeatmapStack, np.ndarray]:
    """Run the 3D estimator in eval mode: last-stage heat maps and 21 normalized relative depths."""
    x = image_to_tensor(image, model.config)
    model.eval()
    with torch.no_grad():
        stages, depths = model(x)
    return _to_stack(stages[-1][0], model.config), depths[0].double().numpy()


def heatmap_targets(pose2d: Pose2D, config: HpmConfig) -> np.ndarray:
    """Ground-truth heat maps at the estimator's output resolution, (21, H', W') float32."""
    side = config.input_size // config.stride
    stack = render_heatmaps(pose2d, (side, side), config.heatmap_sigma, stride=config.stride)
    return stack.maps.astype(np.float32)


def relative_depths(pose: Pose3D, camera: Camera, config: HpmConfig) -> np.ndarray:
    """(z_i - z_root) / depth_scale in the camera frame, length 21."""
    z = camera_depths(pose, camera)
    return np.asarray((z - z[config.root_index]) / config.depth_scale)


def decode_keypoints(heatmaps: HeatmapStack) -> np.ndarray:
    """Per-channel argmax in image pixels (ties -> smallest row-major index).

    Raises:
        DecodeError: If a channel is constant (including all-zero).
    """
    maps = heatmaps.maps
    flat = maps.reshape(NUM_JOINTS, -1)
    constant = flat.max(axis=1) == flat.min(axis=1)
    if np.any(constant):
        raise DecodeError(f"heat-map channel {int(np.argmax(constant))} is constant; no location to decode")
    idx = flat.argmax(axis=1)
    rows, cols = np.unravel_index(idx, maps.shape[1:])
    return np.stack([cols, rows], axis=1).astype(np.float64) * heatmaps.stride


def decode_pose(
    heatmaps: HeatmapStack,
    depths: np.ndarray,
    camera: Camera,
    root_depth: float,
    depth_scale: float = 1.0,
) -> Pose3D:
    """Back-project argmax keypoints at z = root_depth + depth_scale·depths (camera frame, mm)."""
    depths = np.asarray(depths, dtype=np.float64)
    if depths.shape != (NUM_JOINTS,):
        raise ShapeMismatchError(f"expected {NUM_JOINTS} relative depths, got shape {depths.shape}")
    keypoints = decode_keypoints(heatmaps)
    return Pose3D(joints=backproject(keypoints, root_depth + depth_scale * depths, camera))


def estimate_pose(model: Hpm3D, image: np.ndarray, camera: Camera, root_depth: float) -> Pose3D:
    """Full 3D estimate of one image with a known root depth."""
    heatmaps, depths = hpm3d_forward(model, image)
    return decode_pose(heatmaps, depths, camera, root_depth, depth_scale=model.config.depth_scale)


def estimate_keypoints(model: Hpm3D, image: np.ndarray) -> Pose2D:
    """2D keypoints of one image, decoded from the last stage."""
    heatmaps, _ = hpm3d_forward(model, image)
    return Pose2D(keypoints=decode_keypoints(heatmaps))


def root_camera_depth(pose: Pose3D, camera: Camera, config: HpmConfig) -> float:
    """Camera-frame depth (mm) of the reference joint."""
    return float(camera_depths(pose, camera)[config.root_index])
