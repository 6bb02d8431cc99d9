# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Supervised training for the heat-map estimators.

Both loops use Adam over seeded mini-batches. `train_hpm2d` minimizes the stage-averaged heat-map loss;
`train_hpm3d` adds the smooth-L1 relative-depth term.
"""

from typing import List, Optional, Sequence

import numpy as np
import torch
from torch.utils.data import DataLoader, TensorDataset

from coreason_mmhand.data.dataset import Dataset
from coreason_mmhand.exceptions import DatasetError, ShapeMismatchError
from coreason_mmhand.hpm.inference import heatmap_targets, relative_depths
from coreason_mmhand.hpm.losses import relative_depth_loss, stage_heatmap_loss
from coreason_mmhand.hpm.models import Hpm2D, Hpm3D
from coreason_mmhand.pose.core import project
from coreason_mmhand.pose.types import Camera, Pose2D, Pose3D
from coreason_mmhand.schemas import HpmConfig
from coreason_mmhand.utils.logger import logger
from coreason_mmhand.utils.runtime import seed_everything, torch_device


def _input_tensor(inputs: Sequence[np.ndarray], config: HpmConfig) -> torch.Tensor:
    if len(inputs) == 0:
        raise DatasetError("cannot train an estimator on an empty set")
    arrays = []
    for i, item in enumerate(inputs):
        arr = np.asarray(item, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.shape != (config.input_size, config.input_size, config.in_channels):
            raise ShapeMismatchError(f"input {i} has shape {arr.shape}, estimator expects {config.input_size}px")
        arrays.append(arr.transpose(2, 0, 1))
    return torch.from_numpy(np.ascontiguousarray(np.stack(arrays)))


def _loader(tensors: List[torch.Tensor], config: HpmConfig) -> DataLoader:
    generator = seed_everything(config.seed)
    return DataLoader(TensorDataset(*tensors), batch_size=config.batch_size, shuffle=True, generator=generator)


def train_hpm2d(
    inputs: Sequence[np.ndarray], keypoints: Sequence[Pose2D], config: HpmConfig, epochs: Optional[int] = None
) -> Hpm2D:
    """Train a multi-stage 2D estimator.

    Args:
        inputs: (H, W[, C]) arrays matching `config.input_size` / `config.in_channels`.
        keypoints: Ground-truth 2D keypoints in input pixels.
        config: Architecture and optimizer settings.
        epochs: Overrides `config.epochs`.

    Returns:
        Hpm2D: The trained model, in eval mode.
    """
    x = _input_tensor(inputs, config)
    targets = torch.from_numpy(np.stack([heatmap_targets(k, config) for k in keypoints]))
    loader = _loader([x, targets], config)
    device = torch_device()
    model = Hpm2D(config).to(device)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    n_epochs = epochs if epochs is not None else config.epochs
    logger.info("Training Hpm2D", samples=len(inputs), epochs=n_epochs, stages=config.num_stages)
    model.train()
    for epoch in range(n_epochs):
        total = 0.0
        for xb, tb in loader:
            optimizer.zero_grad()
            loss = stage_heatmap_loss(model(xb.to(device)), tb.to(device))
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * xb.shape[0]
        logger.debug(f"Hpm2D epoch {epoch + 1}/{n_epochs} loss={total / len(inputs):.6f}")
    model.eval()
    return model.cpu()


def hpm3d_loss(model: Hpm3D, x: torch.Tensor, heatmaps: torch.Tensor, depths: torch.Tensor) -> torch.Tensor:
    """Unweighted estimator objective: stage heat-map loss + smooth-L1 relative depth."""
    stages, pred_depths = model(x)
    return stage_heatmap_loss(stages, heatmaps) + relative_depth_loss(pred_depths, depths)


def train_hpm3d(
    inputs: Sequence[np.ndarray],
    poses: Sequence[Pose3D],
    cameras: Sequence[Camera],
    config: HpmConfig,
    epochs: Optional[int] = None,
) -> Hpm3D:
    """Train the heat-map + relative-depth estimator on images with known 3D poses.

    Returns:
        Hpm3D: The trained model, in eval mode.
    """
    if not (len(inputs) == len(poses) == len(cameras)):
        raise DatasetError("inputs, poses and cameras must have equal lengths")
    x = _input_tensor(inputs, config)
    heatmaps = torch.from_numpy(np.stack([heatmap_targets(project(p, c), config) for p, c in zip(poses, cameras)]))
    rel = np.stack([relative_depths(p, c, config) for p, c in zip(poses, cameras)])
    depths = torch.from_numpy(rel.astype(np.float32))
    loader = _loader([x, heatmaps, depths], config)
    device = torch_device()
    model = Hpm3D(config).to(device)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    n_epochs = epochs if epochs is not None else config.epochs
    logger.info("Training Hpm3D", samples=len(inputs), epochs=n_epochs)
    model.train()
    for epoch in range(n_epochs):
        total = 0.0
        for xb, hb, db in loader:
            optimizer.zero_grad()
            loss = hpm3d_loss(model, xb.to(device), hb.to(device), db.to(device))
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * xb.shape[0]
        logger.debug(f"Hpm3D epoch {epoch + 1}/{n_epochs} loss={total / len(inputs):.6f}")
    model.eval()
    return model.cpu()


def train_hpm3d_on_dataset(dataset: Dataset, config: HpmConfig, epochs: Optional[int] = None) -> Hpm3D:
    """Convenience wrapper training on a dataset's RGB images."""
    return train_hpm3d(
        [s.image for s in dataset], dataset.poses(), [s.camera for s in dataset], config, epochs=epochs
    )
