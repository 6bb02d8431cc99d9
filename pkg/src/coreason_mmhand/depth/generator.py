# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Depth-map embedding generator.

A pose is first projected and rendered as 21 heat maps; an encoder-decoder with skip connections maps
them to a normalized depth map. Training pairs a conditional patch discriminator with an L1
reconstruction term and two frozen keypoint estimators that read the generated depth.
"""

from typing import Dict, List, Optional, Sequence

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict
from torch import nn
from torch.utils.data import DataLoader, TensorDataset

from coreason_mmhand.data.dataset import Dataset
from coreason_mmhand.depth.oracle import DepthMap, synthetic_depth_oracle
from coreason_mmhand.exceptions import DatasetError, NonFiniteLossError, ShapeMismatchError
from coreason_mmhand.hpm.inference import heatmap_targets, relative_depths
from coreason_mmhand.hpm.losses import relative_depth_loss, stage_heatmap_loss
from coreason_mmhand.hpm.models import Hpm2D, Hpm3D, freeze
from coreason_mmhand.hpm.training import train_hpm2d, train_hpm3d
from coreason_mmhand.layers import PatchDiscriminator, count_parameters
from coreason_mmhand.pose.core import project, render_heatmaps
from coreason_mmhand.pose.types import NUM_JOINTS, Camera, Pose3D
from coreason_mmhand.schemas import DepthGenConfig, HpmConfig
from coreason_mmhand.utils.logger import logger
from coreason_mmhand.utils.runtime import seed_everything

EPS = 1e-7


class DepthSample(BaseModel):
    """A (pose, camera, depth map) training pair."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pose: Pose3D
    camera: Camera
    depth: DepthMap


class DepthUNet(nn.Module):
    """Encoder-decoder over 21-channel pose heat maps with concatenated skip connections."""

    def __init__(self, config: DepthGenConfig) -> None:
        super().__init__()
        if config.input_size % (2**config.levels) != 0:
            raise ShapeMismatchError(f"input_size {config.input_size} is not divisible by 2**{config.levels}")
        widths = [config.base_channels * min(2**i, 8) for i in range(config.levels)]
        self.down = nn.ModuleList()
        in_ch = NUM_JOINTS
        for w in widths:
            self.down.append(nn.Sequential(nn.Conv2d(in_ch, w, 4, stride=2, padding=1), nn.LeakyReLU(0.2)))
            in_ch = w
        self.up = nn.ModuleList()
        for i in reversed(range(config.levels)):
            out_ch = widths[i - 1] if i > 0 else config.base_channels
            up_in = widths[i] if i == config.levels - 1 else widths[i] * 2
            self.up.append(nn.Sequential(nn.ConvTranspose2d(up_in, out_ch, 4, stride=2, padding=1), nn.ReLU()))
        self.head = nn.Conv2d(config.base_channels, 1, kernel_size=1)

    def forward(self, heatmaps: torch.Tensor) -> torch.Tensor:
        """(B, 21, H, W) heat maps -> (B, 1, H, W) depth in [0, 1]."""
        skips: List[torch.Tensor] = []
        x = heatmaps
        for layer in self.down:
            x = layer(x)
            skips.append(x)
        skips.pop()
        for layer in self.up:
            x = layer(x)
            if skips:
                x = torch.cat([x, skips.pop()], dim=1)
        return torch.sigmoid(self.head(x))


class DepthGenerator:
    """A depth network bound to its configuration.

    Attributes:
        config (DepthGenConfig): Settings the network was built with.
        net (DepthUNet): The encoder-decoder.
        history (List[float]): Mean generator loss per training epoch (empty when untrained).
    """

    def __init__(self, config: DepthGenConfig, net: Optional[DepthUNet] = None) -> None:
        self.config = config
        if net is None:
            seed_everything(config.seed)
            net = DepthUNet(config)
        self.net = net
        self.history: List[float] = []

    def pose_heatmaps(self, pose: Pose3D, camera: Camera) -> np.ndarray:
        """(21, H, W) float32 input heat maps for `pose` seen through `camera`."""
        size = self.config.input_size
        if tuple(camera.image_size) != (size, size):
            raise ShapeMismatchError(f"camera renders {camera.image_size}, depth generator expects {size}x{size}")
        stack = render_heatmaps(project(pose, camera), (size, size), self.config.heatmap_sigma)
        return stack.maps.astype(np.float32)

    def predict(self, heatmaps: torch.Tensor) -> torch.Tensor:
        """Evaluation-mode forward pass without gradients."""
        self.net.eval()
        with torch.no_grad():
            return self.net(heatmaps)


def generate_depth(gen: DepthGenerator, pose: Pose3D, camera: Camera) -> DepthMap:
    """Depth embedding of `pose`, H x W in [0, 1].

    Raises:
        ShapeMismatchError: If the camera's image size differs from the generator's input size.
    """
    x = torch.from_numpy(gen.pose_heatmaps(pose, camera))[None]
    return DepthMap(pixels=gen.predict(x)[0, 0].double().clamp(0.0, 1.0).numpy())


def regularizer_config(config: DepthGenConfig, num_stages: int) -> HpmConfig:
    """Estimator settings for reading single-channel depth maps at the generator's resolution."""
    return HpmConfig(
        input_size=config.input_size,
        in_channels=1,
        trunk_channels=16,
        stage_channels=32,
        num_stages=num_stages,
        stride=4 if config.input_size >= 16 else 1,
        learning_rate=1e-3,
        batch_size=config.batch_size,
        epochs=config.estimator_epochs,
        seed=config.seed,
    )


class DepthRegularizers:
    """Frozen 2D (6-stage) and 3D (1-stage) estimators applied to generated depth maps."""

    def __init__(self, hpm2d: Optional[Hpm2D], hpm3d: Optional[Hpm3D]) -> None:
        self.hpm2d = freeze(hpm2d) if hpm2d is not None else None
        self.hpm3d = freeze(hpm3d) if hpm3d is not None else None


def pretrain_regularizers(samples: Sequence[DepthSample], config: DepthGenConfig) -> DepthRegularizers:
    """Fit both keypoint estimators on ground-truth depth maps."""
    depths = [s.depth.pixels for s in samples]
    poses = [s.pose for s in samples]
    cameras = [s.camera for s in samples]
    hpm2d = None
    hpm3d = None
    if config.hpm2d_weight > 0:
        hpm2d = train_hpm2d(depths, [project(p, c) for p, c in zip(poses, cameras)], regularizer_config(config, 6))
    if config.hpm3d_weight > 0:
        hpm3d = train_hpm3d(depths, poses, cameras, regularizer_config(config, 1))
    return DepthRegularizers(hpm2d, hpm3d)


def discriminator_loss(disc: nn.Module, heatmaps: torch.Tensor, real: torch.Tensor, fake: torch.Tensor) -> torch.Tensor:
    """-E[log D(h, real)] - E[log(1 - D(h, fake))] with outputs clamped to [eps, 1 - eps]."""
    d_real = disc(torch.cat([heatmaps, real], dim=1)).clamp(EPS, 1 - EPS)
    d_fake = disc(torch.cat([heatmaps, fake], dim=1)).clamp(EPS, 1 - EPS)
    return -(torch.log(d_real).mean() + torch.log(1 - d_fake).mean())


def generator_losses(
    net: DepthUNet,
    disc: nn.Module,
    heatmaps: torch.Tensor,
    target: torch.Tensor,
    config: DepthGenConfig,
    regularizers: Optional[DepthRegularizers] = None,
    keypoint_maps: Optional[torch.Tensor] = None,
    rel_depths: Optional[torch.Tensor] = None,
) -> Dict[str, torch.Tensor]:
    """Weighted generator objective and its unweighted terms.

    Args:
        net: Depth network.
        disc: Conditional patch discriminator over cat(heat maps, depth).
        heatmaps: (B, 21, H, W) input heat maps.
        target: (B, 1, H, W) ground-truth depth.
        config: Term weights.
        regularizers: Frozen estimators; regularizer terms are zero when absent or zero-weighted.
        keypoint_maps: (B, 21, H', W') estimator-resolution targets for the 2D term.
        rel_depths: (B, 21) normalized relative depths for the 3D term.

    Returns:
        Dict[str, torch.Tensor]: keys adv, recon, hpm2d, hpm3d (unweighted) and total (weighted sum).
    """
    fake = net(heatmaps)
    d_fake = disc(torch.cat([heatmaps, fake], dim=1)).clamp(EPS, 1 - EPS)
    zero = fake.new_zeros(())
    terms = {
        "adv": -torch.log(d_fake).mean(),
        "recon": (fake - target).abs().mean(),
        "hpm2d": zero,
        "hpm3d": zero,
    }
    if regularizers is not None and regularizers.hpm2d is not None and config.hpm2d_weight > 0:
        if keypoint_maps is None:
            raise ValueError("2D regularizer requires keypoint heat-map targets")
        terms["hpm2d"] = stage_heatmap_loss(regularizers.hpm2d(fake), keypoint_maps.to(fake.dtype))
    if regularizers is not None and regularizers.hpm3d is not None and config.hpm3d_weight > 0:
        if keypoint_maps is None or rel_depths is None:
            raise ValueError("3D regularizer requires heat-map and relative-depth targets")
        stages, pred = regularizers.hpm3d(fake)
        terms["hpm3d"] = stage_heatmap_loss(stages, keypoint_maps.to(fake.dtype)) + relative_depth_loss(
            pred, rel_depths.to(fake.dtype)
        )
    terms["total"] = (
        config.adv_weight * terms["adv"]
        + config.recon_weight * terms["recon"]
        + config.hpm2d_weight * terms["hpm2d"]
        + config.hpm3d_weight * terms["hpm3d"]
    )
    return terms


def depth_samples(dataset: Dataset, config: DepthGenConfig) -> List[DepthSample]:
    """Pair every dataset pose with its stored depth map, or the oracle's when none is stored."""
    samples = []
    for sample in dataset:
        if sample.depth is not None:
            depth = DepthMap(pixels=sample.depth)
        else:
            depth = synthetic_depth_oracle(sample.pose, sample.camera, config.capsule_radius, config.palm_thickness)
        samples.append(DepthSample(pose=sample.pose, camera=sample.camera, depth=depth))
    return samples


def train_depth_generator(
    samples: Sequence[DepthSample],
    config: DepthGenConfig,
    regularizers: Optional[DepthRegularizers] = None,
    epochs: Optional[int] = None,
) -> DepthGenerator:
    """Adversarially train the depth generator.

    Args:
        samples: Paired poses and ground-truth depth maps, all at `config.input_size`.
        config: Architecture, optimizer and loss weights.
        regularizers: Pretrained estimators; when None and a regularizer weight is positive they are
            fitted on `samples` first.
        epochs: Overrides `config.epochs`.

    Returns:
        DepthGenerator: Trained generator with per-epoch mean losses in `history`.

    Raises:
        DatasetError: If `samples` is empty.
        ShapeMismatchError: If a depth map or camera does not match `config.input_size`.
        NonFiniteLossError: If a loss becomes NaN or infinite.
    """
    if len(samples) == 0:
        raise DatasetError("depth generator needs at least one training pair")
    size = config.input_size
    for i, s in enumerate(samples):
        if s.depth.pixels.shape != (size, size):
            raise ShapeMismatchError(f"depth map {i} has shape {s.depth.pixels.shape}, expected {(size, size)}")

    if regularizers is None and (config.hpm2d_weight > 0 or config.hpm3d_weight > 0):
        logger.info("Pretraining keypoint regularizers on ground-truth depth")
        regularizers = pretrain_regularizers(samples, config)

    gen = DepthGenerator(config)
    disc = PatchDiscriminator(NUM_JOINTS + 1)
    heatmaps = torch.from_numpy(np.stack([gen.pose_heatmaps(s.pose, s.camera) for s in samples]))
    targets = torch.from_numpy(np.stack([s.depth.pixels for s in samples]).astype(np.float32))[:, None]
    reg_cfg = regularizer_config(config, 1)
    kp_maps = torch.from_numpy(np.stack([heatmap_targets(project(s.pose, s.camera), reg_cfg) for s in samples]))
    rel = torch.from_numpy(np.stack([relative_depths(s.pose, s.camera, reg_cfg) for s in samples]).astype(np.float32))

    loader = DataLoader(
        TensorDataset(heatmaps, targets, kp_maps, rel),
        batch_size=config.batch_size,
        shuffle=True,
        generator=seed_everything(config.seed),
    )
    opt_g = torch.optim.Adam(gen.net.parameters(), lr=config.learning_rate, betas=(0.5, 0.999))
    opt_d = torch.optim.Adam(disc.parameters(), lr=config.learning_rate, betas=(0.5, 0.999))
    n_epochs = epochs if epochs is not None else config.epochs
    logger.info(
        "Training depth generator",
        samples=len(samples),
        epochs=n_epochs,
        parameters=count_parameters(gen.net),
    )
    gen.net.train()
    for epoch in range(n_epochs):
        total = 0.0
        for hb, tb, kb, rb in loader:
            with torch.no_grad():
                fake = gen.net(hb)
            opt_d.zero_grad()
            loss_d = discriminator_loss(disc, hb, tb, fake)
            if not torch.isfinite(loss_d):
                logger.error(f"Non-finite depth discriminator loss at epoch {epoch + 1}: {float(loss_d.detach())}")
                raise NonFiniteLossError(
                    "depth discriminator loss is not finite", record={"disc": float(loss_d.detach())}
                )
            loss_d.backward()
            opt_d.step()

            opt_g.zero_grad()
            terms = generator_losses(gen.net, disc, hb, tb, config, regularizers, kb, rb)
            if not torch.isfinite(terms["total"]):
                record = {k: float(v.detach()) for k, v in terms.items()} | {"disc": float(loss_d.detach())}
                logger.error(f"Non-finite depth generator loss at epoch {epoch + 1}: {record}")
                raise NonFiniteLossError("depth generator loss is not finite", record=record)
            terms["total"].backward()
            opt_g.step()
            total += float(terms["total"].detach()) * hb.shape[0]
        gen.history.append(total / len(samples))
        logger.debug(f"Depth generator epoch {epoch + 1}/{n_epochs} loss={gen.history[-1]:.6f}")
    gen.net.eval()
    logger.info(f"Depth generator trained; final loss {gen.history[-1]:.6f}")
    return gen


def depth_mae(gen: DepthGenerator, samples: Sequence[DepthSample]) -> float:
    """Mean absolute error of generated against reference depth maps."""
    errors = [np.abs(generate_depth(gen, s.pose, s.camera).pixels - s.depth.pixels).mean() for s in samples]
    return float(np.mean(errors))
