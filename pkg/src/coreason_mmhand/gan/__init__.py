# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Discriminators, the joint loss system and the adversarial training loop."""

from coreason_mmhand.gan.losses import (
    EPS,
    JointLoss,
    adversarial_loss,
    appearance_loss,
    joint_loss,
    l1_loss,
    perceptual_loss,
    pose_loss,
)
from coreason_mmhand.gan.networks import DiscriminatorPair, FeatureExtractor
from coreason_mmhand.gan.trainer import (
    LOSS_COLUMNS,
    GanBatch,
    GanTrainer,
    LossLog,
    make_batch,
    train_gan,
    train_step,
)

__all__ = [
    "EPS",
    "LOSS_COLUMNS",
    "DiscriminatorPair",
    "FeatureExtractor",
    "GanBatch",
    "GanTrainer",
    "JointLoss",
    "LossLog",
    "adversarial_loss",
    "appearance_loss",
    "joint_loss",
    "l1_loss",
    "make_batch",
    "perceptual_loss",
    "pose_loss",
    "train_gan",
    "train_step",
]
