# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Metrics, inception-score classifiers and the augmentation protocol."""

from coreason_mmhand.evaluation.classifier import (
    ImageClassifier,
    OnnxImageClassifier,
    TorchImageClassifier,
    TrunkClassifier,
    finger_extension_label,
    train_toy_classifier,
)
from coreason_mmhand.evaluation.metrics import (
    PckCurve,
    apply_mask,
    auc_20_50,
    check_probabilities,
    default_thresholds,
    epe,
    inception_score,
    inception_score_from_probs,
    joint_errors,
    mask_inception_score,
    mask_ssim,
    mean_bone_length,
    pck_curve,
    pckb,
    ssim,
)
from coreason_mmhand.evaluation.protocol import (
    AugmentationResult,
    AugmentedSet,
    Provenance,
    build_augmented_set,
    build_augmented_set_async,
    held_out_epe,
    mmhand_generate_fn,
    run_augmentation_experiment,
    split_indices,
)

__all__ = [
    "AugmentationResult",
    "AugmentedSet",
    "ImageClassifier",
    "OnnxImageClassifier",
    "PckCurve",
    "Provenance",
    "TorchImageClassifier",
    "TrunkClassifier",
    "apply_mask",
    "auc_20_50",
    "build_augmented_set",
    "build_augmented_set_async",
    "check_probabilities",
    "default_thresholds",
    "epe",
    "finger_extension_label",
    "held_out_epe",
    "inception_score",
    "inception_score_from_probs",
    "joint_errors",
    "mask_inception_score",
    "mask_ssim",
    "mean_bone_length",
    "mmhand_generate_fn",
    "pck_curve",
    "pckb",
    "run_augmentation_experiment",
    "split_indices",
    "ssim",
    "train_toy_classifier",
]
