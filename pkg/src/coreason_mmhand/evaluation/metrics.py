# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Image-quality and keypoint-accuracy metrics.

All metrics are pure functions. Images are (H, W[, C]) floats in [0, 1]; 3D errors are in millimeters.
"""

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import trapezoid
from scipy.special import rel_entr
from skimage.metrics import structural_similarity

from coreason_mmhand.evaluation.classifier import ImageClassifier
from coreason_mmhand.exceptions import DegeneratePoseError, MMHandValidationError, ShapeMismatchError
from coreason_mmhand.pose.types import SKELETON_EDGES, Pose2D, Pose3D

SSIM_SIGMA = 1.5
PCKB_FRACTION = 2.0 / 3.0
AUC_LOW = 20.0
AUC_HIGH = 50.0
SIMPLEX_TOLERANCE = 1e-6

PoseSet = Union[Sequence[Pose3D], Sequence[Pose2D]]


def ssim(x: np.ndarray, y: np.ndarray, data_range: float = 1.0) -> float:
    """Gaussian-window SSIM (sigma 1.5, 11x11, K1 0.01, K2 0.03), channel-averaged for color images."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatchError(f"ssim inputs differ in shape: {x.shape} vs {y.shape}")
    return float(
        structural_similarity(
            x,
            y,
            data_range=data_range,
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            use_sample_covariance=False,
            channel_axis=-1 if x.ndim == 3 else None,
        )
    )


def apply_mask(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Zero the background of an (H, W[, C]) image with an (H, W) binary mask."""
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask)
    if mask.shape != image.shape[:2]:
        raise ShapeMismatchError(f"mask shape {mask.shape} does not match image {image.shape[:2]}")
    keep = mask.astype(bool)
    return image * (keep[..., None] if image.ndim == 3 else keep)


def mask_ssim(x: np.ndarray, y: np.ndarray, mask: np.ndarray, data_range: float = 1.0) -> float:
    """SSIM after zeroing the background of both images."""
    return ssim(apply_mask(x, mask), apply_mask(y, mask), data_range)


def check_probabilities(probs: np.ndarray) -> np.ndarray:
    """Validate an (N, K) table of probability vectors within `SIMPLEX_TOLERANCE`."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise MMHandValidationError(f"classifier output must be a non-empty (N, K) table, got {probs.shape}")
    if not np.all(np.isfinite(probs)) or probs.min() < -SIMPLEX_TOLERANCE:
        raise MMHandValidationError("classifier output has negative or non-finite entries")
    if np.max(np.abs(probs.sum(axis=1) - 1.0)) > SIMPLEX_TOLERANCE:
        raise MMHandValidationError("classifier output rows do not sum to 1")
    return np.clip(probs, 0.0, None)


def inception_score_from_probs(probs: np.ndarray, splits: int = 1) -> Tuple[float, float]:
    """exp(mean KL(p(y|x) || p(y))) per split; returns (mean, std) over splits."""
    probs = check_probabilities(probs)
    if not 1 <= splits <= len(probs):
        raise MMHandValidationError(f"splits must be within 1..{len(probs)}, got {splits}")
    scores = []
    for part in np.array_split(probs, splits):
        marginal = part.mean(axis=0, keepdims=True)
        kl = rel_entr(part, marginal).sum(axis=1)
        scores.append(float(np.exp(kl.mean())))
    return float(np.mean(scores)), float(np.std(scores))


def inception_score(images: np.ndarray, classifier: ImageClassifier, splits: int = 1) -> Tuple[float, float]:
    """Inception score of an (N, H, W, C) image batch under an injected classifier."""
    return inception_score_from_probs(classifier(np.asarray(images, dtype=np.float32)), splits)


def mask_inception_score(
    images: np.ndarray, masks: np.ndarray, classifier: ImageClassifier, splits: int = 1
) -> Tuple[float, float]:
    """Inception score with every image's background zeroed first."""
    masked = np.stack([apply_mask(img, m) for img, m in zip(images, masks, strict=True)]).astype(np.float32)
    return inception_score(masked, classifier, splits)


def _keypoints(poses: PoseSet) -> np.ndarray:
    if len(poses) == 0:
        raise MMHandValidationError("pose set is empty")
    kinds = {type(p) for p in poses}
    if kinds == {Pose3D}:
        return np.stack([p.joints for p in poses])  # type: ignore[union-attr]
    if kinds == {Pose2D}:
        return np.stack([p.keypoints for p in poses])  # type: ignore[union-attr]
    raise MMHandValidationError("pose sets must contain only Pose3D or only Pose2D")


def joint_errors(pred: PoseSet, gt: PoseSet) -> np.ndarray:
    """(N, 21) Euclidean error per joint."""
    if len(pred) != len(gt):
        raise ShapeMismatchError(f"prediction count {len(pred)} differs from ground truth {len(gt)}")
    p, g = _keypoints(pred), _keypoints(gt)
    if p.shape != g.shape:
        raise ShapeMismatchError(f"prediction and ground truth differ in dimension: {p.shape} vs {g.shape}")
    return np.linalg.norm(p - g, axis=2)


def epe(pred: PoseSet, gt: PoseSet) -> float:
    """Mean end-point error: millimeters for Pose3D sets, pixels for Pose2D sets."""
    return float(joint_errors(pred, gt).mean())


def mean_bone_length(pose: Pose2D) -> float:
    k = pose.keypoints
    return float(np.mean([np.linalg.norm(k[a] - k[b]) for a, b in SKELETON_EDGES]))


def pckb(pred: Sequence[Pose2D], gt: Sequence[Pose2D]) -> float:
    """Fraction of keypoints within 2/3 of the ground-truth mean bone length, averaged over images.

    Raises:
        DegeneratePoseError: If a ground-truth pose has zero mean bone length.
    """
    errors = joint_errors(pred, gt)
    scores = []
    for i, pose in enumerate(gt):
        bone = mean_bone_length(pose)
        if bone == 0.0:
            raise DegeneratePoseError(f"ground-truth pose {i} has zero mean bone length")
        scores.append(float(np.mean(errors[i] <= PCKB_FRACTION * bone)))
    return float(np.mean(scores))


class PckCurve(BaseModel):
    """PCK sampled at ascending thresholds (mm)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    thresholds: List[float] = Field(..., min_length=2)
    pck: List[float]

    @model_validator(mode="after")
    def _check(self) -> "PckCurve":
        if len(self.thresholds) != len(self.pck):
            raise ValueError("thresholds and pck must have equal lengths")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be strictly ascending")
        if any(v < 0.0 or v > 1.0 for v in self.pck):
            raise ValueError("pck values must lie in [0, 1]")
        if any(b < a for a, b in zip(self.pck, self.pck[1:])):
            raise ValueError("pck must be non-decreasing in threshold")
        return self


def default_thresholds() -> np.ndarray:
    """31 uniform thresholds over [20, 50] mm."""
    return np.linspace(AUC_LOW, AUC_HIGH, 31)


def pck_curve(pred: PoseSet, gt: PoseSet, thresholds: Optional[Sequence[float]] = None) -> PckCurve:
    """Fraction of joints with error <= t, for every threshold t."""
    errors = joint_errors(pred, gt).ravel()
    ts = np.asarray(default_thresholds() if thresholds is None else thresholds, dtype=np.float64)
    return PckCurve(thresholds=ts.tolist(), pck=[float(np.mean(errors <= t)) for t in ts])


def auc_20_50(curve: PckCurve) -> float:
    """Trapezoidal area under the curve over [20, 50] mm divided by 30.

    Raises:
        MMHandValidationError: If the curve does not sample both interval ends.
    """
    t = np.asarray(curve.thresholds)
    v = np.asarray(curve.pck)
    if AUC_LOW not in t or AUC_HIGH not in t:
        raise MMHandValidationError("PCK curve must be sampled at 20 mm and 50 mm")
    inside = (t >= AUC_LOW) & (t <= AUC_HIGH)
    return float(trapezoid(v[inside], t[inside]) / (AUC_HIGH - AUC_LOW))

