# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Colored contour-map embedding of a 3D hand pose.

Three layers are composited onto a black canvas: the palm polygon at the bottom, the per-finger
ellipses above it, and the keypoint disks on top so joint locations stay recoverable.
"""

import math
from typing import Tuple

import cv2
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from coreason_mmhand.pose.core import project
from coreason_mmhand.pose.types import FINGER_BASES, FINGER_JOINTS, WRIST, Camera, Pose3D
from coreason_mmhand.schemas import ContourConfig

Color = Tuple[int, int, int]

# RGB, 8-bit. Black is background; white is reserved for keypoint disks.
_PALETTE_U8: Tuple[Color, ...] = (
    (255, 0, 0),  # thumb
    (0, 255, 0),  # index
    (0, 0, 255),  # middle
    (255, 255, 0),  # ring
    (255, 0, 255),  # pinky
    (128, 128, 128),  # palm
)
KEYPOINT_COLOR: Color = (255, 255, 255)

# Keeps far out-of-frame vertices inside int32 for OpenCV.
_COORD_LIMIT = 1 << 20

_CROSS = cv2.getStructuringElement(cv2.MORPH_CROSS, (3, 3))


class ContourMap(BaseModel):
    """An H x W x 3 contour embedding with values in [0, 1]; background is exactly 0."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pixels: np.ndarray
    source_pose: Pose3D

    @field_validator("pixels", mode="before")
    @classmethod
    def _check_pixels(cls, value: object) -> np.ndarray:
        arr = np.asarray(value, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"contour pixels must be H x W x 3, got {arr.shape}")
        return arr


def finger_palette() -> Tuple[Tuple[float, float, float], ...]:
    """The six fixed RGB colors in [0, 1]: thumb, index, middle, ring, pinky, palm."""
    return tuple((r / 255.0, g / 255.0, b / 255.0) for r, g, b in _PALETTE_U8)


def _snap(points: np.ndarray) -> np.ndarray:
    """Round half up to integer pixels (commutes with integer shifts, unlike banker's rounding)."""
    return np.clip(np.floor(points + 0.5), -_COORD_LIMIT, _COORD_LIMIT).astype(np.int64)


def _draw_segment(canvas: np.ndarray, p: np.ndarray, q: np.ndarray, color: Color, config: ContourConfig) -> None:
    dx, dy = int(q[0] - p[0]), int(q[1] - p[1])
    length = math.hypot(dx, dy)
    minor = max(config.ellipse_ratio * length, config.min_minor_axis)
    semi_major = max(1, int(math.floor(length / 2.0 + 0.5)))
    semi_minor = max(1, int(math.floor(minor / 2.0 + 0.5)))
    center = (int(math.floor((p[0] + q[0]) / 2.0 + 0.5)), int(math.floor((p[1] + q[1]) / 2.0 + 0.5)))
    angle = int(round(math.degrees(math.atan2(dy, dx))))
    polygon = cv2.ellipse2Poly(center, (semi_major, semi_minor), angle, 0, 360, 5)
    cv2.fillConvexPoly(canvas, polygon, color)


def render_contour(pose: Pose3D, camera: Camera, config: ContourConfig) -> ContourMap:
    """Rasterize the contour map of `pose` as seen by `camera`.

    Raises:
        ProjectionError: If a joint lies at or behind the camera plane.
    """
    height, width = camera.image_size
    points = _snap(project(pose, camera).keypoints)
    canvas = np.zeros((height, width, 3), dtype=np.uint8)

    # Palm (bottom layer)
    palm = points[[WRIST, *FINGER_BASES]].astype(np.int32)
    cv2.fillPoly(canvas, [palm], _PALETTE_U8[5])

    # Fingers, thumb first
    for finger, chain in enumerate(FINGER_JOINTS):
        for a, b in zip(chain[:-1], chain[1:], strict=True):
            _draw_segment(canvas, points[a], points[b], _PALETTE_U8[finger], config)

    # Keypoint disks (top layer)
    seeds = np.zeros((height, width), dtype=np.uint8)
    inside = (points[:, 0] >= 0) & (points[:, 0] < width) & (points[:, 1] >= 0) & (points[:, 1] < height)
    seeds[points[inside, 1], points[inside, 0]] = 1
    disks = cv2.dilate(seeds, _CROSS, iterations=config.keypoint_radius)
    if config.erosion_passes:
        disks = cv2.erode(disks, _CROSS, iterations=config.erosion_passes)
    canvas[disks > 0] = KEYPOINT_COLOR

    return ContourMap(pixels=canvas.astype(np.float32) / 255.0, source_pose=pose)
