# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Geometric record types shared by every stage of the pipeline.

Arrays are stored as float64 numpy arrays. Models are frozen; operations return new instances.
"""

from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

NUM_JOINTS = 21

# Canonical order: wrist, then thumb, index, middle, ring, pinky (base -> tip, four joints each).
JOINT_ORDER_TAG = "wrist,thumb1-4,index1-4,middle1-4,ring1-4,pinky1-4"
JOINT_NAMES: Tuple[str, ...] = ("wrist",) + tuple(
    f"{finger}{k}" for finger in ("thumb", "index", "middle", "ring", "pinky") for k in range(1, 5)
)
WRIST = 0
FINGER_JOINTS: Tuple[Tuple[int, int, int, int], ...] = tuple(
    (1 + 4 * f, 2 + 4 * f, 3 + 4 * f, 4 + 4 * f) for f in range(5)
)
FINGER_BASES: Tuple[int, ...] = tuple(chain[0] for chain in FINGER_JOINTS)
FINGER_TIPS: Tuple[int, ...] = tuple(chain[-1] for chain in FINGER_JOINTS)

# 20 skeleton edges: wrist -> each finger base, then three intra-finger edges per finger.
SKELETON_EDGES: Tuple[Tuple[int, int], ...] = tuple((WRIST, base) for base in FINGER_BASES) + tuple(
    (chain[k], chain[k + 1]) for chain in FINGER_JOINTS for k in range(3)
)


def _as_array(value: object, shape: Tuple[int, ...], name: str) -> np.ndarray:
    arr = np.array(value, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    arr.setflags(write=False)
    return arr


class Pose3D(BaseModel):
    """A 21-joint hand pose in world coordinates (millimeters).

    Attributes:
        joints (np.ndarray): Array of shape (21, 3).
        joint_order (str): Tag naming the canonical joint ordering.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    joints: np.ndarray
    joint_order: str = JOINT_ORDER_TAG

    @field_validator("joints", mode="before")
    @classmethod
    def _check_joints(cls, value: object) -> np.ndarray:
        return _as_array(value, (NUM_JOINTS, 3), "joints")

    @field_validator("joint_order")
    @classmethod
    def _check_order(cls, value: str) -> str:
        if value != JOINT_ORDER_TAG:
            raise ValueError(f"Unsupported joint order '{value}'")
        return value

    def scaled(self, factor: float) -> "Pose3D":
        """Return the pose with every coordinate multiplied by `factor`."""
        return Pose3D(joints=self.joints * factor)

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "Pose3D":
        """Return R·x + t applied to every joint."""
        return Pose3D(joints=self.joints @ np.asarray(rotation).T + np.asarray(translation))

    def to_list(self) -> List[List[float]]:
        return [[float(v) for v in row] for row in self.joints]


class Pose2D(BaseModel):
    """Projected keypoints in pixel coordinates, one (u, v) pair per joint."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    keypoints: np.ndarray

    @field_validator("keypoints", mode="before")
    @classmethod
    def _check_keypoints(cls, value: object) -> np.ndarray:
        return _as_array(value, (NUM_JOINTS, 2), "keypoints")


class Camera(BaseModel):
    """Pinhole camera with projection P = K[R | -RC].

    Attributes:
        intrinsic (np.ndarray): 3x3 matrix K with positive focal entries.
        rotation (np.ndarray): 3x3 orthonormal world-to-camera rotation R.
        center (np.ndarray): Camera center C in world coordinates.
        image_size (Tuple[int, int]): (H, W) in pixels.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    intrinsic: np.ndarray
    rotation: np.ndarray
    center: np.ndarray
    image_size: Tuple[int, int]

    @field_validator("intrinsic", mode="before")
    @classmethod
    def _check_intrinsic(cls, value: object) -> np.ndarray:
        arr = _as_array(value, (3, 3), "intrinsic")
        if arr[0, 0] <= 0 or arr[1, 1] <= 0:
            raise ValueError("intrinsic focal entries must be positive")
        return arr

    @field_validator("rotation", mode="before")
    @classmethod
    def _check_rotation(cls, value: object) -> np.ndarray:
        arr = _as_array(value, (3, 3), "rotation")
        if not np.allclose(arr.T @ arr, np.eye(3), atol=1e-6, rtol=0.0):
            raise ValueError("rotation must be orthonormal (R^T R = I within 1e-6)")
        return arr

    @field_validator("center", mode="before")
    @classmethod
    def _check_center(cls, value: object) -> np.ndarray:
        return _as_array(value, (3,), "center")

    @field_validator("image_size")
    @classmethod
    def _check_size(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        if value[0] <= 0 or value[1] <= 0:
            raise ValueError("image_size must be positive")
        return value

    @property
    def projection_matrix(self) -> np.ndarray:
        """The 3x4 matrix K[R | -RC]."""
        extrinsic = np.hstack([self.rotation, (-self.rotation @ self.center)[:, None]])
        return np.asarray(self.intrinsic @ extrinsic)

    def to_camera_frame(self, points: np.ndarray) -> np.ndarray:
        """World points (N, 3) -> camera-frame points (N, 3)."""
        return np.asarray((points - self.center) @ self.rotation.T)

    def moved(self, rotation: np.ndarray, translation: np.ndarray) -> "Camera":
        """The camera after the rigid world transform x -> R·x + t (so projections are unchanged)."""
        rotation = np.asarray(rotation, dtype=np.float64)
        return Camera(
            intrinsic=self.intrinsic,
            rotation=self.rotation @ rotation.T,
            center=rotation @ self.center + np.asarray(translation),
            image_size=self.image_size,
        )


class HeatmapStack(BaseModel):
    """Per-joint Gaussian heat maps, peak-normalized to 1.

    Attributes:
        maps (np.ndarray): Array of shape (21, H, W) with values in [0, 1].
        sigma (float): Gaussian spread in heat-map pixels.
        stride (int): Image pixels per heat-map cell.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    maps: np.ndarray
    sigma: float = Field(..., gt=0)
    stride: int = Field(1, ge=1)

    @field_validator("maps", mode="before")
    @classmethod
    def _check_maps(cls, value: object) -> np.ndarray:
        arr = np.array(value, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[0] != NUM_JOINTS:
            raise ValueError(f"maps must have shape (21, H, W), got {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < 0:
            raise ValueError("maps must be finite and nonnegative")
        arr.setflags(write=False)
        return arr


class PoseIdentity(BaseModel):
    """The 7-vector summary [5 tip-to-palm distances, centroid-to-palm distance, sqrt(hull area)].

    Attributes:
        vec (np.ndarray): Nonnegative vector of length 7.
        degenerate_hull (bool): True when fewer than 3 non-collinear keypoints span the hull (area 0).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    vec: np.ndarray
    degenerate_hull: bool = False

    @field_validator("vec", mode="before")
    @classmethod
    def _check_vec(cls, value: object) -> np.ndarray:
        arr = _as_array(value, (7,), "vec")
        if np.any(arr < 0):
            raise ValueError("identity components must be nonnegative")
        return arr

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

