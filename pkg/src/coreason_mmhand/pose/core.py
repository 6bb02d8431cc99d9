# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Projection, heat maps, pose identity and pose distance.

Everything here is a pure function of its inputs.
"""

import math
from typing import Protocol, Sequence, Tuple

import numpy as np

from coreason_mmhand.exceptions import DegeneratePoseError, MMHandValidationError, ProjectionError
from coreason_mmhand.pose.geometry import convex_hull, polygon_area
from coreason_mmhand.pose.types import (
    FINGER_TIPS,
    NUM_JOINTS,
    WRIST,
    Camera,
    HeatmapStack,
    Pose2D,
    Pose3D,
    PoseIdentity,
)

# Homogeneous w at or below this is treated as on/behind the camera plane.
PROJECTION_EPS = 1e-9


class Projector(Protocol):
    """Maps a 3D pose to 2D keypoints."""

    def __call__(self, pose: Pose3D) -> Pose2D: ...


class OrthographicProjector:
    """Camera-free projector that drops z."""

    def __call__(self, pose: Pose3D) -> Pose2D:
        return orthographic_project(pose)

    def __repr__(self) -> str:
        return "OrthographicProjector()"


class PerspectiveProjector:
    """Projector through a calibrated pinhole camera."""

    def __init__(self, camera: Camera) -> None:
        self.camera = camera

    def __call__(self, pose: Pose3D) -> Pose2D:
        return project(pose, self.camera)


ORTHOGRAPHIC = OrthographicProjector()


def project_points(points: np.ndarray, camera: Camera) -> np.ndarray:
    """Project world points (N, 3) to pixels (N, 2) with P = K[R | -RC].

    Raises:
        ProjectionError: If any point lies at or behind the camera plane.
    """
    pts = np.asarray(points, dtype=np.float64)
    homog = np.hstack([pts, np.ones((len(pts), 1))]) @ camera.projection_matrix.T
    w = homog[:, 2]
    if np.any(w <= PROJECTION_EPS):
        bad = int(np.argmax(w <= PROJECTION_EPS))
        raise ProjectionError(f"point {bad} projects at or behind the camera plane (w={w[bad]:.3g})")
    return np.asarray(homog[:, :2] / w[:, None])


def project(pose: Pose3D, camera: Camera) -> Pose2D:
    """Perspective projection of every joint; keypoints outside the image are kept, not clamped."""
    return Pose2D(keypoints=project_points(pose.joints, camera))


def orthographic_project(pose: Pose3D) -> Pose2D:
    """Drop the z coordinate of every joint."""
    return Pose2D(keypoints=pose.joints[:, :2])


def camera_depths(pose: Pose3D, camera: Camera) -> np.ndarray:
    """Camera-frame z of every joint (length 21)."""
    return np.asarray(camera.to_camera_frame(pose.joints)[:, 2])


def backproject(keypoints: np.ndarray, depths: np.ndarray, camera: Camera) -> np.ndarray:
    """Inverse of `project_points` for known camera-frame depths.

    Args:
        keypoints (np.ndarray): Pixel coordinates, shape (N, 2).
        depths (np.ndarray): Camera-frame z per point, shape (N,).
        camera (Camera): The camera the pixels were observed with.

    Returns:
        np.ndarray: World coordinates, shape (N, 3).
    """
    kp = np.asarray(keypoints, dtype=np.float64)
    z = np.asarray(depths, dtype=np.float64)
    rays = np.hstack([kp, np.ones((len(kp), 1))]) @ np.linalg.inv(camera.intrinsic).T
    cam_points = rays * z[:, None]
    return np.asarray(cam_points @ camera.rotation + camera.center)


def render_heatmaps(pose2d: Pose2D, size: Tuple[int, int], sigma: float, stride: int = 1) -> HeatmapStack:
    """Render one peak-normalized Gaussian per joint.

    Channel i is exp(-|p - k_i|^2 / (2 sigma^2)) evaluated at integer pixel centers p, where k_i is the
    keypoint divided by `stride` (heat-map cells per image pixel).

    Args:
        pose2d (Pose2D): Keypoints in image pixels.
        size (Tuple[int, int]): (H, W) of the heat maps.
        sigma (float): Gaussian spread in heat-map pixels.
        stride (int): Image pixels per heat-map cell.

    Raises:
        MMHandValidationError: If sigma or stride is not positive.
    """
    if sigma <= 0:
        raise MMHandValidationError(f"sigma must be positive, got {sigma}")
    if stride < 1:
        raise MMHandValidationError(f"stride must be at least 1, got {stride}")
    height, width = size
    kp = pose2d.keypoints / float(stride)
    ys = np.arange(height, dtype=np.float64)
    xs = np.arange(width, dtype=np.float64)
    dy2 = (ys[None, :] - kp[:, 1:2]) ** 2
    dx2 = (xs[None, :] - kp[:, 0:1]) ** 2
    maps = np.exp(-(dy2[:, :, None] + dx2[:, None, :]) / (2.0 * sigma * sigma))
    return HeatmapStack(maps=maps, sigma=sigma, stride=stride)


def pose_identity(pose: Pose3D, projector: Projector = ORTHOGRAPHIC, palm_index: int = WRIST) -> PoseIdentity:
    """Compute f(u) = [5 tip-to-palm distances, centroid-to-palm distance, sqrt(hull area)].

    Tip and centroid distances are taken in 3D; the hull is taken over the projected keypoints.
    A hull spanned by fewer than 3 non-collinear points has area 0 and sets `degenerate_hull`.
    """
    joints = pose.joints
    palm = joints[palm_index]
    tips = np.linalg.norm(joints[list(FINGER_TIPS)] - palm, axis=1)
    centroid = np.linalg.norm(joints.mean(axis=0) - palm)
    hull = convex_hull(projector(pose).keypoints)
    area = polygon_area(hull)
    degenerate = len(hull) < 3 or area == 0.0
    vec = np.concatenate([tips, [centroid, math.sqrt(area)]])
    return PoseIdentity(vec=vec, degenerate_hull=degenerate)


def identity_matrix(
    poses: Sequence[Pose3D], projector: Projector = ORTHOGRAPHIC, palm_index: int = WRIST
) -> np.ndarray:
    """Stack identities of many poses into an (N, 7) array."""
    if not poses:
        return np.zeros((0, 7), dtype=np.float64)
    return np.stack([pose_identity(p, projector, palm_index).vec for p in poses])


def identity_distance(fu: np.ndarray, fv: np.ndarray) -> float:
    """(1/pi)·arccos of the cosine similarity of two identity vectors, cosine clamped to [-1, 1].

    Raises:
        DegeneratePoseError: If either vector is zero.
    """
    nu = float(np.linalg.norm(fu))
    nv = float(np.linalg.norm(fv))
    if nu == 0.0 or nv == 0.0:
        raise DegeneratePoseError("pose identity vector is zero; pose distance undefined")
    cosine = float(np.dot(fu, fv)) / (nu * nv)
    return math.acos(min(1.0, max(-1.0, cosine))) / math.pi


def pose_distance(u: Pose3D, v: Pose3D, projector: Projector = ORTHOGRAPHIC, palm_index: int = WRIST) -> float:
    """Angular pose distance in [0, 0.5] between two poses."""
    return identity_distance(pose_identity(u, projector, palm_index).vec, pose_identity(v, projector, palm_index).vec)


__all__ = [
    "NUM_JOINTS",
    "ORTHOGRAPHIC",
    "PROJECTION_EPS",
    "OrthographicProjector",
    "PerspectiveProjector",
    "Projector",
    "backproject",
    "camera_depths",
    "identity_distance",
    "identity_matrix",
    "orthographic_project",
    "pose_distance",
    "pose_identity",
    "project",
    "project_points",
    "render_heatmaps",
]
