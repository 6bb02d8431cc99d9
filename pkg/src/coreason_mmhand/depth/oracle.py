# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Procedural depth oracle: hands as capsules plus a palm slab, ray-cast per pixel.

The same raster feeds the toy image renderer (part ids for flat shading) and the oracle depth maps,
so the foreground mask of a toy image equals the nonzero support of its depth map.
"""

from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from coreason_mmhand.exceptions import ProjectionError
from coreason_mmhand.pose.core import camera_depths
from coreason_mmhand.pose.geometry import convex_hull
from coreason_mmhand.pose.types import FINGER_BASES, FINGER_JOINTS, WRIST, Camera, Pose3D

PALM_PART = 5
# Smallest value a foreground pixel may take, so 16-bit storage keeps it distinguishable from background.
MIN_FOREGROUND = 1.0 / 65535.0


class DepthMap(BaseModel):
    """Normalized inverse depth, H x W in [0, 1]; background is 0, the nearest surface is 1."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pixels: np.ndarray

    @field_validator("pixels", mode="before")
    @classmethod
    def _check_pixels(cls, value: object) -> np.ndarray:
        arr = np.asarray(value, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"depth map must be H x W, got {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < 0 or arr.max(initial=0.0) > 1:
            raise ValueError("depth values must be finite and within [0, 1]")
        return arr


class HandRaster(BaseModel):
    """Per-pixel nearest hit of the hand primitives.

    Attributes:
        z (np.ndarray): Camera-frame depth of the nearest hit (mm), inf where nothing is hit.
        part (np.ndarray): 0-4 for fingers thumb..pinky, 5 for the palm, -1 for background.
        z_far (float): Far end of the normalization range (max joint depth + 2 capsule radii).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    z: np.ndarray
    part: np.ndarray
    z_far: float

    @property
    def mask(self) -> np.ndarray:
        return np.asarray(self.part >= 0)


def camera_rays(camera: Camera) -> np.ndarray:
    """Camera-frame ray directions with unit z through every pixel center, shape (H, W, 3)."""
    k = camera.intrinsic
    if abs(np.linalg.det(k)) < 1e-12:
        raise ProjectionError("camera intrinsic matrix is singular")
    height, width = camera.image_size
    v, u = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")
    y = (v - k[1, 2]) / k[1, 1]
    x = (u - k[0, 2] - k[0, 1] * y) / k[0, 0]
    return np.stack([x, y, np.ones_like(x)], axis=-1)


def capsule_hits(rays: np.ndarray, a: np.ndarray, b: np.ndarray, radius: float) -> np.ndarray:
    """Nearest positive ray parameter where rays from the origin enter the capsule (a, b, radius).

    Since rays have unit z, the parameter equals the camera-frame depth of the hit. Misses are inf.
    """
    d = rays.reshape(-1, 3)
    ba = b - a
    oa = -a
    dd = np.einsum("ij,ij->i", d, d)
    baba = float(ba @ ba)
    bard = d @ ba
    baoa = float(ba @ oa)
    rdoa = d @ oa
    oaoa = float(oa @ oa)

    t = np.full(len(d), np.inf)

    # The capsule is the union of a finite cylinder and two spheres; its entry is the nearest entry.
    if baba > 0:
        qa = baba * dd - bard * bard
        qb = baba * rdoa - baoa * bard
        qc = baba * oaoa - baoa * baoa - radius * radius * baba
        disc = qb * qb - qa * qc
        with np.errstate(divide="ignore", invalid="ignore"):
            body_t = (-qb - np.sqrt(np.maximum(disc, 0.0))) / qa
        y = baoa + body_t * bard
        body = (disc >= 0) & (qa > 1e-12) & (y > 0) & (y < baba) & (body_t > 0)
        t = np.where(body, body_t, t)

    for end in (a, b):
        oc = -end
        cb = d @ oc
        cc = float(oc @ oc) - radius * radius
        disc = cb * cb - dd * cc
        cap_t = (-cb - np.sqrt(np.maximum(disc, 0.0))) / dd
        cap = (disc >= 0) & (cap_t > 0) & (cap_t < t)
        t = np.where(cap, cap_t, t)

    return t.reshape(rays.shape[:-1])


def slab_hits(rays: np.ndarray, points: np.ndarray, thickness: float) -> np.ndarray:
    """Hits on the camera-facing side of a flat slab spanning the convex hull of `points` (camera frame).

    Returns inf everywhere when the points span no area.
    """
    d = rays.reshape(-1, 3)
    m = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - m)
    normal, e1, e2 = vt[2], vt[0], vt[1]
    if normal @ (-m) < 0:
        normal = -normal
    front = m + normal * (thickness / 2.0)

    hull = convex_hull(np.stack([(points - m) @ e1, (points - m) @ e2], axis=1))
    t = np.full(len(d), np.inf)
    if len(hull) < 3:
        return t.reshape(rays.shape[:-1])

    denom = d @ normal
    with np.errstate(divide="ignore", invalid="ignore"):
        plane_t = (front @ normal) / denom
    hit = plane_t[:, None] * d - front
    s1, s2 = hit @ e1, hit @ e2
    inside = np.ones(len(d), dtype=bool)
    for k in range(len(hull)):
        p, q = hull[k], hull[(k + 1) % len(hull)]
        inside &= (q[0] - p[0]) * (s2 - p[1]) - (q[1] - p[1]) * (s1 - p[0]) >= 0
    valid = inside & (np.abs(denom) > 1e-12) & (plane_t > 0)
    return np.where(valid, plane_t, t).reshape(rays.shape[:-1])


def hand_primitives(joints_cam: np.ndarray) -> List[Tuple[int, np.ndarray, np.ndarray]]:
    """Capsule segments (part id, start, end): 3 per finger plus wrist-to-base palm capsules."""
    segments = []
    for finger, chain in enumerate(FINGER_JOINTS):
        for a, b in zip(chain[:-1], chain[1:], strict=True):
            segments.append((finger, joints_cam[a], joints_cam[b]))
    for base in FINGER_BASES:
        segments.append((PALM_PART, joints_cam[WRIST], joints_cam[base]))
    return segments


def rasterize_hand(
    pose: Pose3D, camera: Camera, capsule_radius: float = 8.0, palm_thickness: float = 20.0
) -> HandRaster:
    """Ray-cast the capsule hand model into a z-buffer and part-id map."""
    rays = camera_rays(camera)
    joints_cam = camera.to_camera_frame(pose.joints)
    z = np.full(rays.shape[:-1], np.inf)
    part = np.full(rays.shape[:-1], -1, dtype=np.int8)

    for part_id, a, b in hand_primitives(joints_cam):
        t = capsule_hits(rays, a, b, capsule_radius)
        closer = t < z
        z = np.where(closer, t, z)
        part = np.where(closer, np.int8(part_id), part)

    t = slab_hits(rays, joints_cam[[WRIST, *FINGER_BASES]], palm_thickness)
    closer = t < z
    z = np.where(closer, t, z)
    part = np.where(closer, np.int8(PALM_PART), part)

    z_far = float(camera_depths(pose, camera).max()) + 2.0 * capsule_radius
    return HandRaster(z=z, part=part, z_far=z_far)


def depth_from_raster(raster: HandRaster) -> DepthMap:
    """Normalize a z-buffer to inverse depth in [0, 1]: nearest hit 1, background 0."""
    z = raster.z
    hits = np.isfinite(z)
    pixels = np.zeros(z.shape, dtype=np.float64)
    if hits.any():
        z_near = float(z[hits].min())
        span = max(raster.z_far - z_near, 1e-9)
        pixels[hits] = np.clip((raster.z_far - z[hits]) / span, MIN_FOREGROUND, 1.0)
    return DepthMap(pixels=pixels)


def synthetic_depth_oracle(
    pose: Pose3D, camera: Camera, capsule_radius: float = 8.0, palm_thickness: float = 20.0
) -> DepthMap:
    """Render the oracle depth map of a pose: capsules per finger segment, a convex palm slab.

    Raises:
        ProjectionError: If the camera intrinsic matrix is singular.
    """
    return depth_from_raster(rasterize_hand(pose, camera, capsule_radius, palm_thickness))
