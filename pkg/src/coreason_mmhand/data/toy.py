# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Procedural toy hands: articulated skeletons rendered with the capsule rasterizer.

Bone lengths are fixed; only joint angles, the global rotation and the placement in front of the camera vary.
"""

from pathlib import Path
from typing import Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation

from coreason_mmhand.data.dataset import Dataset, HandSample
from coreason_mmhand.data.io import save_dataset
from coreason_mmhand.depth.oracle import depth_from_raster, rasterize_hand
from coreason_mmhand.exceptions import MMHandValidationError
from coreason_mmhand.pose.types import FINGER_JOINTS, NUM_JOINTS, Camera, Pose3D
from coreason_mmhand.schemas import CameraConfig
from coreason_mmhand.utils.logger import logger

# Wrist-to-base offsets in the hand frame (mm), thumb..pinky. The palm lies in z = 0, fingers point along +y.
FINGER_BASES_MM: Tuple[Tuple[float, float, float], ...] = (
    (-38.0, 32.0, 0.0),
    (-20.0, 88.0, 0.0),
    (0.0, 92.0, 0.0),
    (18.0, 86.0, 0.0),
    (34.0, 78.0, 0.0),
)

# Proximal, middle and distal phalanx lengths (mm), thumb..pinky.
PHALANX_MM: Tuple[Tuple[float, float, float], ...] = (
    (40.0, 32.0, 28.0),
    (42.0, 26.0, 22.0),
    (45.0, 30.0, 24.0),
    (42.0, 28.0, 23.0),
    (34.0, 22.0, 20.0),
)

# Flexion ranges (degrees) of the three finger joints, base to tip, and the abduction range.
FLEXION_DEG: Tuple[Tuple[float, float], ...] = ((0.0, 80.0), (0.0, 90.0), (0.0, 60.0))
ABDUCTION_DEG = 15.0

HAND_DISTANCE_MM = 500.0
SKIN_RGB = np.array([0.87, 0.67, 0.55])
PALM_NORMAL = np.array([0.0, 0.0, 1.0])


def articulate(flexion: np.ndarray, abduction: np.ndarray) -> np.ndarray:
    """Hand-frame joints (21 x 3) for per-finger flexion (5 x 3, radians) and abduction (5, radians)."""
    joints = np.zeros((NUM_JOINTS, 3))
    for finger, chain in enumerate(FINGER_JOINTS):
        base = np.array(FINGER_BASES_MM[finger])
        direction = Rotation.from_rotvec(abduction[finger] * PALM_NORMAL).apply(base / np.linalg.norm(base))
        axis = np.cross(direction, PALM_NORMAL)
        axis /= np.linalg.norm(axis)
        joints[chain[0]] = base
        bend = 0.0
        for k, length in enumerate(PHALANX_MM[finger]):
            bend += flexion[finger, k]
            segment = Rotation.from_rotvec(bend * axis).apply(direction)
            joints[chain[k + 1]] = joints[chain[k]] + length * segment
    return joints


def random_pose(rng: np.random.Generator) -> Pose3D:
    """Sample joint angles, a uniform global rotation and a jittered placement about 500 mm ahead."""
    lows = np.radians([lo for lo, _ in FLEXION_DEG])
    highs = np.radians([hi for _, hi in FLEXION_DEG])
    flexion = rng.uniform(lows, highs, size=(5, 3))
    abduction = rng.uniform(-np.radians(ABDUCTION_DEG), np.radians(ABDUCTION_DEG), size=5)
    local = articulate(flexion, abduction)
    rotation = Rotation.random(None, rng)
    world = rotation.apply(local - local.mean(axis=0))
    offset = np.array([0.0, 0.0, HAND_DISTANCE_MM]) + rng.uniform([-10.0, -10.0, -20.0], [10.0, 10.0, 20.0])
    return Pose3D(joints=world + offset)


def render_sample(
    pose: Pose3D, camera: Camera, background: np.ndarray, capsule_radius: float, palm_thickness: float
) -> HandSample:
    """Flat-shaded image, foreground mask and oracle depth from a single rasterization."""
    raster = rasterize_hand(pose, camera, capsule_radius, palm_thickness)
    depth = depth_from_raster(raster).pixels
    mask = raster.mask
    shade = SKIN_RGB[None, None, :] * (0.7 + 0.3 * depth[..., None])
    image = np.where(mask[..., None], shade, background[None, None, :])
    return HandSample(image=image.astype(np.float32), pose=pose, camera=camera, mask=mask, depth=depth)


def generate_toy_samples(
    n: int, seed: int, size: int = 64, capsule_radius: float = 8.0, palm_thickness: float = 20.0
) -> Dataset:
    """Build `n` toy samples in memory.

    Raises:
        MMHandValidationError: If `n` < 1 or `size` < 1.
    """
    if n < 1:
        raise MMHandValidationError(f"toy dataset needs n >= 1, got {n}")
    if size < 1:
        raise MMHandValidationError(f"toy image size must be positive, got {size}")
    rng = np.random.default_rng(seed)
    camera = CameraConfig.for_image_size(size).build()
    samples = []
    for _ in range(n):
        pose = random_pose(rng)
        background = rng.uniform(0.0, 0.35, size=3)
        samples.append(render_sample(pose, camera, background, capsule_radius, palm_thickness))
    return Dataset(samples)


def make_toy_dataset(
    n: int,
    seed: int,
    out_dir: Union[str, Path],
    size: int = 64,
    capsule_radius: float = 8.0,
    palm_thickness: float = 20.0,
) -> Path:
    """Generate a toy dataset and write it under `out_dir`; returns the manifest path."""
    dataset = generate_toy_samples(n, seed, size, capsule_radius, palm_thickness)
    logger.info(f"Rendered {n} toy hands at {size}x{size} (seed {seed})")
    return save_dataset(dataset, out_dir)
