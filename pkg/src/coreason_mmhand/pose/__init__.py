# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""
Pose representations and the pose-distance metric.
"""

from .core import (
    ORTHOGRAPHIC,
    OrthographicProjector,
    PerspectiveProjector,
    Projector,
    backproject,
    camera_depths,
    identity_distance,
    identity_matrix,
    orthographic_project,
    pose_distance,
    pose_identity,
    project,
    project_points,
    render_heatmaps,
)
from .types import (
    FINGER_BASES,
    FINGER_JOINTS,
    FINGER_TIPS,
    JOINT_NAMES,
    NUM_JOINTS,
    SKELETON_EDGES,
    WRIST,
    Camera,
    HeatmapStack,
    Pose2D,
    Pose3D,
    PoseIdentity,
)

__all__ = [
    "FINGER_BASES",
    "FINGER_JOINTS",
    "FINGER_TIPS",
    "JOINT_NAMES",
    "NUM_JOINTS",
    "ORTHOGRAPHIC",
    "SKELETON_EDGES",
    "WRIST",
    "Camera",
    "HeatmapStack",
    "OrthographicProjector",
    "PerspectiveProjector",
    "Pose2D",
    "Pose3D",
    "PoseIdentity",
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
