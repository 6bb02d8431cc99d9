# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Nearest-pose lookup: an exhaustive scan and an exact vantage-point tree."""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from coreason_mmhand.exceptions import DatasetError
from coreason_mmhand.pose.core import ORTHOGRAPHIC, Projector, identity_distance, identity_matrix, pose_identity
from coreason_mmhand.pose.types import WRIST, Pose3D

# Rounding in arccos near zero is ~1e-8; pruning keeps a wider margin.
PRUNE_SLACK = 1e-6


def nearest_by_scan(query: np.ndarray, identities: np.ndarray) -> Tuple[int, float]:
    """Linear scan; ties resolve to the smallest index."""
    if len(identities) == 0:
        raise DatasetError("nearest-pose pool is empty")
    best_index, best = -1, math.inf
    for i, f in enumerate(identities):
        d = identity_distance(f, query)
        if d < best:
            best_index, best = i, d
    return best_index, best


class _Node:
    __slots__ = ("index", "radius", "inside", "outside")

    def __init__(self, index: int, radius: float, inside: Optional["_Node"], outside: Optional["_Node"]) -> None:
        self.index = index
        self.radius = radius
        self.inside = inside
        self.outside = outside


class VantagePointTree:
    """Exact nearest-neighbour index over pose identity vectors.

    Results equal `nearest_by_scan`, including the smallest-index tie rule: candidates are compared
    by (distance, index) and a subtree is skipped only when the triangle bound excludes it by more
    than `PRUNE_SLACK`.

    Attributes:
        identities (np.ndarray): (N, 7) identity vectors of the pool.
    """

    def __init__(self, identities: np.ndarray) -> None:
        self.identities = np.asarray(identities, dtype=np.float64)
        self._root = self._build(list(range(len(self.identities))))

    def _build(self, indices: List[int]) -> Optional[_Node]:
        if not indices:
            return None
        vantage, rest = indices[0], indices[1:]
        if not rest:
            return _Node(vantage, 0.0, None, None)
        dists = [identity_distance(self.identities[i], self.identities[vantage]) for i in rest]
        radius = float(np.median(dists))
        inside = [i for i, d in zip(rest, dists) if d <= radius]
        outside = [i for i, d in zip(rest, dists) if d > radius]
        return _Node(vantage, radius, self._build(inside), self._build(outside))

    def query(self, query: np.ndarray) -> Tuple[int, float]:
        """Return (index, distance) of the nearest pool entry."""
        if self._root is None:
            raise DatasetError("nearest-pose pool is empty")
        best: List[Tuple[float, int]] = [(math.inf, -1)]
        stack = [self._root]
        while stack:
            node = stack.pop()
            d = identity_distance(self.identities[node.index], query)
            if (d, node.index) < best[0]:
                best[0] = (d, node.index)
            bound = best[0][0] + PRUNE_SLACK
            if node.inside is not None and d - node.radius <= bound:
                stack.append(node.inside)
            if node.outside is not None and node.radius - d <= bound:
                stack.append(node.outside)
        return best[0][1], best[0][0]


def nearest_source(
    target: Pose3D,
    pool: Sequence[Pose3D],
    projector: Projector = ORTHOGRAPHIC,
    palm_index: int = WRIST,
    tree: Optional[VantagePointTree] = None,
) -> Tuple[int, float]:
    """Index and distance of the pool pose closest to `target`; ties go to the smallest index.

    Args:
        target: Pose to match.
        pool: Candidate source poses.
        projector: Projection used for the hull term.
        palm_index: Joint used as the palm.
        tree: Prebuilt tree over `pool`'s identities; exhaustive scan when None.

    Raises:
        DatasetError: If the pool is empty.
    """
    if len(pool) == 0:
        raise DatasetError("nearest-pose pool is empty")
    query = pose_identity(target, projector, palm_index).vec
    if tree is not None:
        return tree.query(query)
    return nearest_by_scan(query, identity_matrix(pool, projector, palm_index))
