# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Geometry-based curriculum: random (source, target) pairs ordered from easiest to hardest."""

from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from coreason_mmhand.data.dataset import Dataset
from coreason_mmhand.exceptions import DatasetError
from coreason_mmhand.pose.core import ORTHOGRAPHIC, Projector, identity_distance, identity_matrix
from coreason_mmhand.pose.types import WRIST, Pose3D
from coreason_mmhand.schemas import TrainingPair

PoseSource = Union[Dataset, Sequence[Pose3D]]


class CurriculumSchedule(BaseModel):
    """Pairs in feeding order.

    Attributes:
        pairs (List[TrainingPair]): Ascending by distance when `ordered`.
        seed (int): Seed the pairs were drawn with.
        ordered (bool): False for the shuffled (curriculum disabled) variant.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    pairs: List[TrainingPair] = Field(default_factory=list)
    seed: int = 0
    ordered: bool = True

    @model_validator(mode="after")
    def _check_order(self) -> "CurriculumSchedule":
        if self.ordered:
            distances = [p.distance for p in self.pairs]
            if any(b < a for a, b in zip(distances, distances[1:])):
                raise ValueError("curriculum pairs must be sorted by ascending distance")
        return self

    def __len__(self) -> int:
        return len(self.pairs)


def _poses(source: PoseSource) -> List[Pose3D]:
    return source.poses() if isinstance(source, Dataset) else list(source)


def sample_index_pairs(n: int, num_pairs: int, seed: int) -> List[Tuple[int, int]]:
    """Uniform (source, target) index pairs over `n` samples with source != target."""
    if n < 2:
        raise DatasetError(f"pairing needs at least 2 samples, got {n}")
    rng = np.random.default_rng(seed)
    src = rng.integers(0, n, size=num_pairs)
    tgt = rng.integers(0, n - 1, size=num_pairs)
    tgt = tgt + (tgt >= src)
    return [(int(s), int(t)) for s, t in zip(src, tgt)]


def build_pairs(
    dataset: PoseSource,
    num_pairs: Optional[int] = None,
    seed: int = 0,
    enabled: bool = True,
    projector: Projector = ORTHOGRAPHIC,
    palm_index: int = WRIST,
) -> CurriculumSchedule:
    """Draw random pairs and annotate each with its pose distance.

    Args:
        dataset: Dataset or plain pose list.
        num_pairs: Pairs to draw; defaults to the dataset size.
        seed: Pairing seed.
        enabled: Sort by (distance, source, target) when True, otherwise shuffle with `seed`.
        projector: Projection used for the hull term of the pose identity.
        palm_index: Joint used as the palm.

    Raises:
        DatasetError: If the dataset has fewer than 2 samples.
        DegeneratePoseError: If a paired pose has a zero identity vector.
    """
    poses = _poses(dataset)
    count = len(poses) if num_pairs is None else num_pairs
    index_pairs = sample_index_pairs(len(poses), count, seed)
    identities = identity_matrix(poses, projector, palm_index)
    pairs = [
        TrainingPair(source_index=s, target_index=t, distance=identity_distance(identities[s], identities[t]))
        for s, t in index_pairs
    ]
    if enabled:
        pairs.sort(key=lambda p: (p.distance, p.source_index, p.target_index))
    else:
        order = np.random.default_rng(seed + 1).permutation(len(pairs))
        pairs = [pairs[i] for i in order]
    return CurriculumSchedule(pairs=pairs, seed=seed, ordered=enabled)


def epoch_seed(seed: int, epoch: int) -> int:
    """Independent pairing seed for each epoch."""
    return int(np.random.SeedSequence([seed, epoch]).generate_state(1)[0])


def epoch_iter(schedule: CurriculumSchedule, batch_size: int) -> Iterator[List[TrainingPair]]:
    """Consecutive batches of `batch_size` pairs in schedule order; the last batch may be shorter."""
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    pairs = schedule.pairs
    for start in range(0, len(pairs), batch_size):
        yield pairs[start : start + batch_size]
