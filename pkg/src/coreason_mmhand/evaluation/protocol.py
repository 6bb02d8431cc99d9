# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Reduced-training-set augmentation and the downstream estimator experiment.

In "replace" mode a fraction of the training set is kept; every held-out sample is rebuilt from its
target pose by the generator, using the retained sample with the nearest pose (or a random one) as the
appearance source. In "extend" mode the full real set is kept and extra target poses are synthesized.
"""

import math
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import anyio
import numpy as np
import pyarrow as pa
from pydantic import BaseModel, ConfigDict, Field

from coreason_mmhand.config import settings
from coreason_mmhand.curriculum.search import VantagePointTree, nearest_by_scan
from coreason_mmhand.data.dataset import Dataset, HandSample
from coreason_mmhand.evaluation.metrics import epe
from coreason_mmhand.exceptions import DatasetError, MMHandValidationError
from coreason_mmhand.generator.pipeline import MMHand, generator_forward
from coreason_mmhand.hpm.inference import estimate_pose, root_camera_depth
from coreason_mmhand.hpm.training import train_hpm3d_on_dataset
from coreason_mmhand.pose.core import identity_distance, identity_matrix, pose_identity
from coreason_mmhand.pose.types import Camera, Pose3D
from coreason_mmhand.schemas import HpmConfig, SplitSpec
from coreason_mmhand.utils.logger import logger

GenerateFn = Callable[[HandSample, Pose3D, Camera], np.ndarray]
Mode = Literal["replace", "extend"]
SourceSelection = Literal["nearest", "random"]


class Provenance(BaseModel):
    """Origin of a synthesized sample."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    target_index: int = Field(..., description="Position of the synthesized sample in the augmented set.")
    source_index: int = Field(..., description="Index of the real appearance source in the input dataset.")
    distance: float = Field(..., ge=0.0, le=0.5, description="Pose distance between source and target.")


class AugmentedSet(BaseModel):
    """Real samples plus synthesized ones, in target-index order.

    Attributes:
        dataset (Dataset): Augmented samples; synthesized ones carry a provenance dict.
        real_indices (List[int]): Input indices kept as real samples.
        synthesized (List[Provenance]): One entry per synthesized sample, ascending by target index.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dataset: Dataset
    real_indices: List[int]
    synthesized: List[Provenance]

    def provenance_table(self) -> pa.Table:
        return pa.table(
            {
                "target_index": pa.array([p.target_index for p in self.synthesized], type=pa.int64()),
                "source_index": pa.array([p.source_index for p in self.synthesized], type=pa.int64()),
                "distance": pa.array([p.distance for p in self.synthesized], type=pa.float64()),
            }
        )


def split_indices(n: int, spec: SplitSpec) -> Tuple[List[int], List[int]]:
    """Seeded split into (retained, held-out) index lists, each ascending.

    Raises:
        DatasetError: If the retained part would be empty.
    """
    keep = int(math.floor(spec.reduction_fraction * n + 0.5))
    if keep == 0:
        raise DatasetError(f"reduction fraction {spec.reduction_fraction} retains no samples out of {n}")
    order = np.random.default_rng(spec.seed).permutation(n)
    return sorted(int(i) for i in order[:keep]), sorted(int(i) for i in order[keep:])


def mmhand_generate_fn(gen: MMHand) -> GenerateFn:
    """Adapter from a trained generator to the augmentation callback."""

    def generate(source: HandSample, pose: Pose3D, camera: Camera) -> np.ndarray:
        return generator_forward(gen, source.image, source.pose, pose, camera)

    return generate


def _choose_sources(
    pool: Sequence[int],
    pool_identities: np.ndarray,
    targets: Sequence[Pose3D],
    selection: SourceSelection,
    seed: int,
    use_vp_tree: bool,
) -> List[Tuple[int, float]]:
    tree = VantagePointTree(pool_identities) if use_vp_tree and selection == "nearest" else None
    rng = np.random.default_rng(seed + 7)
    chosen = []
    for pose in targets:
        query = pose_identity(pose).vec
        if selection == "random":
            k = int(rng.integers(0, len(pool)))
            chosen.append((pool[k], identity_distance(pool_identities[k], query)))
            continue
        k, d = tree.query(query) if tree is not None else nearest_by_scan(query, pool_identities)
        chosen.append((pool[k], d))
    return chosen


async def build_augmented_set_async(
    dataset: Dataset,
    spec: SplitSpec,
    generate: GenerateFn,
    mode: Mode = "replace",
    source_selection: SourceSelection = "nearest",
    extra_targets: Optional[Sequence[Tuple[Pose3D, Camera]]] = None,
    use_vp_tree: bool = False,
) -> AugmentedSet:
    """Async core of `build_augmented_set`: generation runs in worker threads capped by NUM_THREADS."""
    if mode == "replace":
        retained, held_out = split_indices(len(dataset), spec)
        targets = [(i, dataset[i].pose, dataset[i].camera) for i in held_out]
    elif mode == "extend":
        if len(dataset) == 0:
            raise DatasetError("extend mode needs a non-empty real set")
        retained = list(range(len(dataset)))
        extras = list(extra_targets or [])
        targets = [(len(dataset) + j, pose, camera) for j, (pose, camera) in enumerate(extras)]
    else:
        raise MMHandValidationError(f"unknown augmentation mode {mode!r}")

    identities = identity_matrix([dataset[i].pose for i in retained])
    sources = _choose_sources(
        retained, identities, [t[1] for t in targets], source_selection, spec.seed, use_vp_tree
    )
    results: Dict[int, HandSample] = {}
    limiter = anyio.CapacityLimiter(settings.worker_count())

    async def synthesize(position: int, pose: Pose3D, camera: Camera, source_index: int, distance: float) -> None:
        source = dataset[source_index]
        image = await anyio.to_thread.run_sync(generate, source, pose, camera, limiter=limiter)
        reference = dataset[position] if position < len(dataset) else None
        results[position] = HandSample(
            image=np.clip(image, 0.0, 1.0),
            pose=pose,
            camera=camera,
            mask=reference.mask if reference is not None else None,
            depth=reference.depth if reference is not None else None,
            provenance={"source_index": source_index, "distance": distance},
        )

    async with anyio.create_task_group() as tg:
        for (position, pose, camera), (source_index, distance) in zip(targets, sources, strict=True):
            tg.start_soon(synthesize, position, pose, camera, source_index, distance)

    synthesized = [
        Provenance(target_index=position, source_index=src, distance=d)
        for (position, _, _), (src, d) in zip(targets, sources, strict=True)
    ]
    samples: Dict[int, HandSample] = {i: dataset[i] for i in retained}
    samples.update(results)
    ordered = [samples[k] for k in sorted(samples)]
    logger.info(
        f"Augmented set built: {len(retained)} real + {len(synthesized)} synthesized",
        mode=mode,
        source_selection=source_selection,
    )
    return AugmentedSet(dataset=Dataset(ordered), real_indices=retained, synthesized=synthesized)


def build_augmented_set(
    dataset: Dataset,
    spec: SplitSpec,
    generate: GenerateFn,
    mode: Mode = "replace",
    source_selection: SourceSelection = "nearest",
    extra_targets: Optional[Sequence[Tuple[Pose3D, Camera]]] = None,
    use_vp_tree: bool = False,
) -> AugmentedSet:
    """Build the augmented training set.

    Args:
        dataset: Full real training set.
        spec: Retained fraction and split seed.
        generate: (source sample, target pose, camera) -> image in [0, 1].
        mode: "replace" keeps a fraction and resynthesizes the rest; "extend" keeps everything and
            synthesizes `extra_targets`.
        source_selection: "nearest" pose match or a seeded "random" retained sample.
        extra_targets: Target (pose, camera) pairs for "extend" mode.
        use_vp_tree: Answer nearest-pose queries with the vantage-point tree.

    Returns:
        AugmentedSet: In "replace" mode its size equals the input size.

    Raises:
        DatasetError: If the split retains no samples.
    """
    return anyio.run(
        build_augmented_set_async, dataset, spec, generate, mode, source_selection, extra_targets, use_vp_tree
    )


class AugmentationResult(BaseModel):
    """Test EPE (mm) of estimators trained on the reduced set and on the augmented set."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    reduction_fraction: float
    reduced_epe: float
    augmented_epe: float
    reduced_size: int
    augmented_size: int


def held_out_epe(model_dataset: Dataset, estimator_config: HpmConfig, test: Dataset) -> float:
    """Train an estimator on `model_dataset` and report its 3D EPE on `test` with known root depths."""
    model = train_hpm3d_on_dataset(model_dataset, estimator_config)
    predictions = [
        estimate_pose(model, s.image, s.camera, root_camera_depth(s.pose, s.camera, estimator_config)) for s in test
    ]
    return epe(predictions, test.poses())


def run_augmentation_experiment(
    train: Dataset, test: Dataset, generate: GenerateFn, spec: SplitSpec, estimator_config: HpmConfig
) -> AugmentationResult:
    """Compare estimator accuracy when trained on the reduced set alone versus the augmented set."""
    augmented = build_augmented_set(train, spec, generate)
    reduced = train.subset(augmented.real_indices)
    reduced_epe = held_out_epe(reduced, estimator_config, test)
    augmented_epe = held_out_epe(augmented.dataset, estimator_config, test)
    logger.info(f"Augmentation experiment: reduced EPE {reduced_epe:.3f} mm, augmented EPE {augmented_epe:.3f} mm")
    return AugmentationResult(
        reduction_fraction=spec.reduction_fraction,
        reduced_epe=reduced_epe,
        augmented_epe=augmented_epe,
        reduced_size=len(reduced),
        augmented_size=len(augmented.dataset),
    )
