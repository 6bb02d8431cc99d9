# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Adversarial training of the image generator.

Each step runs one discriminator update that maximizes the adversarial objective, then one generator
update on the joint objective. Batches come from the curriculum in easy-to-hard order.
"""

import math
from collections import deque
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pyarrow as pa
import torch

from coreason_mmhand.curriculum.schedule import build_pairs, epoch_iter, epoch_seed
from coreason_mmhand.data.dataset import Dataset
from coreason_mmhand.exceptions import DatasetError, NonFiniteLossError
from coreason_mmhand.gan.losses import adversarial_loss, appearance_loss, joint_loss, pose_loss
from coreason_mmhand.gan.networks import DiscriminatorPair, FeatureExtractor
from coreason_mmhand.generator.model import MMHandGenerator
from coreason_mmhand.generator.pipeline import Embedding, condition_tensors, image_to_signed
from coreason_mmhand.hpm.inference import heatmap_targets, relative_depths
from coreason_mmhand.hpm.models import Hpm3D, freeze
from coreason_mmhand.layers import count_parameters
from coreason_mmhand.pose.core import project, render_heatmaps
from coreason_mmhand.schemas import CurriculumConfig, GanTrainConfig, LossRecord, LossWeights, TrainingPair
from coreason_mmhand.utils.io import write_csv
from coreason_mmhand.utils.logger import logger
from coreason_mmhand.utils.runtime import seed_everything

LOSS_COLUMNS = ("step", "L_adv", "L_1", "L_p", "L_xy", "L_z", "total")
LOSS_SCHEMA = pa.schema(
    [pa.field("step", pa.int64())] + [pa.field(name, pa.float64()) for name in LOSS_COLUMNS[1:]]
)


class GanBatch(NamedTuple):
    """Stacked training tensors for a list of pairs; images in [-1, 1]."""

    source: torch.Tensor
    target: torch.Tensor
    contour_s: torch.Tensor
    contour_t: torch.Tensor
    depth_s: torch.Tensor
    depth_t: torch.Tensor
    pose_maps: torch.Tensor
    keypoint_maps: Optional[torch.Tensor]
    rel_depths: Optional[torch.Tensor]

    def conditions(self) -> Tuple[torch.Tensor, ...]:
        return self.source, self.contour_s, self.contour_t, self.depth_s, self.depth_t


def make_batch(
    dataset: Dataset,
    embeddings: Sequence[Embedding],
    pairs: Sequence[TrainingPair],
    pose_sigma: float,
    estimator: Optional[Hpm3D] = None,
) -> GanBatch:
    """Assemble a batch from dataset samples and their precomputed (contour, depth) embeddings."""
    if not pairs:
        raise DatasetError("cannot build an empty batch")
    columns: List[List[torch.Tensor]] = [[] for _ in range(7)]
    kp_maps: List[torch.Tensor] = []
    rel: List[torch.Tensor] = []
    for pair in pairs:
        source, target = dataset[pair.source_index], dataset[pair.target_index]
        image, c_s, c_t, d_s, d_t = condition_tensors(
            source.image, embeddings[pair.source_index], embeddings[pair.target_index]
        )
        keypoints = project(target.pose, target.camera)
        size = target.image.shape[:2]
        maps = render_heatmaps(keypoints, (int(size[0]), int(size[1])), pose_sigma).maps.astype(np.float32)
        for column, value in zip(
            columns, (image, image_to_signed(target.image), c_s, c_t, d_s, d_t, torch.from_numpy(maps))
        ):
            column.append(value)
        if estimator is not None:
            kp_maps.append(torch.from_numpy(heatmap_targets(keypoints, estimator.config)))
            z = relative_depths(target.pose, target.camera, estimator.config)
            rel.append(torch.from_numpy(z.astype(np.float32)))
    stacked = [torch.stack(c) for c in columns]
    return GanBatch(
        *stacked,
        keypoint_maps=torch.stack(kp_maps) if kp_maps else None,
        rel_depths=torch.stack(rel) if rel else None,
    )


class LossLog:
    """Buffers per-step loss records as Arrow record batches and emits the loss-curve CSV."""

    def __init__(self, maxlen: Optional[int] = None) -> None:
        self._buffer: deque[pa.RecordBatch] = deque(maxlen=maxlen)
        self.records: List[LossRecord] = []

    def append(self, record: LossRecord) -> None:
        values = record.model_dump()
        arrays = [pa.array([values[name]], type=LOSS_SCHEMA.field(name).type) for name in LOSS_COLUMNS]
        self._buffer.append(pa.RecordBatch.from_arrays(arrays, schema=LOSS_SCHEMA))
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def table(self) -> pa.Table:
        return pa.Table.from_batches(list(self._buffer), schema=LOSS_SCHEMA)

    def write_csv(self, path: Path) -> None:
        write_csv(self.table(), path)
        logger.info(f"Wrote loss curve with {len(self._buffer)} rows to {path}")


class GanTrainer:
    """Owns the generator, both discriminators and their optimizers for one training run.

    Attributes:
        generator (MMHandGenerator): Trained network.
        discriminators (DiscriminatorPair): Appearance and pose discriminators.
        extractor (FeatureExtractor): Frozen perceptual feature map.
        estimator (Optional[Hpm3D]): Frozen pose estimator for the pose-consistency term; the term is 0 when None.
    """

    def __init__(
        self,
        generator: MMHandGenerator,
        config: GanTrainConfig,
        weights: LossWeights,
        estimator: Optional[Hpm3D] = None,
        extractor: Optional[FeatureExtractor] = None,
    ) -> None:
        seed_everything(config.seed)
        self.generator = generator
        self.config = config
        self.weights = weights
        channels = generator.config.image_channels
        self.discriminators = DiscriminatorPair(channels, config.disc_channels)
        self.extractor = extractor or FeatureExtractor(
            channels, config.feature_layers, config.feature_tap, config.feature_seed, config.feature_weights
        )
        self.estimator = freeze(estimator) if estimator is not None else None
        betas = (config.beta1, config.beta2)
        self.opt_g = torch.optim.Adam(generator.parameters(), lr=config.learning_rate, betas=betas)
        self.opt_d = torch.optim.Adam(self.discriminators.parameters(), lr=config.learning_rate, betas=betas)
        logger.info(
            "GanTrainer initialized",
            generator_parameters=count_parameters(generator),
            discriminator_parameters=count_parameters(self.discriminators),
            pose_term=estimator is not None,
        )

    def discriminator_loss(self, batch: GanBatch, fake: torch.Tensor) -> torch.Tensor:
        """Negated adversarial objective (discriminators minimize this)."""
        return -adversarial_loss(self.discriminators, batch.source, batch.target, fake, batch.pose_maps)

    def discriminator_step(self, batch: GanBatch) -> float:
        self.generator.train()
        with torch.no_grad():
            fake = self.generator(*batch.conditions())
        self.opt_d.zero_grad()
        loss = self.discriminator_loss(batch, fake)
        if not torch.isfinite(loss):
            raise NonFiniteLossError("discriminator loss is not finite", record={"L_disc": float(loss)})
        loss.backward()
        self.opt_d.step()
        return float(loss.detach())

    def generator_terms(self, batch: GanBatch) -> Tuple[torch.Tensor, Dict[str, torch.Tensor]]:
        """Joint objective on a batch and its unweighted terms (L_adv, L_1, L_p, L_xy, L_z)."""
        fake = self.generator(*batch.conditions())
        l_adv = adversarial_loss(self.discriminators, batch.source, batch.target, fake, batch.pose_maps)
        _, l_1, l_p = appearance_loss(fake, batch.target, self.extractor, self.weights)
        zero = fake.new_zeros(())
        l_xy, l_z = zero, zero
        if self.estimator is not None and batch.keypoint_maps is not None and batch.rel_depths is not None:
            stages, depths = self.estimator((fake + 1.0) / 2.0)
            _, l_xy, l_z = pose_loss(
                stages,
                batch.keypoint_maps,
                depths,
                batch.rel_depths,
                self.weights,
                num_stages=self.estimator.config.num_stages,
            )
        joint = joint_loss(l_adv, l_1, l_p, l_xy, l_z, self.weights)
        return joint.total, {"L_adv": l_adv, "L_1": l_1, "L_p": l_p, "L_xy": l_xy, "L_z": l_z}

    def generator_step(self, batch: GanBatch, step: int = 0, disc_loss: float = 0.0) -> LossRecord:
        self.generator.train()
        self.opt_g.zero_grad()
        total, terms = self.generator_terms(batch)
        values = {k: float(v.detach()) for k, v in terms.items()}
        record = LossRecord(step=step, total=float(total.detach()), L_disc=disc_loss, **values)
        if not all(math.isfinite(v) for v in (*values.values(), record.total)):
            logger.error(f"Non-finite generator loss at step {step}: {record.model_dump()}")
            raise NonFiniteLossError("generator loss is not finite", record=record.model_dump())
        total.backward()
        self.opt_g.step()
        return record

    def train_step(self, batch: GanBatch, step: int = 0) -> LossRecord:
        """One discriminator update then one generator update; returns the step's loss record."""
        disc_loss = self.discriminator_step(batch)
        record = self.generator_step(batch, step, disc_loss)
        logger.debug(f"step {step}: {record.model_dump()}")
        return record


def train_step(trainer: GanTrainer, batch: GanBatch, step: int = 0) -> LossRecord:
    return trainer.train_step(batch, step)


def train_gan(
    trainer: GanTrainer,
    dataset: Dataset,
    embeddings: Sequence[Embedding],
    curriculum: CurriculumConfig,
    steps: Optional[int] = None,
    on_checkpoint: Optional[Callable[[int], None]] = None,
) -> LossLog:
    """Train for `steps` generator updates, re-pairing the dataset every epoch.

    Args:
        trainer: Networks and optimizers.
        dataset: Training samples.
        embeddings: (contour, depth) embedding of every sample, aligned with `dataset`.
        curriculum: Pair count, ordering and seed policy.
        steps: Overrides `trainer.config.steps`.
        on_checkpoint: Called with the step number every `checkpoint_every` steps and after the last step.

    Returns:
        LossLog: One record per step.
    """
    if len(embeddings) != len(dataset):
        raise DatasetError("embeddings must align with the dataset")
    total_steps = steps if steps is not None else trainer.config.steps
    log = LossLog()
    step = 0
    epoch = 0
    logger.info(f"Training generator for {total_steps} steps on {len(dataset)} samples")
    while step < total_steps:
        schedule = build_pairs(
            dataset, curriculum.num_pairs, epoch_seed(trainer.config.seed, epoch), enabled=curriculum.enabled
        )
        for pairs in epoch_iter(schedule, trainer.config.batch_size):
            step += 1
            batch = make_batch(dataset, embeddings, pairs, trainer.config.pose_heatmap_sigma, trainer.estimator)
            log.append(trainer.train_step(batch, step))
            if on_checkpoint is not None and step % trainer.config.checkpoint_every == 0:
                on_checkpoint(step)
            if step >= total_steps:
                break
        epoch += 1
    if on_checkpoint is not None and step % trainer.config.checkpoint_every != 0:
        on_checkpoint(step)
    first, last = log.records[0], log.records[-1]
    logger.info(f"Generator training done: L_1 {first.L_1:.4f} -> {last.L_1:.4f}")
    return log
