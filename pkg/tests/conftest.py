# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

from pathlib import Path
from typing import List

import numpy as np
import pytest

from coreason_mmhand.data import Dataset, generate_toy_samples, make_toy_dataset, random_pose
from coreason_mmhand.pose import Camera, Pose3D
from coreason_mmhand.schemas import (
    CameraConfig,
    CurriculumConfig,
    DepthGenConfig,
    GanTrainConfig,
    GeneratorConfig,
    HpmConfig,
    RunConfig,
)


@pytest.fixture
def camera() -> Camera:
    """The 64 x 64 toy camera: identity rotation at the origin, principal point at the image center."""
    return CameraConfig.for_image_size(64).build()


@pytest.fixture
def small_camera() -> Camera:
    return CameraConfig.for_image_size(16).build()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def toy_poses() -> List[Pose3D]:
    generator = np.random.default_rng(0)
    return [random_pose(generator) for _ in range(24)]


@pytest.fixture(scope="session")
def tiny_dataset() -> Dataset:
    """Eight 16 x 16 toy samples, shared read-only across the session."""
    return generate_toy_samples(8, seed=3, size=16)


@pytest.fixture
def toy_dir(tmp_path: Path) -> Path:
    out = tmp_path / "toy"
    make_toy_dataset(4, seed=11, out_dir=out, size=16)
    return out


@pytest.fixture
def tiny_depth_config() -> DepthGenConfig:
    return DepthGenConfig(
        input_size=16, base_channels=4, levels=2, batch_size=4, epochs=1, estimator_epochs=1, heatmap_sigma=1.0
    )


@pytest.fixture
def tiny_hpm_config() -> HpmConfig:
    return HpmConfig(input_size=16, trunk_channels=8, stage_channels=8, num_stages=6, stride=4, batch_size=4, epochs=1)


@pytest.fixture
def tiny_generator_config() -> GeneratorConfig:
    return GeneratorConfig(num_blocks=1, image_size=16, base_channels=8, code_channels=8, decoder_depth=2)


@pytest.fixture
def tiny_gan_config() -> GanTrainConfig:
    return GanTrainConfig(batch_size=2, steps=2, disc_channels=8, checkpoint_every=1, pose_heatmap_sigma=1.0)


@pytest.fixture
def tiny_run_config(
    tiny_depth_config: DepthGenConfig,
    tiny_hpm_config: HpmConfig,
    tiny_generator_config: GeneratorConfig,
    tiny_gan_config: GanTrainConfig,
) -> RunConfig:
    """Every component at 16 x 16 with one epoch or two steps of training."""
    return RunConfig(
        image_size=16,
        camera=CameraConfig.for_image_size(16),
        depth=tiny_depth_config,
        hpm=tiny_hpm_config,
        generator=tiny_generator_config,
        gan=tiny_gan_config,
        curriculum=CurriculumConfig(num_pairs=4),
    )
