# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Configuration management for Coreason MMHand."""

import os
from typing import List

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Centralized runtime configuration for the Coreason MMHand toolkit.

    Reads configuration from environment variables prefixed with 'MMHAND_'.
    Also supports reading from a '.env' file. Model and training hyperparameters live in
    the JSON run configuration (see `coreason_mmhand.schemas.RunConfig`), not here.

    Attributes:
        LOG_LEVEL (str): Logging level (default: "INFO").
        LOG_DIR (str): Directory for the JSON log sink (default: "logs").
        NUM_THREADS (int): Worker cap for image decoding and sample generation; 0 means auto.
        DEVICE (str): Torch device for keypoint-estimator training (default: "cpu").
        ONNX_PROVIDERS (List[str]): Preferred ONNX Runtime execution providers, CPU always appended.
        CHECKPOINT_VERSION (int): Checkpoint format version written by this build.
    """

    model_config = SettingsConfigDict(env_prefix="MMHAND_", env_file=".env", env_file_encoding="utf-8", extra="ignore")

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"

    # Parallelism
    NUM_THREADS: int = 0

    # Torch
    DEVICE: str = "cpu"

    # Optional ONNX classifier for inception scores, in priority order
    ONNX_PROVIDERS: List[str] = ["CUDAExecutionProvider", "OpenVINOExecutionProvider", "CPUExecutionProvider"]

    # Persistence
    CHECKPOINT_VERSION: int = 1

    def worker_count(self) -> int:
        """Resolve NUM_THREADS into a concrete worker count (0 means one per CPU)."""
        if self.NUM_THREADS > 0:
            return self.NUM_THREADS
        return max(1, os.cpu_count() or 1)


settings = Settings()
