# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Seeding and device helpers shared by every training loop."""

import random

import numpy as np
import torch

from coreason_mmhand.config import settings


def seed_everything(seed: int) -> torch.Generator:
    """Seed python, numpy and torch; return a dedicated torch generator for data shuffling."""
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)
    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator


def torch_device() -> torch.device:
    return torch.device(settings.DEVICE)
