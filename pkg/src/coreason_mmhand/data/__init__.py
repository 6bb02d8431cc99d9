# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Hand datasets: in-memory records, manifest I/O and the procedural toy generator."""

from coreason_mmhand.data.dataset import Dataset, HandSample
from coreason_mmhand.data.io import load_dataset, load_dataset_async, load_manifest, save_dataset
from coreason_mmhand.data.toy import generate_toy_samples, make_toy_dataset, random_pose

__all__ = [
    "Dataset",
    "HandSample",
    "generate_toy_samples",
    "load_dataset",
    "load_dataset_async",
    "load_manifest",
    "make_toy_dataset",
    "random_pose",
    "save_dataset",
]
