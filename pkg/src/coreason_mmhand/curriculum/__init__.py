# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Geometry-based curriculum training and nearest-pose source selection."""

from coreason_mmhand.curriculum.analysis import CorrelationReport, epe_distance_correlation, fit_parabola
from coreason_mmhand.curriculum.schedule import (
    CurriculumSchedule,
    build_pairs,
    epoch_iter,
    epoch_seed,
    sample_index_pairs,
)
from coreason_mmhand.curriculum.search import VantagePointTree, nearest_by_scan, nearest_source

__all__ = [
    "CorrelationReport",
    "CurriculumSchedule",
    "VantagePointTree",
    "build_pairs",
    "epe_distance_correlation",
    "epoch_iter",
    "epoch_seed",
    "fit_parabola",
    "nearest_by_scan",
    "nearest_source",
    "sample_index_pairs",
]
