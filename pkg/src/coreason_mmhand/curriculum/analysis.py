# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Relationship between generation quality and pose distance."""

from typing import Callable, Dict, List, Tuple

import numpy as np
import pyarrow as pa
from pydantic import BaseModel, ConfigDict
from scipy.stats import spearmanr

from coreason_mmhand.curriculum.schedule import sample_index_pairs
from coreason_mmhand.data.dataset import Dataset, HandSample
from coreason_mmhand.exceptions import MMHandValidationError
from coreason_mmhand.pose.core import identity_distance, identity_matrix, project
from coreason_mmhand.pose.types import Pose2D
from coreason_mmhand.utils.logger import logger

GenerateFn = Callable[[HandSample, HandSample], np.ndarray]
EstimateFn = Callable[[np.ndarray], Pose2D]


class CorrelationReport(BaseModel):
    """Per-pair scatter table with its quadratic fit and rank correlation.

    Attributes:
        table (pa.Table): Columns source, target, distance, epe.
        coefficients (Tuple[float, float, float]): (a, b, c) of epe = a·d² + b·d + c.
        spearman (float): Rank correlation of epe with distance (NaN when either is constant).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    table: pa.Table
    coefficients: Tuple[float, float, float]
    spearman: float


def fit_parabola(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    """Least-squares (a, b, c) for y = a·x² + b·x + c; needs at least 3 points."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise MMHandValidationError("parabola fit needs two equal-length 1D arrays")
    if len(x) < 3:
        raise MMHandValidationError(f"parabola fit needs at least 3 points, got {len(x)}")
    a, b, c = np.polyfit(x, y, 2)
    return float(a), float(b), float(c)


def epe_distance_correlation(
    generate: GenerateFn, estimate: EstimateFn, dataset: Dataset, n_pairs: int, seed: int = 0
) -> CorrelationReport:
    """Generate the target of random pairs and relate 2D keypoint error to pose distance.

    Args:
        generate: (source, target) -> generated target image.
        estimate: Image -> predicted 2D keypoints (a frozen estimator).
        dataset: Samples to pair.
        n_pairs: Number of pairs; at least 3.
        seed: Pairing seed.

    Returns:
        CorrelationReport: Scatter table, fitted coefficients and Spearman correlation.
    """
    if n_pairs < 3:
        raise MMHandValidationError(f"n_pairs must be at least 3 for a parabola fit, got {n_pairs}")
    identities = identity_matrix(dataset.poses())
    rows: Dict[str, List[float]] = {"source": [], "target": [], "distance": [], "epe": []}
    for s, t in sample_index_pairs(len(dataset), n_pairs, seed):
        source, target = dataset[s], dataset[t]
        predicted = estimate(generate(source, target)).keypoints
        truth = project(target.pose, target.camera).keypoints
        rows["source"].append(s)
        rows["target"].append(t)
        rows["distance"].append(identity_distance(identities[s], identities[t]))
        rows["epe"].append(float(np.linalg.norm(predicted - truth, axis=1).mean()))
    distance = np.asarray(rows["distance"])
    epe = np.asarray(rows["epe"])
    coefficients = fit_parabola(distance, epe)
    if np.ptp(distance) == 0 or np.ptp(epe) == 0:
        logger.warning("EPE or distance is constant across pairs; rank correlation undefined")
        rho = float("nan")
    else:
        rho = float(spearmanr(distance, epe).statistic)
    logger.info(f"EPE-distance correlation over {n_pairs} pairs: spearman={rho:.4f}")
    table = pa.table(
        {
            "source": pa.array(rows["source"], type=pa.int64()),
            "target": pa.array(rows["target"], type=pa.int64()),
            "distance": pa.array(distance, type=pa.float64()),
            "epe": pa.array(epe, type=pa.float64()),
        }
    )
    return CorrelationReport(table=table, coefficients=coefficients, spearman=rho)
