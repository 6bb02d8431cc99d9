import math
from typing import Dict, List

import numpy as np
import pytest

from coreason_mmhand.curriculum import (
    CurriculumSchedule,
    VantagePointTree,
    build_pairs,
    epe_distance_correlation,
    epoch_iter,
    epoch_seed,
    fit_parabola,
    nearest_by_scan,
    nearest_source,
    sample_index_pairs,
)
from coreason_mmhand.data import Dataset, HandSample
from coreason_mmhand.exceptions import DatasetError, MMHandValidationError
from coreason_mmhand.pose import Pose2D, Pose3D, identity_matrix, pose_identity, project
from coreason_mmhand.schemas import TrainingPair


def test_index_pairs_never_pair_a_sample_with_itself() -> None:
    pairs = sample_index_pairs(5, 200, seed=4)
    assert len(pairs) == 200
    assert all(s != t for s, t in pairs)
    assert all(0 <= s < 5 and 0 <= t < 5 for s, t in pairs)
    assert pairs == sample_index_pairs(5, 200, seed=4)


def test_index_pairs_need_two_samples() -> None:
    with pytest.raises(DatasetError):
        sample_index_pairs(1, 3, seed=0)


def test_pairs_are_sorted_easy_to_hard(toy_poses: List[Pose3D]) -> None:
    schedule = build_pairs(toy_poses, seed=2)
    distances = [p.distance for p in schedule.pairs]
    assert len(schedule) == len(toy_poses)
    assert distances == sorted(distances)
    assert all(0.0 <= d <= 0.5 for d in distances)
    assert schedule.ordered


def test_pairs_are_reproducible_per_seed(tiny_dataset: Dataset) -> None:
    assert build_pairs(tiny_dataset, 10, seed=5) == build_pairs(tiny_dataset, 10, seed=5)
    assert build_pairs(tiny_dataset, 10, seed=5) != build_pairs(tiny_dataset, 10, seed=6)


def test_disabled_curriculum_shuffles_the_same_pairs(toy_poses: List[Pose3D]) -> None:
    ordered = build_pairs(toy_poses, 30, seed=1)
    shuffled = build_pairs(toy_poses, 30, seed=1, enabled=False)
    assert not shuffled.ordered
    key = lambda p: (p.source_index, p.target_index)  # noqa: E731
    assert sorted(ordered.pairs, key=key) == sorted(shuffled.pairs, key=key)


def test_schedule_rejects_unsorted_pairs() -> None:
    pairs = [
        TrainingPair(source_index=0, target_index=1, distance=0.3),
        TrainingPair(source_index=1, target_index=0, distance=0.1),
    ]
    with pytest.raises(ValueError):
        CurriculumSchedule(pairs=pairs)
    assert len(CurriculumSchedule(pairs=pairs, ordered=False)) == 2


def test_epoch_seed_is_deterministic_and_varies() -> None:
    assert epoch_seed(0, 1) == epoch_seed(0, 1)
    assert len({epoch_seed(0, e) for e in range(10)}) == 10


def test_epoch_iter_batches_in_order(toy_poses: List[Pose3D]) -> None:
    schedule = build_pairs(toy_poses, 5, seed=0)
    batches = list(epoch_iter(schedule, 2))
    assert [len(b) for b in batches] == [2, 2, 1]
    assert [p for b in batches for p in b] == schedule.pairs
    with pytest.raises(ValueError):
        list(epoch_iter(schedule, 0))


def test_scan_ties_go_to_smallest_index() -> None:
    f = np.array([1.0, 2, 3, 4, 5, 6, 7])
    g = np.array([7.0, 6, 5, 4, 3, 2, 1])
    index, distance = nearest_by_scan(f, np.stack([g, f, f]))
    assert index == 1
    assert distance < 1e-6
    with pytest.raises(DatasetError):
        nearest_by_scan(f, np.zeros((0, 7)))


def test_tree_matches_scan(toy_poses: List[Pose3D]) -> None:
    pool = identity_matrix(toy_poses[:16])
    tree = VantagePointTree(pool)
    for pose in toy_poses[16:]:
        query = pose_identity(pose).vec
        assert tree.query(query) == nearest_by_scan(query, pool)
    for i in range(16):
        assert tree.query(pool[i])[0] == i


def test_tree_tie_rule_matches_scan(toy_poses: List[Pose3D]) -> None:
    a, b = pose_identity(toy_poses[0]).vec, pose_identity(toy_poses[1]).vec
    pool = np.stack([b, a, a, b, a, b, a])
    tree = VantagePointTree(pool)
    assert tree.query(a)[0] == 1
    assert tree.query(b)[0] == 0


def test_empty_tree_raises() -> None:
    with pytest.raises(DatasetError):
        VantagePointTree(np.zeros((0, 7))).query(np.ones(7))


def test_nearest_source_finds_scaled_copy(toy_poses: List[Pose3D]) -> None:
    pool = toy_poses[:10]
    index, distance = nearest_source(toy_poses[3].scaled(2.0), pool)
    assert index == 3
    assert distance < 1e-6
    tree = VantagePointTree(identity_matrix(pool))
    assert nearest_source(toy_poses[3].scaled(2.0), pool, tree=tree)[0] == 3
    with pytest.raises(DatasetError):
        nearest_source(toy_poses[0], [])


def test_fit_parabola_recovers_coefficients() -> None:
    x = np.array([0.0, 1.0, 2.0, 3.0])
    a, b, c = fit_parabola(x, 2 * x**2 - 3 * x + 1)
    assert (a, b, c) == pytest.approx((2.0, -3.0, 1.0), abs=1e-9)
    with pytest.raises(MMHandValidationError):
        fit_parabola(x[:2], x[:2])
    with pytest.raises(MMHandValidationError):
        fit_parabola(x, x[:3])


def _truth_estimator(dataset: Dataset) -> Dict[bytes, Pose2D]:
    return {s.image.tobytes(): project(s.pose, s.camera) for s in dataset}


def test_correlation_table_and_perfect_generator(tiny_dataset: Dataset) -> None:
    """A generator returning the real target with a perfect estimator gives zero error everywhere."""
    truth = _truth_estimator(tiny_dataset)

    def generate(source: HandSample, target: HandSample) -> np.ndarray:
        return target.image

    report = epe_distance_correlation(generate, lambda img: truth[img.tobytes()], tiny_dataset, n_pairs=6, seed=1)
    assert report.table.num_rows == 6
    assert report.table.column_names == ["source", "target", "distance", "epe"]
    assert report.table.column("epe").to_pylist() == [0.0] * 6
    assert math.isnan(report.spearman)
    assert report.coefficients == pytest.approx((0.0, 0.0, 0.0), abs=1e-9)


def test_correlation_tracks_distance(tiny_dataset: Dataset) -> None:
    """Error proportional to pose distance has rank correlation 1."""
    identities = identity_matrix(tiny_dataset.poses())
    index = {s.image.tobytes(): i for i, s in enumerate(tiny_dataset)}
    offsets: Dict[int, float] = {}

    def generate(source: HandSample, target: HandSample) -> np.ndarray:
        s, t = index[source.image.tobytes()], index[target.image.tobytes()]
        cos = identities[s] @ identities[t] / (np.linalg.norm(identities[s]) * np.linalg.norm(identities[t]))
        offsets[t] = float(np.arccos(np.clip(cos, -1, 1)) / np.pi)
        return target.image

    def estimate(image: np.ndarray) -> Pose2D:
        t = index[image.tobytes()]
        keypoints = project(tiny_dataset[t].pose, tiny_dataset[t].camera).keypoints
        return Pose2D(keypoints=keypoints + np.array([1000.0 * offsets[t], 0.0]))

    report = epe_distance_correlation(generate, estimate, tiny_dataset, n_pairs=5, seed=2)
    distances = report.table.column("distance").to_pylist()
    if len(set(distances)) == len(distances):
        assert report.spearman == pytest.approx(1.0)
    expected = 1000.0 * np.asarray(distances)
    np.testing.assert_allclose(report.table.column("epe").to_numpy(), expected, rtol=1e-6, atol=1e-9)


def test_correlation_needs_three_pairs(tiny_dataset: Dataset) -> None:
    with pytest.raises(MMHandValidationError):
        epe_distance_correlation(lambda s, t: t.image, lambda img: None, tiny_dataset, n_pairs=2)  # type: ignore
