import math
from typing import List

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from coreason_mmhand.evaluation import (
    PckCurve,
    apply_mask,
    auc_20_50,
    check_probabilities,
    default_thresholds,
    epe,
    inception_score,
    inception_score_from_probs,
    joint_errors,
    mask_inception_score,
    mask_ssim,
    pck_curve,
    pckb,
    ssim,
)
from coreason_mmhand.exceptions import DegeneratePoseError, MMHandValidationError, ShapeMismatchError
from coreason_mmhand.pose import Camera, Pose2D, Pose3D, project


def _reference_ssim(x: np.ndarray, y: np.ndarray) -> float:
    """Gaussian-window SSIM written out term by term, border of half a window excluded."""
    c1, c2 = 0.01**2, 0.03**2

    def blur(a: np.ndarray) -> np.ndarray:
        return gaussian_filter(a, sigma=1.5, mode="reflect", truncate=3.5)

    ux, uy = blur(x), blur(y)
    vx = blur(x * x) - ux * ux
    vy = blur(y * y) - uy * uy
    vxy = blur(x * y) - ux * uy
    s = ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux**2 + uy**2 + c1) * (vx + vy + c2))
    return float(s[5:-5, 5:-5].mean())


def _poses2d(poses: List[Pose3D], camera: Camera) -> List[Pose2D]:
    return [project(p, camera) for p in poses]


def test_ssim_of_identical_images_is_one(rng: np.random.Generator) -> None:
    x = rng.random((32, 32, 3))
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-9)


def test_ssim_matches_reference_on_binary_image(rng: np.random.Generator) -> None:
    x = (rng.random((32, 32)) > 0.5).astype(np.float64)
    assert ssim(x, 1.0 - x) == pytest.approx(_reference_ssim(x, 1.0 - x), abs=1e-9)


def test_ssim_rejects_shape_mismatch() -> None:
    with pytest.raises(ShapeMismatchError):
        ssim(np.zeros((16, 16)), np.zeros((16, 15)))


def test_full_mask_ssim_equals_ssim(rng: np.random.Generator) -> None:
    x, y = rng.random((24, 24, 3)), rng.random((24, 24, 3))
    assert mask_ssim(x, y, np.ones((24, 24), dtype=bool)) == ssim(x, y)


def test_apply_mask_zeroes_background() -> None:
    mask = np.zeros((4, 4), dtype=bool)
    mask[1:3, 1:3] = True
    out = apply_mask(np.ones((4, 4, 3)), mask)
    assert out.sum() == 12.0
    with pytest.raises(ShapeMismatchError):
        apply_mask(np.ones((4, 4, 3)), np.ones((3, 3)))


def test_pckb_fixtures(toy_poses: List[Pose3D], camera: Camera) -> None:
    gt = _poses2d(toy_poses[:3], camera)
    assert pckb(gt, gt) == 1.0
    far = [Pose2D(keypoints=p.keypoints + 1e4) for p in gt]
    assert pckb(far, gt) == 0.0
    partial = []
    for p in gt:
        k = p.keypoints.copy()
        k[7:] += 1e4
        partial.append(Pose2D(keypoints=k))
    assert pckb(partial, gt) == pytest.approx(7 / 21)


def test_pckb_is_scale_invariant(toy_poses: List[Pose3D], camera: Camera, rng: np.random.Generator) -> None:
    gt = _poses2d(toy_poses[:4], camera)
    pred = [Pose2D(keypoints=p.keypoints + rng.normal(0, 2.0, (21, 2))) for p in gt]
    scaled_gt = [Pose2D(keypoints=p.keypoints * 3.0) for p in gt]
    scaled_pred = [Pose2D(keypoints=p.keypoints * 3.0) for p in pred]
    assert pckb(scaled_pred, scaled_gt) == pytest.approx(pckb(pred, gt))


def test_pckb_rejects_collapsed_ground_truth() -> None:
    flat = Pose2D(keypoints=np.zeros((21, 2)))
    with pytest.raises(DegeneratePoseError):
        pckb([flat], [flat])


def test_epe_fixtures(toy_poses: List[Pose3D]) -> None:
    gt = toy_poses[:2]
    assert epe(gt, gt) == 0.0
    joints = np.array(gt[0].joints)
    joints[4, 0] += 3.0
    assert epe([Pose3D(joints=joints)], [gt[0]]) == pytest.approx(3.0 / 21.0)


def test_joint_errors_validation(toy_poses: List[Pose3D], camera: Camera) -> None:
    with pytest.raises(ShapeMismatchError):
        joint_errors(toy_poses[:2], toy_poses[:3])
    with pytest.raises(MMHandValidationError):
        joint_errors([], [])
    with pytest.raises(MMHandValidationError):
        joint_errors([toy_poses[0], project(toy_poses[1], camera)], toy_poses[:2])  # type: ignore[list-item]
    with pytest.raises(ShapeMismatchError):
        joint_errors(_poses2d(toy_poses[:1], camera), toy_poses[:1])


def test_perfect_predictions_give_unit_curve(toy_poses: List[Pose3D]) -> None:
    curve = pck_curve(toy_poses[:3], toy_poses[:3])
    assert len(curve.thresholds) == 31
    assert curve.pck == [1.0] * 31
    assert auc_20_50(curve) == pytest.approx(1.0)


def test_constant_offset_curve(toy_poses: List[Pose3D]) -> None:
    gt = [Pose3D(joints=np.round(p.joints)) for p in toy_poses[:2]]
    pred = [Pose3D(joints=p.joints + np.array([30.0, 0.0, 0.0])) for p in gt]
    curve = pck_curve(pred, gt)
    for t, v in zip(curve.thresholds, curve.pck):
        assert v == (1.0 if t >= 30.0 else 0.0)
    assert abs(auc_20_50(curve) - 2.0 / 3.0) <= 1.0 / (2 * 30) + 1e-12


def test_default_thresholds() -> None:
    ts = default_thresholds()
    assert ts[0] == 20.0 and ts[-1] == 50.0 and len(ts) == 31


def test_pck_curve_validation() -> None:
    with pytest.raises(ValueError):
        PckCurve(thresholds=[20.0, 50.0], pck=[1.0, 0.5])
    with pytest.raises(ValueError):
        PckCurve(thresholds=[50.0, 20.0], pck=[0.5, 1.0])
    with pytest.raises(ValueError):
        PckCurve(thresholds=[20.0, 50.0], pck=[0.5])
    with pytest.raises(MMHandValidationError):
        auc_20_50(PckCurve(thresholds=[10.0, 40.0], pck=[0.0, 1.0]))


def test_inception_score_of_constant_classifier_is_one() -> None:
    probs = np.tile([0.2, 0.3, 0.5], (6, 1))
    score, spread = inception_score_from_probs(probs)
    assert score == pytest.approx(1.0)
    assert spread == 0.0


def test_inception_score_of_uniform_one_hot_is_class_count() -> None:
    score, _ = inception_score_from_probs(np.eye(4))
    assert score == pytest.approx(4.0)
    mean, spread = inception_score_from_probs(np.vstack([np.eye(4), np.eye(4)]), splits=2)
    assert mean == pytest.approx(4.0) and spread == pytest.approx(0.0)


def test_inception_score_validation() -> None:
    with pytest.raises(MMHandValidationError):
        check_probabilities(np.array([[0.5, 0.6]]))
    with pytest.raises(MMHandValidationError):
        check_probabilities(np.array([[-0.5, 1.5]]))
    with pytest.raises(MMHandValidationError):
        check_probabilities(np.zeros((0, 3)))
    with pytest.raises(MMHandValidationError):
        inception_score_from_probs(np.eye(3), splits=4)


def test_mask_inception_score_uses_masked_images() -> None:
    seen = []

    def classifier(images: np.ndarray) -> np.ndarray:
        seen.append(images.copy())
        return np.eye(2)[[0, 1]]

    masks = np.zeros((2, 4, 4), dtype=bool)
    score, _ = mask_inception_score(np.ones((2, 4, 4, 3)), masks, classifier)
    assert score == pytest.approx(2.0)
    assert not seen[0].any()
    assert inception_score(np.ones((2, 4, 4, 3)), classifier)[0] == pytest.approx(2.0)


def _direct_inception_score(probs: np.ndarray) -> float:
    marginal = probs.mean(axis=0)
    kl = [sum(p * math.log(p / q) for p, q in zip(row, marginal, strict=True)) for row in probs]
    return math.exp(sum(kl) / len(kl))


def test_inception_score_matches_a_direct_kl_computation() -> None:
    probs = np.random.default_rng(5).dirichlet(np.ones(5), size=40)
    score, _ = inception_score_from_probs(probs)
    assert abs(score - _direct_inception_score(probs)) <= 1e-9
    halves = [_direct_inception_score(probs[:20]), _direct_inception_score(probs[20:])]
    mean, spread = inception_score_from_probs(probs, splits=2)
    assert abs(mean - np.mean(halves)) <= 1e-9
    assert abs(spread - np.std(halves)) <= 1e-9
