# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""End-to-end workflows behind the command-line surface.

Each function reads its inputs, runs one stage of the pipeline and writes its outputs atomically.
They are synchronous; `ServiceAsync` runs them in worker threads.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, TypeVar

import numpy as np
import pyarrow as pa
from pydantic import BaseModel, ValidationError

from coreason_mmhand.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from coreason_mmhand.curriculum import build_pairs, epe_distance_correlation
from coreason_mmhand.data import Dataset, HandSample, load_dataset, make_toy_dataset, save_dataset
from coreason_mmhand.data.io import camera_from_record
from coreason_mmhand.depth import DepthGenerator, depth_samples, train_depth_generator
from coreason_mmhand.evaluation import (
    ImageClassifier,
    OnnxImageClassifier,
    auc_20_50,
    build_augmented_set,
    epe,
    inception_score,
    mask_inception_score,
    mask_ssim,
    mmhand_generate_fn,
    pck_curve,
    pckb,
    split_indices,
    ssim,
    train_toy_classifier,
)
from coreason_mmhand.exceptions import CheckpointError, MMHandValidationError
from coreason_mmhand.gan import GanTrainer, train_gan
from coreason_mmhand.generator import MMHand, MMHandGenerator, PoseEmbedder, generator_forward
from coreason_mmhand.hpm import Hpm3D, estimate_keypoints, freeze, train_hpm3d_on_dataset
from coreason_mmhand.pose import Camera, Pose3D, project
from coreason_mmhand.schemas import (
    CameraConfig,
    ContourConfig,
    CurriculumConfig,
    DepthGenConfig,
    GeneratorConfig,
    HpmConfig,
    PoseFile,
    RunConfig,
    SplitSpec,
)
from coreason_mmhand.utils.io import read_png_rgb, write_csv, write_json, write_png_rgb
from coreason_mmhand.utils.logger import logger
from coreason_mmhand.utils.runtime import seed_everything

DEPTH_CHECKPOINT = "depth.ckpt"
HPM_CHECKPOINT = "hpm3d.ckpt"
MMHAND_CHECKPOINT = "mmhand.ckpt"
HISTOGRAM_BINS = 50
TOY_CLASSIFIER = "toy"

M = TypeVar("M", bound=BaseModel)


def _snapshot(model: Any) -> Dict[str, Any]:
    return dict(model.model_dump(mode="json"))


def load_run_config(path: Path) -> RunConfig:
    try:
        return RunConfig.load(path)
    except OSError as e:
        raise MMHandValidationError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise MMHandValidationError(f"config {path} is not valid JSON: {e}") from e


def load_depth_generator(path: Path) -> DepthGenerator:
    """Restore a depth generator from a "depth" checkpoint."""
    ckpt = load_checkpoint(path, "depth")
    try:
        config = DepthGenConfig.model_validate(ckpt.config)
    except ValidationError as e:
        raise CheckpointError(f"depth checkpoint carries an invalid config: {e}") from e
    gen = DepthGenerator(config)
    ckpt.load_into(gen.net)
    gen.net.eval()
    return gen


def load_estimator(path: Path) -> Hpm3D:
    """Restore a frozen 3D keypoint estimator from an "hpm3d" checkpoint."""
    ckpt = load_checkpoint(path, "hpm3d")
    try:
        config = HpmConfig.model_validate(ckpt.config)
    except ValidationError as e:
        raise CheckpointError(f"estimator checkpoint carries an invalid config: {e}") from e
    model = Hpm3D(config)
    ckpt.load_into(model)
    freeze(model)
    return model


def _restore_mmhand(path: Path) -> Tuple[MMHand, Checkpoint]:
    ckpt = load_checkpoint(path, "mmhand")
    try:
        gen_config = GeneratorConfig.model_validate(ckpt.config["generator"])
        contour_config = ContourConfig.model_validate(ckpt.config["contour"])
        depth_config = DepthGenConfig.model_validate(ckpt.config["depth"])
    except (KeyError, ValidationError) as e:
        raise CheckpointError(f"generator checkpoint carries an invalid config: {e}") from e
    network = MMHandGenerator(gen_config)
    ckpt.load_into(network, "generator")
    network.eval()
    depth_gen = None
    if ckpt.state_dict("depth"):
        depth_gen = DepthGenerator(depth_config)
        ckpt.load_into(depth_gen.net, "depth")
        depth_gen.net.eval()
    embedder = PoseEmbedder(contour_config, depth_config, depth_gen, source=gen_config.depth_source)
    return MMHand(network, embedder), ckpt


def load_mmhand(path: Path) -> MMHand:
    """Restore the generator, its depth network and its embedder settings from an "mmhand" checkpoint."""
    return _restore_mmhand(path)[0]


def _snapshot_section(ckpt: Checkpoint, key: str, model: Type[M]) -> Optional[M]:
    """Optional run-config section stored in a generator checkpoint; absent in older checkpoints."""
    if key not in ckpt.config:
        return None
    try:
        return model.model_validate(ckpt.config[key])
    except ValidationError as e:
        raise CheckpointError(f"generator checkpoint carries an invalid {key} config: {e}") from e


def _check_image_size(dataset: Dataset, size: int) -> None:
    for i, sample in enumerate(dataset):
        if sample.image.shape[:2] != (size, size):
            raise MMHandValidationError(
                f"config image_size is {size} but sample {i} is {sample.image.shape[1]}x{sample.image.shape[0]}"
            )


def run_make_toy(n: int, seed: int, out: Path, size: int) -> Path:
    return make_toy_dataset(n, seed, out, size=size)


def run_train_depth(config_path: Path, data: Path, out: Path) -> Dict[str, Path]:
    """Pretraining stage: the depth generator and the frozen image keypoint estimator.

    Writes `depth.ckpt`, `hpm3d.ckpt` and `depth_losses.csv` (mean generator loss per epoch) under `out`.
    """
    config = load_run_config(config_path)
    seed_everything(config.seed)
    dataset = load_dataset(data)
    _check_image_size(dataset, config.image_size)
    out.mkdir(parents=True, exist_ok=True)

    gen = train_depth_generator(depth_samples(dataset, config.depth), config.depth)
    save_checkpoint(out / DEPTH_CHECKPOINT, "depth", {"": gen.net}, _snapshot(config.depth))
    history = pa.table(
        {
            "epoch": pa.array(range(1, len(gen.history) + 1), type=pa.int64()),
            "loss": pa.array(gen.history, type=pa.float64()),
        }
    )
    write_csv(history, out / "depth_losses.csv")

    estimator = train_hpm3d_on_dataset(dataset, config.hpm)
    save_checkpoint(out / HPM_CHECKPOINT, "hpm3d", {"": estimator}, _snapshot(config.hpm))
    return {
        "depth": out / DEPTH_CHECKPOINT,
        "hpm3d": out / HPM_CHECKPOINT,
        "losses": out / "depth_losses.csv",
    }


def run_train_gan(config_path: Path, data: Path, depth_ckpt: Path, hpm_ckpt: Path, out: Path) -> Dict[str, Path]:
    """Train the generator against both discriminators with the curriculum ordering.

    Only the `split` part of the data retained by the run config is used. Writes `mmhand.ckpt` every
    `checkpoint_every` steps and at the end, plus `losses.csv` and `run_config.json`.
    """
    config = load_run_config(config_path)
    seed_everything(config.seed)
    dataset = load_dataset(data)
    _check_image_size(dataset, config.image_size)
    retained, _ = split_indices(len(dataset), config.split)
    if len(retained) < len(dataset):
        logger.info(f"Training on {len(retained)} of {len(dataset)} samples", seed=config.split.seed)
        dataset = dataset.subset(retained)
    depth_gen = load_depth_generator(depth_ckpt)
    estimator = load_estimator(hpm_ckpt)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "run_config.json", _snapshot(config))

    embedder = PoseEmbedder(config.contour, depth_gen.config, depth_gen, source=config.generator.depth_source)
    embeddings = embedder.embed_dataset(dataset)
    network = MMHandGenerator(config.generator)
    trainer = GanTrainer(network, config.gan, config.losses, estimator=estimator)
    snapshot = {
        "generator": _snapshot(config.generator),
        "contour": _snapshot(config.contour),
        "depth": _snapshot(depth_gen.config),
        "camera": _snapshot(config.camera),
        "curriculum": _snapshot(config.curriculum),
    }
    modules = {"generator": network, "depth": depth_gen.net}

    def checkpoint(step: int) -> None:
        save_checkpoint(out / MMHAND_CHECKPOINT, "mmhand", modules, {**snapshot, "step": step})

    log = train_gan(trainer, dataset, embeddings, config.curriculum, on_checkpoint=checkpoint)
    log.write_csv(out / "losses.csv")
    return {"checkpoint": out / MMHAND_CHECKPOINT, "losses": out / "losses.csv"}


def read_pose_file(path: Path) -> PoseFile:
    try:
        return PoseFile.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise MMHandValidationError(f"cannot read pose file {path}: {e}") from e


def _pose_and_camera(doc: PoseFile, image_size: Tuple[int, int]) -> Tuple[Pose3D, Optional[Camera]]:
    pose = Pose3D(joints=doc.pose3d)
    camera = camera_from_record(doc.camera, image_size) if doc.camera is not None else None
    return pose, camera


def run_generate(ckpt: Path, source_image: Path, source_pose: Path, target_pose: Path, out: Path) -> Path:
    """Render the source hand in the target pose and write it as PNG.

    The target file's camera is used when present, then the source file's, then the run config's camera
    stored in the checkpoint (when its size matches the image), then the default toy camera.
    """
    gen, restored = _restore_mmhand(ckpt)
    image = read_png_rgb(source_image)
    size = (int(image.shape[0]), int(image.shape[1]))
    try:
        s_pose, s_camera = _pose_and_camera(read_pose_file(source_pose), size)
        t_pose, t_camera = _pose_and_camera(read_pose_file(target_pose), size)
    except ValidationError as e:
        raise MMHandValidationError(f"invalid pose file: {e.errors()[0]['msg']}") from e
    run_camera = _snapshot_section(restored, "camera", CameraConfig)
    if run_camera is None or tuple(run_camera.image_size) != size:
        run_camera = CameraConfig.for_image_size(size[0])
    camera = t_camera or s_camera or run_camera.build()
    result = generator_forward(gen, image, s_pose, t_pose, camera)
    write_png_rgb(out, result)
    logger.info(f"Generated {out}")
    return out


def run_augment(ckpt: Path, data: Path, fraction: float, seed: int, out: Path) -> Path:
    """Build the augmented training set and save it with its provenance table.

    Nearest-pose queries use the vantage-point tree when the checkpoint's curriculum config asks for it.
    """
    spec = SplitSpec(reduction_fraction=fraction, seed=seed)
    gen, restored = _restore_mmhand(ckpt)
    curriculum = _snapshot_section(restored, "curriculum", CurriculumConfig) or CurriculumConfig()
    dataset = load_dataset(data)
    augmented = build_augmented_set(dataset, spec, mmhand_generate_fn(gen), use_vp_tree=curriculum.use_vp_tree)
    manifest = save_dataset(augmented.dataset, out)
    write_csv(augmented.provenance_table(), out / "provenance.csv")
    return manifest


def _mean_or_none(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def _inception_scores(pred: Dataset, gt: Dataset, classifier: ImageClassifier) -> Dict[str, Any]:
    shapes = {s.image.shape for s in pred}
    if len(shapes) != 1:
        raise MMHandValidationError(f"inception score needs equally sized images, got {sorted(shapes)}")
    images = pred.images()
    score, spread = inception_score(images, classifier)
    scores: Dict[str, Any] = {"inception_score": score, "inception_score_std": spread}
    if all(g.mask is not None and g.mask.shape == images.shape[1:3] for g in gt):
        masks = np.stack([g.mask for g in gt if g.mask is not None])
        score, spread = mask_inception_score(images, masks, classifier)
        scores.update(mask_inception_score=score, mask_inception_score_std=spread)
    else:
        logger.warning("Ground truth lacks matching masks; mask inception score skipped")
        scores.update(mask_inception_score=None, mask_inception_score_std=None)
    return scores


def evaluate_datasets(
    pred: Dataset, gt: Dataset, classifier: Optional[ImageClassifier] = None
) -> Tuple[Dict[str, Any], pa.Table]:
    """Pose and image metrics of aligned prediction and ground-truth datasets.

    Args:
        pred: Predicted (generated) samples.
        gt: Ground truth, aligned with `pred` by index.
        classifier: When given, inception score and mask inception score of the predicted images are added
            (the masked variant uses the ground-truth masks).

    Returns:
        Tuple[Dict[str, Any], pa.Table]: The metrics document and the PCK curve (threshold, pck).
    """
    if len(pred) != len(gt):
        raise MMHandValidationError(f"prediction set has {len(pred)} samples, ground truth has {len(gt)}")
    if len(gt) == 0:
        raise MMHandValidationError("cannot evaluate an empty dataset")
    pred2d = [project(s.pose, s.camera) for s in pred]
    gt2d = [project(s.pose, s.camera) for s in gt]
    curve = pck_curve(pred.poses(), gt.poses())
    scores: List[float] = []
    masked: List[float] = []
    for i, (p, g) in enumerate(zip(pred, gt, strict=True)):
        if p.image.shape != g.image.shape:
            logger.warning(
                f"Sample {i}: image shapes differ, SSIM skipped", pred_shape=p.image.shape, gt_shape=g.image.shape
            )
            continue
        scores.append(ssim(p.image, g.image))
        if g.mask is not None:
            masked.append(mask_ssim(p.image, g.image, g.mask))
    metrics: Dict[str, Any] = {
        "count": len(gt),
        "epe_mm": epe(pred.poses(), gt.poses()),
        "epe_px": epe(pred2d, gt2d),
        "pckb": pckb(pred2d, gt2d),
        "auc_20_50": auc_20_50(curve),
        "ssim": _mean_or_none(scores),
        "ssim_skipped": len(gt) - len(scores),
        "mask_ssim": _mean_or_none(masked),
    }
    if classifier is not None:
        metrics.update(_inception_scores(pred, gt, classifier))
    table = pa.table(
        {"threshold": pa.array(curve.thresholds, type=pa.float64()), "pck": pa.array(curve.pck, type=pa.float64())}
    )
    return metrics, table


def pck_csv_path(out: Path) -> Path:
    return out.with_name(f"{out.stem}_pck.csv")


def load_classifier(classifier: str, gt: Dataset) -> ImageClassifier:
    """`"toy"` trains the finger-extension classifier on the ground truth; anything else is an ONNX model path."""
    if classifier == TOY_CLASSIFIER:
        return train_toy_classifier(gt)
    path = Path(classifier)
    if not path.is_file():
        raise MMHandValidationError(f"classifier model {path} does not exist")
    return OnnxImageClassifier(path)


def run_evaluate(pred: Path, gt: Path, out: Path, classifier: Optional[str] = None) -> Dict[str, Any]:
    """Write the metrics JSON to `out` and the PCK curve next to it as `<stem>_pck.csv`.

    With `classifier` ("toy" or an ONNX model path) the JSON also carries the inception scores.
    """
    pred_set, gt_set = load_dataset(pred), load_dataset(gt)
    image_classifier = load_classifier(classifier, gt_set) if classifier is not None else None
    metrics, curve = evaluate_datasets(pred_set, gt_set, image_classifier)
    write_csv(curve, pck_csv_path(out))
    write_json(out, metrics)
    logger.info("Evaluation complete", **{k: v for k, v in metrics.items() if v is not None})
    return metrics


def distance_histogram(distances: np.ndarray, bins: int) -> pa.Table:
    """Equal-width counts over the full distance range [0, 0.5]."""
    counts, edges = np.histogram(distances, bins=bins, range=(0.0, 0.5))
    return pa.table(
        {
            "bin_start": pa.array(edges[:-1], type=pa.float64()),
            "bin_end": pa.array(edges[1:], type=pa.float64()),
            "count": pa.array(counts, type=pa.int64()),
        }
    )


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def run_pair_stats(
    data: Path,
    n: int,
    seed: int,
    out: Path,
    ckpt: Optional[Path] = None,
    hpm_ckpt: Optional[Path] = None,
) -> Dict[str, Any]:
    """Pose-distance statistics of `n` seeded training pairs.

    Always writes `histogram.csv` (min(n, 50) bins), `pairs.csv` and `summary.json`. With a generator and an
    estimator checkpoint it also writes `scatter.csv` (per-pair keypoint error against distance) and adds the
    fitted parabola and rank correlation to the summary.
    """
    if n < 1:
        raise MMHandValidationError(f"--n must be positive, got {n}")
    dataset = load_dataset(data)
    schedule = build_pairs(dataset, num_pairs=n, seed=seed)
    distances = np.array([p.distance for p in schedule.pairs], dtype=np.float64)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(distance_histogram(distances, min(n, HISTOGRAM_BINS)), out / "histogram.csv")
    pairs = pa.table(
        {
            "source": pa.array([p.source_index for p in schedule.pairs], type=pa.int64()),
            "target": pa.array([p.target_index for p in schedule.pairs], type=pa.int64()),
            "distance": pa.array(distances, type=pa.float64()),
        }
    )
    write_csv(pairs, out / "pairs.csv")
    summary: Dict[str, Any] = {
        "pairs": int(len(distances)),
        "min_distance": float(distances.min()),
        "mean_distance": float(distances.mean()),
        "max_distance": float(distances.max()),
    }
    if ckpt is not None and hpm_ckpt is not None:
        gen = load_mmhand(ckpt)
        estimator = load_estimator(hpm_ckpt)

        def generate(source: HandSample, target: HandSample) -> np.ndarray:
            return generator_forward(gen, source.image, source.pose, target.pose, target.camera)

        report = epe_distance_correlation(
            generate, lambda image: estimate_keypoints(estimator, image), dataset, n, seed
        )
        write_csv(report.table, out / "scatter.csv")
        summary["parabola"] = list(report.coefficients)
        summary["spearman"] = _finite_or_none(report.spearman)
    write_json(out / "summary.json", summary)
    return summary
